"""Shared fixtures for the causal-explainer test suite."""

import gzip
import os
import struct
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import pytest

from causal_explainer.core.probability import SeededRng
from causal_explainer.explainer.config import TrainConfig
from causal_explainer.models.classifiers import LinearSigmoidClassifier
from causal_explainer.models.generative import LinearGaussianMap

MNIST_ENV_VAR = "CAUSAL_EXPLAINER_MNIST_DIR"


def idx_image_bytes(images: np.ndarray, magic: int = 0x00000803,
                    count: Optional[int] = None) -> bytes:
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    header = struct.pack(">IIII", magic, n if count is None else count, rows, cols)
    return header + images.tobytes()


def idx_label_bytes(labels: Sequence[int], magic: int = 0x00000801,
                    count: Optional[int] = None) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8)
    header = struct.pack(">II", magic, labels.size if count is None else count)
    return header + labels.tobytes()


@pytest.fixture
def rng() -> SeededRng:
    return SeededRng(0)


@pytest.fixture
def idx_writer(tmp_path: Path) -> Callable[..., tuple]:
    """Write an IDX image/label pair and return both paths."""

    def write(images: np.ndarray, labels: Sequence[int], name: str = "data",
              compress: bool = False) -> tuple:
        image_raw = idx_image_bytes(images)
        label_raw = idx_label_bytes(labels)
        if compress:
            image_raw, label_raw = gzip.compress(image_raw), gzip.compress(label_raw)
        suffix = ".gz" if compress else ""
        image_path = tmp_path / f"{name}-images.idx3-ubyte{suffix}"
        label_path = tmp_path / f"{name}-labels.idx1-ubyte{suffix}"
        image_path.write_bytes(image_raw)
        label_path.write_bytes(label_raw)
        return str(image_path), str(label_path)

    return write


@pytest.fixture
def linear_classifier() -> LinearSigmoidClassifier:
    return LinearSigmoidClassifier([1.0, 0.0], "normal-cdf")


@pytest.fixture
def small_map() -> LinearGaussianMap:
    W = np.sqrt(0.95) * np.array([[0.8, -0.6], [0.6, 0.8]])
    return LinearGaussianMap(W, K=1, gamma=0.05)


@pytest.fixture
def quick_cfg() -> TrainConfig:
    """A few hundred cheap steps on the 2-D linear-Gaussian setting."""
    return TrainConfig(K=1, L=1, lam=0.05, n_alpha=64, n_beta=16, steps=300,
                       learning_rate=0.02, log_every=100)


@pytest.fixture
def mnist_dir() -> Path:
    path = os.getenv(MNIST_ENV_VAR)
    if not path or not Path(path).is_dir():
        pytest.skip(f"set {MNIST_ENV_VAR} to a directory holding the MNIST IDX files")
    return Path(path)
