"""
Synthetic Datasets

Gaussian data sets used by the linear-Gaussian experiments, the classifier
tests and the parameter-selection checks. Every generator draws only from
the SeededRng it is given, so a seed fixes the data set.
"""

import logging
from typing import Any, Callable, Dict, Mapping, Optional

import numpy as np

from ..core.probability import SeededRng
from ..utils.errors import DatasetError
from .base import LabeledData

logger = logging.getLogger(__name__)

CLASS_OFFSET = 3.0

DEFAULT_PARAMS: Dict[str, Any] = {"data_dim": 2, "n_samples": 10000, "rank": 2}


def _isotropic(n: int, dim: int, rng: SeededRng, params: Mapping[str, Any]) -> LabeledData:
    return LabeledData(rng.normal((n, dim)), None, "isotropic-gaussian")


def _two_gaussian(n: int, dim: int, rng: SeededRng, params: Mapping[str, Any]) -> LabeledData:
    # exactly balanced: the first half is class 0, then shuffled
    labels = np.zeros(n, dtype=np.int64)
    labels[n // 2:] = 1
    labels = labels[rng.permutation(n)]
    x = rng.normal((n, dim))
    x[:, 0] += np.where(labels == 1, CLASS_OFFSET, -CLASS_OFFSET)
    return LabeledData(x, labels, "two-gaussian-labeled")


def _low_rank(n: int, dim: int, rng: SeededRng, params: Mapping[str, Any]) -> LabeledData:
    rank = int(params.get("rank", DEFAULT_PARAMS["rank"]))
    if not 1 <= rank <= dim:
        raise DatasetError(f"rank must lie in [1, {dim}], got {rank}")
    basis, _ = np.linalg.qr(rng.normal((dim, rank)))
    x = rng.normal((n, rank)) @ basis.T
    return LabeledData(x, None, "low-rank-gaussian")


def _three_class(n: int, dim: int, rng: SeededRng, params: Mapping[str, Any]) -> LabeledData:
    if dim < 2:
        raise DatasetError(f"three-class-gaussian needs data_dim >= 2, got {dim}")
    x = rng.normal((n, dim))
    labels = np.where(x[:, 0] < 0, 0, np.where(x[:, 1] < 0, 1, 2)).astype(np.int64)
    return LabeledData(x, labels, "three-class-gaussian")


GENERATORS: Dict[str, Callable[[int, int, SeededRng, Mapping[str, Any]], LabeledData]] = {
    "isotropic-gaussian": _isotropic,
    "two-gaussian-labeled": _two_gaussian,
    "low-rank-gaussian": _low_rank,
    "three-class-gaussian": _three_class,
}


def synth_dataset(kind: str, params: Optional[Mapping[str, Any]] = None,
                  rng: Optional[SeededRng] = None) -> LabeledData:
    """
    Generate a synthetic data set.

    Args:
        kind: One of isotropic-gaussian, two-gaussian-labeled,
            low-rank-gaussian, three-class-gaussian
        params: ``data_dim``, ``n_samples`` and (low-rank only) ``rank``
        rng: Random source; SeededRng(0) when omitted

    Returns:
        LabeledData, labeled for the two classification kinds

    Raises:
        DatasetError: Unknown kind or invalid parameters
    """
    if kind not in GENERATORS:
        raise DatasetError(f"unknown synthetic dataset '{kind}', expected one of {sorted(GENERATORS)}")
    merged = {**DEFAULT_PARAMS, **(params or {})}
    n, dim = int(merged["n_samples"]), int(merged["data_dim"])
    if n < 1 or dim < 1:
        raise DatasetError(f"n_samples and data_dim must be positive, got {n} and {dim}")

    data = GENERATORS[kind](n, dim, (rng or SeededRng(0)).stream(kind), merged)
    logger.info(f"Generated {kind}: {n} samples in R^{dim}")
    return data
