"""
IDX Dataset Reader

Reads MNIST-style IDX image and label files (optionally gzipped), checks
their headers and sizes, splits them into training and validation parts
and keeps only the requested classes.

Image files start with the big-endian header (0x00000803, count, rows,
cols) followed by count·rows·cols unsigned bytes; label files start with
(0x00000801, count) followed by count bytes.
"""

import gzip
import logging
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Tuple

import numpy as np

from ..utils.errors import (
    DatasetError,
    IdxCountMismatchError,
    IdxMagicError,
    IdxTrailingBytesError,
    IdxTruncatedError,
)
from .base import LabeledData

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
IMAGE_HEADER = struct.Struct(">IIII")
LABEL_HEADER = struct.Struct(">II")
TRAIN_FRACTION = (5, 6)


@dataclass
class IdxDataset:
    """Training and validation parts of an IDX file pair, pixels scaled to [0, 1]."""

    train: LabeledData
    validation: Optional[LabeledData]
    rows: int
    cols: int
    classes: Tuple[int, ...]

    @property
    def num_samples(self) -> int:
        extra = self.validation.num_samples if self.validation is not None else 0
        return self.train.num_samples + extra


def _read_bytes(path: str) -> bytes:
    p = Path(path)
    if not p.exists():
        raise DatasetError(f"IDX file not found: {path}")
    raw = p.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError, zlib.error) as e:
            raise IdxTruncatedError(f"{path}: corrupt gzip stream ({e})") from e
    return raw


def _check_length(path: str, raw: bytes, expected: int, declared: str) -> None:
    if len(raw) < expected:
        raise IdxTruncatedError(
            f"{path}: header declares {declared} ({expected} bytes), file has only {len(raw)} bytes"
        )
    if len(raw) > expected:
        raise IdxTrailingBytesError(
            f"{path}: {len(raw) - expected} trailing bytes after the {declared} "
            f"({expected} bytes) the header declares"
        )


def read_idx_images(path: str) -> np.ndarray:
    """
    Parse an IDX image file.

    Args:
        path: File path, gzipped or raw

    Returns:
        uint8 array (count, rows, cols)

    Raises:
        IdxMagicError: Wrong magic number
        IdxTruncatedError: File shorter than the header declares
        IdxTrailingBytesError: File longer than the header declares
    """
    raw = _read_bytes(path)
    if len(raw) < IMAGE_HEADER.size:
        raise IdxTruncatedError(f"{path}: {len(raw)} bytes cannot hold an image header")
    magic, count, rows, cols = IMAGE_HEADER.unpack_from(raw)
    if magic != IMAGE_MAGIC:
        raise IdxMagicError(f"{path}: image magic is 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}")
    if rows == 0 or cols == 0:
        raise DatasetError(f"{path}: image extents {rows}x{cols} are empty")
    _check_length(path, raw, IMAGE_HEADER.size + count * rows * cols,
                  f"{count} images of {rows}x{cols}")
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=IMAGE_HEADER.size)
    return pixels.reshape(count, rows, cols)


def read_idx_labels(path: str) -> np.ndarray:
    """Parse an IDX label file into a uint8 vector, with the same checks as images."""
    raw = _read_bytes(path)
    if len(raw) < LABEL_HEADER.size:
        raise IdxTruncatedError(f"{path}: {len(raw)} bytes cannot hold a label header")
    magic, count = LABEL_HEADER.unpack_from(raw)
    if magic != LABEL_MAGIC:
        raise IdxMagicError(f"{path}: label magic is 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}")
    _check_length(path, raw, LABEL_HEADER.size + count, f"{count} labels")
    return np.frombuffer(raw, dtype=np.uint8, offset=LABEL_HEADER.size)


def _filtered(x: np.ndarray, labels: np.ndarray, keep: Optional[np.ndarray],
              name: str) -> Optional[LabeledData]:
    if keep is not None:
        mask = np.isin(labels, keep)
        x, labels = x[mask], labels[mask]
    if labels.size == 0:
        return None
    return LabeledData(x, labels.astype(np.int64), name)


def load_idx(image_path: str, label_path: str,
             class_filter: Optional[Iterable[int]] = None) -> IdxDataset:
    """
    Load an IDX image/label pair.

    The first 5/6 of the file is the training part and the rest the
    validation part (50,000 / 10,000 for a 60,000-item file); the split is
    made before class filtering so it does not depend on the filter.

    Args:
        image_path: IDX image file
        label_path: IDX label file
        class_filter: Labels to keep, all when empty or None

    Returns:
        IdxDataset with flattened images scaled to [0, 1]

    Raises:
        IdxMagicError, IdxTruncatedError, IdxCountMismatchError: Malformed files
        DatasetError: No training samples left after filtering
    """
    images = read_idx_images(image_path)
    labels = read_idx_labels(label_path)
    if images.shape[0] != labels.size:
        raise IdxCountMismatchError(
            f"{image_path} holds {images.shape[0]} images but {label_path} holds {labels.size} labels"
        )
    count, rows, cols = images.shape
    x = images.reshape(count, rows * cols).astype(np.float64) / 255.0

    keep = None
    if class_filter:
        keep = np.array(sorted(set(int(c) for c in class_filter)))
    n_train = count * TRAIN_FRACTION[0] // TRAIN_FRACTION[1]

    train = _filtered(x[:n_train], labels[:n_train], keep, "idx-train")
    if train is None:
        raise DatasetError(f"no training samples left after filtering to classes {keep}")
    validation = _filtered(x[n_train:], labels[n_train:], keep, "idx-validation")
    classes = tuple(int(c) for c in keep) if keep is not None else train.classes()

    logger.info(
        f"Loaded IDX data {rows}x{cols}: {train.num_samples} training, "
        f"{validation.num_samples if validation else 0} validation samples, classes {classes}"
    )
    return IdxDataset(train, validation, rows, cols, classes)
