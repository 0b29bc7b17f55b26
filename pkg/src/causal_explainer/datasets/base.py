"""
Dataset Containers

Row-sample arrays with optional integer labels, shared by the IDX reader,
the synthetic generators and the training loops.
"""

from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from ..core.probability import SeededRng
from ..utils.errors import DatasetError


@dataclass
class LabeledData:
    """Samples as rows of ``x``; ``labels`` holds one integer per row when known."""

    x: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = "data"

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=np.float64)
        if self.x.ndim != 2 or self.x.shape[0] == 0:
            raise DatasetError(f"{self.name}: samples must form a non-empty 2-D array, got {self.x.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
            if self.labels.size != self.x.shape[0]:
                raise DatasetError(
                    f"{self.name}: {self.x.shape[0]} samples but {self.labels.size} labels"
                )

    @property
    def num_samples(self) -> int:
        return int(self.x.shape[0])

    @property
    def dim(self) -> int:
        return int(self.x.shape[1])

    def classes(self) -> Tuple[int, ...]:
        if self.labels is None:
            return ()
        return tuple(int(c) for c in np.unique(self.labels))

    def subset(self, index: np.ndarray) -> "LabeledData":
        labels = None if self.labels is None else self.labels[index]
        return LabeledData(self.x[index], labels, self.name)

    def batches(self, batch_size: int, rng: SeededRng) -> Iterator["LabeledData"]:
        """Yield shuffled mini-batches covering every sample once."""
        order = rng.permutation(self.num_samples)
        for start in range(0, self.num_samples, batch_size):
            yield self.subset(order[start:start + batch_size])

    def sample_batch(self, batch_size: int, rng: SeededRng) -> np.ndarray:
        """Draw ``batch_size`` rows uniformly with replacement."""
        return self.x[rng.integers(self.num_samples, (batch_size,))]
