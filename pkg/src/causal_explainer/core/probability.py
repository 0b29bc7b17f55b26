"""
Probability Utilities

Categorical and Gaussian helpers shared by the analytic linear-Gaussian path
and the learned VAE path: entropies, KL divergences, the Gaussian-sigmoid
expectation identity and seeded sampling. All information quantities are in
nats.
"""

import logging
import zlib
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import erfc, xlogy

from ..utils.errors import InvalidDistributionError

logger = logging.getLogger(__name__)

SIMPLEX_TOL = 1e-9
SYMMETRY_TOL = 1e-12


@dataclass
class CategoricalDist:
    """A point on the M-simplex."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        self.probs = np.asarray(self.probs, dtype=np.float64).reshape(-1)
        if self.probs.size == 0:
            raise InvalidDistributionError("categorical distribution needs at least one class")
        if np.any(self.probs < 0) or not np.all(np.isfinite(self.probs)):
            raise InvalidDistributionError(f"negative or non-finite probability in {self.probs}")
        total = float(self.probs.sum())
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise InvalidDistributionError(f"probabilities sum to {total!r}, expected 1")

    @property
    def num_classes(self) -> int:
        return int(self.probs.size)

    def argmax(self) -> int:
        return int(np.argmax(self.probs))


@dataclass
class GaussianSpec:
    """Multivariate normal given by mean and symmetric positive-definite covariance."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        self.covariance = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        n = self.mean.size
        if self.covariance.shape != (n, n):
            raise InvalidDistributionError(
                f"covariance extents {self.covariance.shape} do not match mean length {n}"
            )
        if np.max(np.abs(self.covariance - self.covariance.T)) > SYMMETRY_TOL:
            raise InvalidDistributionError("covariance is not symmetric")
        if np.min(np.linalg.eigvalsh(self.covariance)) <= 0:
            raise InvalidDistributionError("covariance is not positive definite")

    @classmethod
    def zero_mean(cls, covariance: np.ndarray) -> "GaussianSpec":
        covariance = np.atleast_2d(np.asarray(covariance, dtype=np.float64))
        return cls(np.zeros(covariance.shape[0]), covariance)

    @property
    def dim(self) -> int:
        return int(self.mean.size)


@dataclass
class SeededRng:
    """
    Counter-based generator with named, order-independent substreams.

    Draws come from numpy's Philox bit generator keyed by the seed and a
    spawn path, so a substream's sequence depends only on its name (or spawn
    index) and never on how many draws its siblings made.
    """

    seed: int
    path: Tuple[int, ...] = ()
    _children: int = field(default=0, repr=False)

    def __post_init__(self) -> None:
        self.seed = int(self.seed) & 0xFFFFFFFFFFFFFFFF
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self._generator = np.random.Generator(np.random.Philox(sequence))

    def stream(self, name: str) -> "SeededRng":
        """Return the substream for a purpose such as "alpha", "beta" or "noise"."""
        return SeededRng(self.seed, self.path + (zlib.crc32(name.encode("utf-8")),))

    def spawn(self) -> "SeededRng":
        """Return the next numbered child stream (used once per training step)."""
        child = SeededRng(self.seed, self.path + (0x5EED0000 + self._children,))
        self._children += 1
        return child

    def normal(self, size: Sequence[int]) -> np.ndarray:
        return self._generator.standard_normal(tuple(size))

    def uniform(self, size: Sequence[int]) -> np.ndarray:
        return self._generator.random(tuple(size))

    def integers(self, high: int, size: Sequence[int]) -> np.ndarray:
        return self._generator.integers(0, high, size=tuple(size))

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def dirichlet(self, alpha: np.ndarray, size: Optional[int] = None) -> np.ndarray:
        return self._generator.dirichlet(alpha, size=size)


def entropy_categorical(d: CategoricalDist) -> float:
    """Shannon entropy in nats with the 0·log 0 = 0 convention."""
    return float(-xlogy(d.probs, d.probs).sum())


def binary_entropy(p: float) -> float:
    """
    Entropy of a Bernoulli(p) variable in nats.

    Args:
        p: Success probability in [0, 1]

    Returns:
        h_b(p), symmetric about 0.5
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidDistributionError(f"binary entropy needs p in [0, 1], got {p}")
    return float(-(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)))


def normal_cdf(x: np.ndarray) -> np.ndarray:
    """Standard-normal CDF through the complementary error function."""
    return 0.5 * erfc(-np.asarray(x, dtype=np.float64) / np.sqrt(2.0))


def gaussian_sigmoid_expectation(mu: float, var: float) -> float:
    """
    E[Φ(Z)] for Z ~ N(mu, var), where Φ is the standard-normal CDF.

    Args:
        mu: Mean of Z
        var: Variance of Z, non-negative

    Returns:
        Φ(mu / √(1 + var))
    """
    if var < 0:
        raise InvalidDistributionError(f"variance must be non-negative, got {var}")
    return float(normal_cdf(mu / np.sqrt(1.0 + var)))


def kl_std_normal_vs(g: GaussianSpec) -> float:
    """
    KL(N(0, I) ‖ N(0, Σ)) in closed form.

    Args:
        g: Zero-mean Gaussian with covariance Σ

    Returns:
        0.5·(tr Σ⁻¹ − N + ln|Σ|), zero iff Σ = I
    """
    if np.any(g.mean != 0):
        raise InvalidDistributionError("kl_std_normal_vs expects a zero-mean Gaussian")
    return kl_zero_mean(np.eye(g.dim), g.covariance)


def kl_zero_mean(cov_p: np.ndarray, cov_q: np.ndarray) -> float:
    """KL(N(0, cov_p) ‖ N(0, cov_q)) for positive-definite covariances."""
    cov_p = np.atleast_2d(np.asarray(cov_p, dtype=np.float64))
    cov_q = np.atleast_2d(np.asarray(cov_q, dtype=np.float64))
    sign_p, logdet_p = np.linalg.slogdet(cov_p)
    sign_q, logdet_q = np.linalg.slogdet(cov_q)
    if sign_p <= 0 or sign_q <= 0:
        raise InvalidDistributionError("covariance is not positive definite")
    n = cov_p.shape[0]
    trace_term = float(np.trace(np.linalg.solve(cov_q, cov_p)))
    return 0.5 * (trace_term - n + logdet_q - logdet_p)


def sample_std_normal(rng: SeededRng, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. standard-normal values."""
    if n < 1:
        raise InvalidDistributionError(f"sample count must be at least 1, got {n}")
    return rng.normal((n,))


def sample_covariance(x: np.ndarray) -> np.ndarray:
    """Zero-mean-agnostic sample covariance of row samples."""
    x = np.asarray(x, dtype=np.float64)
    centered = x - x.mean(axis=0, keepdims=True)
    return centered.T @ centered / max(x.shape[0] - 1, 1)
