"""
Objective Landscapes

Sweeps the orientations of the columns of a 2-D linear-Gaussian map and
records every objective variant and the data-fidelity term per cell. Two
settings are supported: a single logistic hyperplane explained with one
causal and one noncausal factor, and an "and" of two hyperplanes explained
with two causal factors.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..core.probability import SeededRng
from ..models.classifiers import AndClassifier, ClassifierHandle, LinearSigmoidClassifier
from ..models.generative import LinearGaussianMap
from ..utils.errors import ConfigError
from .influence import Variant, decomposition_terms, estimate_influence

logger = logging.getLogger(__name__)

LANDSCAPE_KINDS = ("single", "and")
DEFAULT_STEEPNESS = {"single": 5.0, "and": 100.0}


@dataclass
class AngleLandscape:
    """
    Per-cell objective values over a grid of column orientations.

    Axis 0 indexes the first column's angle (w_α or w_α1), axis 1 the second
    (w_β or w_α2).
    """

    kind: str
    angles: np.ndarray
    values: Dict[str, np.ndarray]
    fidelity: np.ndarray
    entropy_y: Optional[np.ndarray] = None
    budgets: Dict[str, int] = field(default_factory=dict)

    @property
    def grid_res(self) -> float:
        return float(self.angles[1] - self.angles[0]) if self.angles.size > 1 else 180.0

    def combined(self, variant: str, lam: float = 0.0) -> np.ndarray:
        return self.values[Variant(variant).value] + lam * self.fidelity

    def argmax(self, variant: str, lam: float = 0.0) -> Tuple[float, float]:
        """Angles (degrees) of the best cell for C + λ·D."""
        i, j = np.unravel_index(np.argmax(self.combined(variant, lam)), self.fidelity.shape)
        return float(self.angles[i]), float(self.angles[j])

    def separation(self, variant: str, lam: float = 0.0) -> float:
        """Angle between the two optimal column lines, in [0, 90] degrees."""
        first, second = self.argmax(variant, lam)
        return line_separation(first, second)


def line_separation(theta1: float, theta2: float) -> float:
    """Angle between two line orientations given mod 180 degrees."""
    d = abs(theta1 - theta2) % 180.0
    return min(d, 180.0 - d)


def orientation_map(theta1: float, theta2: float, K: int, gamma: float) -> LinearGaussianMap:
    """Linear-Gaussian map whose two columns point at the given angles, norm √(1−γ)."""
    t = np.radians([theta1, theta2])
    W = np.sqrt(1.0 - gamma) * np.array([np.cos(t), np.sin(t)])
    return LinearGaussianMap(W, K=K, gamma=gamma)


def landscape_classifier(kind: str, steepness: Optional[float] = None) -> Tuple[ClassifierHandle, int]:
    """The classifier of a landscape setting and its causal factor count."""
    if kind not in LANDSCAPE_KINDS:
        raise ConfigError(f"unknown landscape classifier '{kind}', expected {LANDSCAPE_KINDS}")
    s = DEFAULT_STEEPNESS[kind] if steepness is None else steepness
    if kind == "single":
        return LinearSigmoidClassifier([1.0, 0.0], "logistic", s), 1
    return AndClassifier([1.0, 0.0], [0.0, 1.0], s), 2


def angle_landscape(classifier_kind: str, variants: Sequence[str], grid_res: float = 15.0,
                    n_alpha: int = 2500, n_beta: int = 500, rng: Optional[SeededRng] = None,
                    gamma: float = 0.05, steepness: Optional[float] = None) -> AngleLandscape:
    """
    Evaluate objective variants over column orientations in [0°, 180°).

    Every cell uses the same random draws so that differences between cells
    reflect the orientations only.

    Args:
        classifier_kind: "single" (K = L = 1, a = [1, 0]) or "and" (K = 2, L = 0)
        variants: Variant names to evaluate
        grid_res: Angular step in degrees
        n_alpha: Estimator budget for α
        n_beta: Estimator budget for β
        rng: Common random numbers for all cells
        gamma: Noise variance of the map
        steepness: Logistic steepness, default 5 (single) or 100 (and)

    Returns:
        AngleLandscape
    """
    if grid_res <= 0 or grid_res > 90:
        raise ConfigError(f"grid resolution must lie in (0, 90] degrees, got {grid_res}")
    rng = rng or SeededRng(0)
    f, K = landscape_classifier(classifier_kind, steepness)
    variants = [Variant(v) for v in variants]
    angles = np.arange(0.0, 180.0, grid_res)
    n = angles.size

    values = {v.value: np.zeros((n, n)) for v in variants}
    fidelity = np.zeros((n, n))
    entropy_y = np.zeros((n, n)) if classifier_kind == "single" else None
    logger.info(
        f"Landscape '{classifier_kind}': {n}x{n} cells, variants "
        f"{[v.symbol for v in variants]}, n_alpha={n_alpha}, n_beta={n_beta}"
    )

    for i, t1 in enumerate(angles):
        for j, t2 in enumerate(angles):
            g = orientation_map(t1, t2, K, gamma)
            fidelity[i, j] = g.data_fidelity().item()
            for variant in variants:
                if variant is Variant.JOINT:
                    h_y, cond = decomposition_terms(g, f, n_alpha, n_beta, rng)
                    values[variant.value][i, j] = h_y - cond
                    if entropy_y is not None:
                        entropy_y[i, j] = h_y
                else:
                    estimate = estimate_influence(g, f, variant, n_alpha, n_beta, rng)
                    values[variant.value][i, j] = estimate.value
            if entropy_y is not None and Variant.JOINT not in variants:
                entropy_y[i, j] = decomposition_terms(g, f, n_alpha, n_beta, rng)[0]
        logger.debug(f"landscape row {i + 1}/{n} done")

    return AngleLandscape(
        kind=classifier_kind,
        angles=angles,
        values=values,
        fidelity=fidelity,
        entropy_y=entropy_y,
        budgets={"n_alpha": n_alpha, "n_beta": n_beta},
    )
