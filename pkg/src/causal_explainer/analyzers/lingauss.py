"""
Linear-Gaussian Analysis

Closed-form tools for a linear-Gaussian map explained against a normal-CDF
linear classifier p(y=1|x) = Φ(s·aᵀx): the analytic optimum, the class
probability given α, a quadrature reference for I(α; Y), and the angle
measurements used to judge training runs.
"""

import logging
from typing import Any, Optional, Tuple

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.linalg import null_space
from scipy.special import xlogy

from ..core.probability import SeededRng, gaussian_sigmoid_expectation, normal_cdf
from ..models.classifiers import LinearSigmoidClassifier
from ..models.generative import LinearGaussianMap
from ..utils.errors import DimensionError, EstimatorError, ModelError

logger = logging.getLogger(__name__)


def _unit(a: Any) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    norm = np.linalg.norm(a)
    if norm == 0:
        raise ModelError("classifier normal must be nonzero")
    return a / norm


def aligned_optimum(a: Any, gamma: float = 0.05, L: Optional[int] = None) -> LinearGaussianMap:
    """
    The maximizer for K = 1: w_α ∝ a and W_βᵀa = 0, columns of norm √(1−γ).

    Args:
        a: Classifier normal (length N)
        gamma: Noise variance
        L: Noncausal factor count, default N−1 (an orthonormal complement of a)

    Returns:
        LinearGaussianMap with K = 1
    """
    unit = _unit(a)
    n = unit.size
    complement = null_space(unit[None, :])
    L = n - 1 if L is None else L
    if L > complement.shape[1]:
        raise DimensionError(f"only {complement.shape[1]} directions are orthogonal to a, asked for {L}")
    scale = np.sqrt(1.0 - gamma)
    W = np.column_stack([unit, complement[:, :L]]) * scale
    return LinearGaussianMap(W, K=1, gamma=gamma)


def _projection(g: LinearGaussianMap, a: np.ndarray,
                steepness: float) -> Tuple[np.ndarray, float]:
    """Classifier-space coefficients of α and the variance left by β and the noise."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    if a.size != g.data_dim:
        raise DimensionError(f"classifier normal has length {a.size}, map emits {g.data_dim}")
    c_alpha = steepness * (g.W_alpha.T @ a)
    c_beta = steepness * (g.W_beta.T @ a)
    residual_var = float(c_beta @ c_beta) + g.gamma * steepness ** 2 * float(a @ a)
    return c_alpha, residual_var


def analytic_class_probability(alpha: Any, g: LinearGaussianMap, a: Any,
                               steepness: float = 1.0) -> np.ndarray:
    """
    p(Y=1 | α) with β and the data noise integrated out exactly.

    s·aᵀx given α is Gaussian with mean s·aᵀW_α α and variance
    s²(‖W_βᵀa‖² + γ‖a‖²), so the probability is Φ(mean / √(1 + variance)).

    Args:
        alpha: One latent (K,) or rows (n, K); a 1-D array is read as n rows when K = 1
        g: Linear-Gaussian map
        a: Classifier normal
        steepness: Classifier steepness s

    Returns:
        Probabilities, one per row
    """
    c_alpha, residual_var = _projection(g, a, steepness)
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim == 0:
        alpha = alpha.reshape(1, 1)
    elif alpha.ndim == 1:
        alpha = alpha[:, None] if g.K == 1 else alpha[None, :]
    mu = alpha @ c_alpha
    if mu.size == 1:
        return np.array([gaussian_sigmoid_expectation(float(mu[0]), residual_var)])
    return normal_cdf(mu / np.sqrt(1.0 + residual_var))


def _binary_entropy_array(p: np.ndarray) -> np.ndarray:
    return -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p))


def quadrature_influence(g: LinearGaussianMap, a: Any, nodes: int = 200,
                         steepness: float = 1.0) -> float:
    """
    I(α; Y) by Gauss–Hermite quadrature over the α direction seen by the classifier.

    Only the projection c·α with c = s·W_αᵀa matters, and it is N(0, ‖c‖²);
    the remaining randomness is integrated analytically.

    Args:
        g: Linear-Gaussian map with K >= 1
        a: Classifier normal
        nodes: Quadrature order
        steepness: Classifier steepness s

    Returns:
        Nats
    """
    if g.K == 0:
        raise EstimatorError("quadrature influence needs K >= 1")
    c_alpha, residual_var = _projection(g, a, steepness)
    t, w = hermegauss(nodes)
    w = w / np.sqrt(2.0 * np.pi)
    p = normal_cdf(np.linalg.norm(c_alpha) * t / np.sqrt(1.0 + residual_var))
    marginal = float(np.sum(w * p))
    h_y = float(_binary_entropy_array(np.array(marginal)))
    h_y_given_alpha = float(np.sum(w * _binary_entropy_array(p)))
    return h_y - h_y_given_alpha


def column_cosine(u: Any, v: Any) -> float:
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))


def line_angle_degrees(u: Any, v: Any) -> float:
    """Angle between the lines spanned by u and v, in [0, 90] degrees."""
    cosine = min(abs(column_cosine(u, v)), 1.0)
    return float(np.degrees(np.arccos(cosine)))


def generated_marginal(g: LinearGaussianMap, f: LinearSigmoidClassifier, rng: SeededRng,
                       n: int = 100_000) -> float:
    """Monte Carlo p(Y=1) over generated data x̂ ~ N(0, WWᵀ + γI)."""
    z = rng.stream("latent").normal((n, g.latent_dim))
    x = g.generate(z, rng.stream("noise"))
    return float(np.mean(f.predict_proba(x).values[:, 1]))
