"""
Causal Influence Estimation

Monte Carlo estimates of how much information flows from latent factors to
the classifier output. The joint estimate draws α, then β (and data noise)
for every α, pushes the samples through g and f, and forms

    I(α; Y) = H(p(y)) − E_α[H(p(y|α))]

from the averaged class probabilities. The independent and conditional
variants reuse the same grid with different factors in the conditioning
(outer), varied (inner) and marginalized roles.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.probability import SeededRng
from ..core.tensor import (
    Tensor,
    clip_min,
    log,
    mul,
    reduce_mean,
    reduce_sum,
    reshape,
    sub,
)
from ..models.classifiers import ClassifierHandle
from ..models.generative import GenerativeMap
from ..utils.errors import DimensionError, EstimatorError

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


class Variant(str, Enum):
    """Candidate causal objectives."""

    JOINT = "joint"
    INDEPENDENT_UNCONDITIONAL = "independent-unconditional"
    INDEPENDENT_CONDITIONAL = "independent-conditional"
    JOINT_CONDITIONAL = "joint-conditional"

    @property
    def symbol(self) -> str:
        return {
            Variant.JOINT: "C",
            Variant.INDEPENDENT_UNCONDITIONAL: "C_iu",
            Variant.INDEPENDENT_CONDITIONAL: "C_ic",
            Variant.JOINT_CONDITIONAL: "C_jc",
        }[self]


@dataclass
class InfluenceEstimate:
    """A causal-influence value in nats and the budget that produced it."""

    value: float
    variant: Variant
    n_alpha: int
    n_beta: int
    n_x: int
    seed: int
    per_factor: List[float] = field(default_factory=list)


@dataclass
class _GridTerms:
    value: Tensor
    outer_entropy: Tensor
    conditional_entropy: Tensor
    p_inner: Tensor


def _entropy_rows(p: Tensor) -> Tensor:
    """Entropy along the last axis with p·log p clamped at the probability floor."""
    return mul(-1.0, reduce_sum(mul(p, log(clip_min(p, PROB_FLOOR))), axis=-1))


def _check_pair(g: GenerativeMap, f: ClassifierHandle) -> None:
    if g.data_dim != f.input_dim:
        raise DimensionError(
            f"generative map emits dimension {g.data_dim} but classifier expects {f.input_dim}"
        )


def _check_budget(n_alpha: int, n_beta: int, n_x: int) -> None:
    if min(n_alpha, n_beta, n_x) < 1:
        raise EstimatorError(
            f"sample budgets must be >= 1, got n_alpha={n_alpha}, n_beta={n_beta}, n_x={n_x}"
        )


def grid_information(g: GenerativeMap, f: ClassifierHandle, outer: Sequence[int],
                     inner: Sequence[int], n_outer: int, n_inner: int, n_marginal: int,
                     n_x: int, rng: SeededRng) -> _GridTerms:
    """
    Estimate I(inner; Y | outer) on a nested sample grid.

    Latent indices not listed in ``outer`` or ``inner`` are marginalized:
    they are redrawn for every one of the ``n_marginal`` inner samples, as is
    the data-space noise (``n_x`` replicates per latent).

    Args:
        g: Generative map
        f: Classifier
        outer: Latent indices held fixed per outer sample (conditioning set)
        inner: Latent indices whose information is measured
        n_outer: Outer sample count (1 when ``outer`` is empty)
        n_inner: Samples of the inner factors per outer sample
        n_marginal: Samples of the marginalized factors per inner sample
        n_x: Data-noise replicates per latent
        rng: Source of all exogenous draws

    Returns:
        Grid terms; ``value`` is differentiable in g's parameters
    """
    Z = g.latent_dim
    outer = list(outer)
    inner = list(inner)
    marginal = [i for i in range(Z) if i not in outer and i not in inner]

    z = np.empty((n_outer, n_inner, n_marginal, Z))
    if outer:
        z[:, :, :, outer] = rng.stream("outer").normal((n_outer, 1, 1, len(outer)))
    if inner:
        z[:, :, :, inner] = rng.stream("inner").normal((n_outer, n_inner, 1, len(inner)))
    if marginal:
        z[:, :, :, marginal] = rng.stream("marginal").normal(
            (n_outer, n_inner, n_marginal, len(marginal))
        )

    total = n_outer * n_inner * n_marginal * n_x
    z_rows = np.repeat(z.reshape(-1, Z), n_x, axis=0)
    noise = None
    if g.noise_dim:
        noise = rng.stream("noise").normal((total, g.noise_dim))

    x = g.decode(z_rows, noise)
    probs = f.predict_proba(x)
    M = f.num_classes
    grid = reshape(probs, (n_outer, n_inner, n_marginal * n_x, M))

    p_inner = reduce_mean(grid, axis=2)
    p_outer = reduce_mean(p_inner, axis=1)
    outer_entropy = reduce_mean(_entropy_rows(p_outer))
    conditional_entropy = reduce_mean(_entropy_rows(p_inner))
    value = sub(outer_entropy, conditional_entropy)
    return _GridTerms(value, outer_entropy, conditional_entropy, p_inner)


def _joint_grid(g: GenerativeMap, f: ClassifierHandle, n_alpha: int, n_beta: int,
                n_x: int, rng: SeededRng) -> _GridTerms:
    return grid_information(g, f, [], list(range(g.K)), 1, n_alpha, n_beta, n_x, rng)


def influence_term(g: GenerativeMap, f: ClassifierHandle, variant: Variant, n_alpha: int,
                   n_beta: int, rng: SeededRng, n_x: int = 1) -> Tuple[Tensor, List[float]]:
    """
    Differentiable causal-influence value for one variant.

    Args:
        g: Generative map with K >= 1
        f: Classifier
        variant: Which objective to estimate
        n_alpha: Samples of the measured factors
        n_beta: Samples of the marginalized or conditioning factors
        rng: Source of all exogenous draws
        n_x: Data-noise replicates per latent

    Returns:
        (value tensor, per-factor values for the independent variants)
    """
    variant = Variant(variant)
    _check_pair(g, f)
    _check_budget(n_alpha, n_beta, n_x)
    if g.K == 0:
        raise EstimatorError(f"variant {variant.symbol} needs at least one causal factor (K=0)")

    K = g.K
    Z = g.latent_dim
    if variant is Variant.JOINT:
        return _joint_grid(g, f, n_alpha, n_beta, n_x, rng).value, []
    if variant is Variant.JOINT_CONDITIONAL:
        beta = list(range(K, Z))
        n_outer = n_beta if beta else 1
        terms = grid_information(g, f, beta, list(range(K)), n_outer, n_alpha, 1, n_x, rng)
        return terms.value, []

    values = []
    for i in range(K):
        others = [j for j in range(Z) if j != i]
        factor_rng = rng.stream(f"factor{i}")
        if variant is Variant.INDEPENDENT_UNCONDITIONAL:
            terms = grid_information(g, f, [], [i], 1, n_alpha, n_beta, n_x, factor_rng)
        else:
            n_outer = n_beta if others else 1
            terms = grid_information(g, f, others, [i], n_outer, n_alpha, 1, n_x, factor_rng)
        values.append(terms.value)

    total = values[0]
    for v in values[1:]:
        total = total + v
    return mul(1.0 / K, total), [v.item() for v in values]


def estimate_influence(g: GenerativeMap, f: ClassifierHandle, variant: Variant = Variant.JOINT,
                       n_alpha: int = 100, n_beta: int = 25, rng: Optional[SeededRng] = None,
                       n_x: int = 1) -> InfluenceEstimate:
    """
    Sample-based estimate of the causal influence of α on Y.

    For the joint variant with n_x = 1 this is the nested α/β sampling
    estimator; the other variants use the same grid with the factor roles
    rearranged.

    Args:
        g: Generative map
        f: Classifier
        variant: Objective variant
        n_alpha: Samples of α (or of α_i)
        n_beta: Samples of β per α, or conditioning samples for conditional variants
        rng: Source of all exogenous draws, default seed 0
        n_x: Data samples per latent

    Returns:
        InfluenceEstimate in nats
    """
    rng = rng or SeededRng(0)
    variant = Variant(variant)
    value, per_factor = influence_term(g, f, variant, n_alpha, n_beta, rng, n_x)
    estimate = InfluenceEstimate(
        value=value.item(),
        variant=variant,
        n_alpha=n_alpha,
        n_beta=n_beta,
        n_x=n_x,
        seed=rng.seed,
        per_factor=per_factor,
    )
    logger.debug(
        f"{variant.symbol} = {estimate.value:.4f} nats (n_alpha={n_alpha}, n_beta={n_beta}, n_x={n_x})"
    )
    return estimate


def decomposition_terms(g: GenerativeMap, f: ClassifierHandle, n_alpha: int, n_beta: int,
                        rng: SeededRng, n_x: int = 1) -> Tuple[float, float]:
    """
    H(Y) and E_α[H(Y|α)] from the joint estimator's sample grid.

    Their difference equals estimate_influence(joint) on the same rng.
    """
    _check_pair(g, f)
    _check_budget(n_alpha, n_beta, n_x)
    if g.K == 0:
        raise EstimatorError("decomposition needs at least one causal factor (K=0)")
    terms = _joint_grid(g, f, n_alpha, n_beta, n_x, rng)
    return terms.outer_entropy.item(), terms.conditional_entropy.item()


def factor_information_flow(g: GenerativeMap, f: ClassifierHandle, factor: int, n_alpha: int,
                            n_beta: int, rng: SeededRng, n_x: int = 1) -> float:
    """Information flow I(z_i; Y) of one latent dimension, all others marginalized."""
    _check_pair(g, f)
    _check_budget(n_alpha, n_beta, n_x)
    if not 0 <= factor < g.latent_dim:
        raise DimensionError(f"factor index {factor} outside [0, {g.latent_dim})")
    terms = grid_information(g, f, [], [factor], 1, n_alpha, n_beta, n_x, rng)
    return terms.value.item()


def map_prediction_error(g: GenerativeMap, f: ClassifierHandle, n_alpha: int, n_beta: int,
                         rng: SeededRng, n_x: int = 1) -> float:
    """
    MAP error of predicting Y from α, E_α[1 − max_y p(y|α)], on the joint grid.

    This is the quantity the capacity certificate bounds.
    """
    _check_pair(g, f)
    _check_budget(n_alpha, n_beta, n_x)
    if g.K == 0:
        raise EstimatorError("MAP prediction error from α needs K >= 1")
    p_alpha = _joint_grid(g, f, n_alpha, n_beta, n_x, rng).p_inner.values[0]
    return float(np.mean(1.0 - p_alpha.max(axis=1)))
