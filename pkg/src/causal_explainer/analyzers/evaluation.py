"""
Explanation Evaluation

What is done with a trained explainer: latent sweeps that visualize the data
aspect each factor controls, per-factor information flow to the classifier
output, and the accuracy drop when one factor is resampled from its prior.
"""

import logging
from dataclasses import dataclass
from typing import Any, List, Optional

import numpy as np

from ..core.probability import SeededRng
from ..datasets.base import LabeledData
from ..models.classifiers import ClassifierHandle
from ..models.generative import GenerativeMap, VaeModel
from ..utils.errors import BackendError, ConfigError, DimensionError
from .influence import factor_information_flow

logger = logging.getLogger(__name__)


@dataclass
class SweepGrid:
    """
    Decoded outputs and class probabilities along one latent factor.

    Attributes:
        anchors: Latent rows the sweep starts from, (A, K+L)
        factor: Swept latent index
        values: Offsets added to the anchor's factor, (S,)
        outputs: Decoded data, (A, S, N)
        probs: Classifier probabilities per cell, (A, S, M)
    """

    anchors: np.ndarray
    factor: int
    values: np.ndarray
    outputs: np.ndarray
    probs: np.ndarray

    @property
    def center(self) -> int:
        return self.values.size // 2


def latent_sweep(g: GenerativeMap, f: ClassifierHandle, anchors: Any, factor: int,
                 span: float = 3.0, steps: int = 7) -> SweepGrid:
    """
    Decode anchors while moving one latent factor across ±span.

    Args:
        g: Generative map, decoded deterministically
        f: Classifier evaluated on every cell
        anchors: Latent rows (A, K+L) or a single latent
        factor: Index in [0, K+L)
        span: Largest offset in prior standard deviations
        steps: Odd number of sweep values; the middle one is the anchor itself

    Returns:
        SweepGrid with A × steps cells
    """
    if not 0 <= factor < g.latent_dim:
        raise DimensionError(f"factor index {factor} outside [0, {g.latent_dim})")
    if steps < 1 or steps % 2 == 0:
        raise ConfigError(f"sweep steps must be a positive odd count, got {steps}")
    anchors = np.atleast_2d(np.asarray(anchors, dtype=np.float64))
    if anchors.shape[1] != g.latent_dim:
        raise DimensionError(f"anchors have width {anchors.shape[1]}, map expects {g.latent_dim}")

    values = np.linspace(-span, span, steps) if steps > 1 else np.zeros(1)
    n_anchor = anchors.shape[0]
    z = np.repeat(anchors[:, None, :], steps, axis=1)
    z[:, :, factor] += values[None, :]
    rows = z.reshape(-1, g.latent_dim)

    outputs = g.mean_output(rows)
    probs = f.predict_proba(outputs).values
    return SweepGrid(
        anchors=anchors,
        factor=factor,
        values=values,
        outputs=outputs.reshape(n_anchor, steps, g.data_dim),
        probs=probs.reshape(n_anchor, steps, f.num_classes),
    )


def encode_anchors(g: GenerativeMap, x: Any) -> np.ndarray:
    """Posterior means of data rows under the VAE encoder."""
    if not isinstance(g, VaeModel):
        raise BackendError(f"the {g.kind} backend has no encoder")
    mean, _, _ = g.encode(x, SeededRng(0))
    return mean.values


def per_factor_information_flow(g: GenerativeMap, f: ClassifierHandle, n_alpha: int,
                                n_beta: int, rng: SeededRng, n_x: int = 1) -> np.ndarray:
    """
    Information flow from each latent dimension to Y.

    The chosen factor is sampled in the outer loop and every other factor is
    marginalized the way β is in the joint estimator.

    Returns:
        Flows in nats, one per latent dimension (α first, then β)
    """
    flows = np.array([
        factor_information_flow(g, f, i, n_alpha, n_beta, rng.stream(f"factor{i}"), n_x)
        for i in range(g.latent_dim)
    ])
    logger.info(f"Per-factor information flow (nats): {np.round(flows, 4).tolist()}")
    return flows


@dataclass
class InterventionResult:
    """Classifier accuracy before and after resampling one latent factor."""

    factor: int
    original_acc: float
    reencoded_acc: float
    intervened_acc: float

    @property
    def drop(self) -> float:
        return self.reencoded_acc - self.intervened_acc


def intervention_accuracy_drop(g: GenerativeMap, f: ClassifierHandle, data: LabeledData,
                               factor: int, rng: SeededRng) -> InterventionResult:
    """
    Accuracy on the data, on its reconstructions, and with one factor resampled.

    Every sample is encoded to its posterior mean; the intervened copy has
    the chosen factor replaced by a fresh N(0, 1) draw per sample before
    decoding.

    Args:
        g: VAE explainer (needs an encoder)
        f: Classifier
        data: Labeled validation samples
        factor: Latent index to intervene on
        rng: Source of the replacement draws

    Returns:
        InterventionResult
    """
    if not isinstance(g, VaeModel):
        raise BackendError(f"interventions need an encoder; the {g.kind} backend has none")
    if data.labels is None:
        raise ConfigError("intervention accuracy needs labeled data")
    if not 0 <= factor < g.latent_dim:
        raise DimensionError(f"factor index {factor} outside [0, {g.latent_dim})")

    latents = encode_anchors(g, data.x)
    intervened = latents.copy()
    intervened[:, factor] = rng.stream(f"intervene{factor}").normal((latents.shape[0],))

    result = InterventionResult(
        factor=factor,
        original_acc=f.accuracy(data.x, data.labels),
        reencoded_acc=f.accuracy(g.mean_output(latents), data.labels),
        intervened_acc=f.accuracy(g.mean_output(intervened), data.labels),
    )
    logger.info(
        f"Intervention on factor {factor}: original {result.original_acc:.4f}, "
        f"re-encoded {result.reencoded_acc:.4f}, intervened {result.intervened_acc:.4f}"
    )
    return result


def intervention_table(g: GenerativeMap, f: ClassifierHandle, data: LabeledData,
                       rng: SeededRng, factors: Optional[List[int]] = None) -> List[InterventionResult]:
    """Intervention results for several factors, every factor by default."""
    factors = list(range(g.latent_dim)) if factors is None else factors
    return [intervention_accuracy_drop(g, f, data, i, rng) for i in factors]
