"""
Explainer Training

Maximizes C(α; Y) + λ·D over the parameters of a generative map with Adam.
C is re-estimated on fresh reparameterized samples every step; D is the
closed-form negative KL for the linear-Gaussian map and the batch ELBO for
the VAE.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from ..core.optim import Adam
from ..core.probability import SeededRng
from ..core.tensor import Tape, Tensor, add, as_tensor, mul
from ..datasets.base import LabeledData
from ..analyzers.influence import Variant, influence_term
from ..models.classifiers import ClassifierHandle
from ..models.generative import GenerativeMap, LinearGaussianMap, VaeModel, build_generative_map
from ..utils.errors import BackendError, DimensionError, DivergenceError
from ..utils.logging_config import format_metrics
from .config import TrainConfig

logger = logging.getLogger(__name__)

FINAL_WINDOW = 50


@dataclass
class TrainTrace:
    """Per-step values of C, D and the combined objective."""

    steps: List[int] = field(default_factory=list)
    c: List[float] = field(default_factory=list)
    d: List[float] = field(default_factory=list)
    total: List[float] = field(default_factory=list)
    seconds: List[float] = field(default_factory=list)

    def record(self, step: int, c: float, d: float, total: float, seconds: float) -> None:
        self.steps.append(step)
        self.c.append(c)
        self.d.append(d)
        self.total.append(total)
        self.seconds.append(seconds)

    def __len__(self) -> int:
        return len(self.steps)

    def _tail_mean(self, values: List[float]) -> float:
        if not values:
            return float("nan")
        return float(np.mean(values[-FINAL_WINDOW:]))

    @property
    def final_c(self) -> float:
        """C averaged over the last steps."""
        return self._tail_mean(self.c)

    @property
    def final_d(self) -> float:
        return self._tail_mean(self.d)

    @property
    def final_total(self) -> float:
        return self._tail_mean(self.total)

    def smoothed_c(self, window: int = 100) -> np.ndarray:
        """Moving average of C over ``window`` consecutive steps."""
        values = np.asarray(self.c, dtype=np.float64)
        if values.size < window:
            return np.array([values.mean()]) if values.size else values
        return np.convolve(values, np.ones(window) / window, mode="valid")

    def rows(self) -> List[Tuple[int, float, float, float, float]]:
        return list(zip(self.steps, self.c, self.d, self.total, self.seconds))


def combined_objective(g: GenerativeMap, f: ClassifierHandle, cfg: TrainConfig,
                       rng: SeededRng, batch: Optional[np.ndarray] = None
                       ) -> Tuple[Tensor, Tensor, Tensor]:
    """
    C + λ·D for one set of samples.

    Args:
        g: Generative map being trained
        f: Classifier
        cfg: Supplies λ, the variant and the estimator budgets
        rng: Source of this evaluation's draws
        batch: Data rows for the VAE ELBO; ignored by the linear-Gaussian map

    Returns:
        (total, C term, D term) as tensors on the active tape
    """
    if isinstance(g, VaeModel) and batch is None:
        raise BackendError("the VAE objective needs a data batch")
    if g.K == 0:
        c_term = as_tensor(0.0)
    else:
        c_term, _ = influence_term(
            g, f, Variant(cfg.variant), cfg.n_alpha, cfg.n_beta, rng.stream("influence"), cfg.n_x
        )
    d_term = g.data_fidelity(batch, rng.stream("fidelity"))
    total = add(c_term, mul(cfg.lam, d_term))
    return total, c_term, d_term


def train_explainer(backend: Union[str, GenerativeMap], f: ClassifierHandle,
                    data: Optional[LabeledData], cfg: TrainConfig
                    ) -> Tuple[GenerativeMap, TrainTrace]:
    """
    Train a generative map to explain a classifier.

    Args:
        backend: "lingauss", "vae", or an already built map to continue training
        f: Classifier, accessed only through its probabilities and gradients
        data: Training data (required for the VAE; sets the linear-Gaussian target covariance)
        cfg: Training settings

    Returns:
        (trained map with frozen parameters, trace)

    Raises:
        DivergenceError: If the objective becomes non-finite
    """
    cfg.validate()
    rng = SeededRng(cfg.seed)
    if isinstance(backend, GenerativeMap):
        g = backend
    else:
        data_dim = data.dim if data is not None else f.input_dim
        g = build_generative_map(
            backend, cfg.K, cfg.L, data_dim, rng.stream("init"),
            data.x if data is not None and backend == "lingauss" else None,
            gamma=cfg.gamma, normalize_columns=cfg.normalize_columns,
            hidden=cfg.vae_hidden, decode_mode=cfg.decode_mode,
        )
    if g.data_dim != f.input_dim:
        raise DimensionError(f"map emits dimension {g.data_dim} but classifier expects {f.input_dim}")
    if isinstance(g, VaeModel) and data is None:
        raise BackendError("the VAE backend needs training data")
    if data is not None and data.dim != g.data_dim:
        raise DimensionError(f"data has dimension {data.dim}, map emits {g.data_dim}")

    g.unfreeze()
    optimizer = Adam(
        g.parameters(), lr=cfg.learning_rate, beta1=cfg.adam_beta1, beta2=cfg.adam_beta2,
        eps=cfg.adam_eps, maximize=True,
    )
    project = isinstance(g, LinearGaussianMap) and cfg.normalize_columns
    trace = TrainTrace()
    step_rng = rng.stream("steps")
    logger.info(
        f"Training {g.kind} explainer: K={g.K}, L={g.L}, lambda={cfg.lam}, variant={cfg.variant}, "
        f"steps={cfg.steps}, lr={cfg.learning_rate}"
    )

    start = time.perf_counter()
    for step in range(cfg.steps):
        srng = step_rng.spawn()
        batch = None
        if isinstance(g, VaeModel) and data is not None:
            batch = data.sample_batch(cfg.batch_size, srng.stream("batch"))

        optimizer.zero_grad()
        with Tape() as tape:
            total, c_term, d_term = combined_objective(g, f, cfg, srng, batch)
            values = (total.item(), c_term.item(), d_term.item())
            if not all(np.isfinite(values)):
                raise DivergenceError(step, f"C={values[1]}, D={values[2]}")
            tape.backward(total)

        optimizer.step()
        if project:
            g.normalize_columns()
        trace.record(step, values[1], values[2], values[0], time.perf_counter() - start)

        if (step + 1) % cfg.log_every == 0 or step + 1 == cfg.steps:
            logger.info(
                f"step {step + 1}/{cfg.steps}: "
                + format_metrics({"C": values[1], "D": values[2], "total": values[0]})
            )

    g.freeze()
    logger.info(f"Training finished: final C={trace.final_c:.4f} nats, final D={trace.final_d:.4f}")
    return g, trace
