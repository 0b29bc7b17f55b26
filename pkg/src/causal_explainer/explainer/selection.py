"""
Parameter Selection

Chooses the latent counts (K, L) and the fidelity weight λ:

1. Optimizing only D, grow the number of latent factors until D plateaus;
   that count is the latent budget K+L.
2. Move one factor at a time from noncausal to causal. For each split, raise
   λ along a geometric ladder until D approaches the reference from step 1.
3. Stop when C plateaus and keep the split from just before the plateau.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from ..datasets.base import LabeledData
from ..models.classifiers import ClassifierHandle
from ..models.generative import GenerativeMap
from ..utils.errors import ConfigError
from ..utils.logging_config import format_metrics
from .config import TrainConfig
from .training import TrainTrace, train_explainer

logger = logging.getLogger(__name__)

TrainFn = Callable[[Union[str, GenerativeMap], ClassifierHandle, Optional[LabeledData], TrainConfig],
                   Tuple[GenerativeMap, TrainTrace]]

LAMBDA_BASE = 0.01
LAMBDA_MAX_EXPONENT = 10
NOISE_FLOOR_NATS = 0.02
RELATIVE_FLOOR = 1e-9
# D changes are measured against at least one nat
D_SCALE_FLOOR = 1.0


def lambda_ladder() -> List[float]:
    """Geometric λ candidates 0.01·2^j for j = 0..10."""
    return [LAMBDA_BASE * 2 ** j for j in range(LAMBDA_MAX_EXPONENT + 1)]


def relative_gain(new: float, old: float, floor: float = RELATIVE_FLOOR) -> float:
    return (new - old) / max(abs(old), floor)


@dataclass
class SelectionRow:
    """One (K, L) split with the λ chosen for it."""

    K: int
    L: int
    lam: float
    c: float
    d: float
    fidelity_met: bool
    lambda_attempts: int
    c_gain: Optional[float] = None
    plateau: bool = False


@dataclass
class SelectionTrace:
    """Everything the selection procedure measured and decided."""

    latent_budget: int
    budget_curve: Dict[int, float]
    d_reference: float
    plateau_eps: float
    plateau_eps_c: float
    fidelity_slack: float
    rows: List[SelectionRow] = field(default_factory=list)
    budget_plateaued: bool = True

    def k_plus_l_conserved(self) -> bool:
        return all(row.K + row.L == self.latent_budget for row in self.rows)


def _latent_budget_curve(backend: Union[str, GenerativeMap], f: ClassifierHandle,
                         data: Optional[LabeledData], base_cfg: TrainConfig, plateau_eps: float,
                         l_max: int, train_fn: TrainFn) -> Tuple[int, Dict[int, float], bool]:
    curve: Dict[int, float] = {}
    for L in range(1, l_max + 1):
        cfg = base_cfg.with_latents(0, L, lam=1.0)
        _, trace = train_fn(backend, f, data, cfg)
        curve[L] = trace.final_d
        logger.info(f"Latent budget: K+L={L}, D={curve[L]:.5f}")
        if L > 1:
            gain = relative_gain(curve[L], curve[L - 1], D_SCALE_FLOOR)
            if gain < plateau_eps:
                logger.info(f"D plateaued after {L - 1} factors (gain {gain:.4f} < {plateau_eps})")
                return L - 1, curve, True

    best = max(curve, key=lambda k: curve[k])
    logger.warning(f"D did not plateau within {l_max} factors, using best count {best}")
    return best, curve, False


def select_latent_budget(backend: Union[str, GenerativeMap], f: ClassifierHandle,
                         data: Optional[LabeledData], base_cfg: TrainConfig,
                         plateau_eps: float = 0.02, l_max: int = 16,
                         train_fn: TrainFn = train_explainer) -> int:
    """
    Number of latent factors after which D stops improving.

    Trains with K = 0 and λ = 1 for L = 1, 2, ... and returns the count
    after which one more factor improves D by less than ``plateau_eps``
    (relative). Without a plateau the best count up to ``l_max`` is returned
    with a warning.

    Args:
        backend: Generative backend name
        f: Classifier (only needed for dimension checks when K = 0)
        data: Training data
        base_cfg: Settings shared by every run
        plateau_eps: Relative improvement threshold, > 0
        l_max: Largest count tried
        train_fn: Training routine

    Returns:
        Latent budget K+L
    """
    if plateau_eps <= 0:
        raise ConfigError(f"plateau_eps must be positive, got {plateau_eps}")
    budget, _, _ = _latent_budget_curve(backend, f, data, base_cfg, plateau_eps, l_max, train_fn)
    return budget


def decide_from_trace(trace: SelectionTrace) -> Tuple[int, int, float]:
    """
    Apply the C plateau rule to recorded rows.

    A row plateaus when its relative C gain over the previous K is below
    the trace's threshold; the row before the first plateau is chosen. A
    first row whose C is under the noise floor plateaus immediately.

    Returns:
        (K, L, λ)
    """
    if not trace.rows:
        raise ConfigError("selection trace has no rows")
    chosen = trace.rows[0]
    for i, row in enumerate(trace.rows):
        if i == 0:
            row.c_gain = None
            row.plateau = row.c < NOISE_FLOOR_NATS
            if row.plateau:
                break
            continue
        previous = trace.rows[i - 1]
        row.c_gain = relative_gain(row.c, previous.c)
        row.plateau = row.c_gain < trace.plateau_eps_c
        if row.plateau:
            break
        chosen = row
    return chosen.K, chosen.L, chosen.lam


def _fit_lambda(backend: Union[str, GenerativeMap], f: ClassifierHandle,
                data: Optional[LabeledData], base_cfg: TrainConfig, K: int, L: int,
                threshold: float, train_fn: TrainFn) -> SelectionRow:
    ladder = lambda_ladder()
    best: Optional[SelectionRow] = None
    for attempt, lam in enumerate(ladder, start=1):
        cfg = base_cfg.with_latents(K, L, lam=lam)
        _, trace = train_fn(backend, f, data, cfg)
        row = SelectionRow(K, L, lam, trace.final_c, trace.final_d, trace.final_d >= threshold, attempt)
        logger.info(format_metrics({"K": K, "L": L, "lambda": f"{lam:g}", "C": row.c, "D": row.d}))
        if row.fidelity_met:
            return row
        if best is None or row.d > best.d:
            best = row
    best.lambda_attempts = len(ladder)
    logger.warning(
        f"lambda ladder exhausted for K={K}, L={L} without reaching D >= {threshold:.4f}; "
        f"continuing with lambda={best.lam:g}"
    )
    return best


def select_params(backend: Union[str, GenerativeMap], f: ClassifierHandle,
                  data: Optional[LabeledData], base_cfg: TrainConfig,
                  plateau_eps_c: float = 0.05, fidelity_slack: float = 0.05,
                  plateau_eps: float = 0.02, l_max: int = 16,
                  latent_budget: Optional[int] = None, k_max: Optional[int] = None,
                  train_fn: TrainFn = train_explainer) -> Tuple[int, int, float, SelectionTrace]:
    """
    Choose (K, L, λ) by growing K until C plateaus.

    Args:
        backend: Generative backend name
        f: Classifier to explain
        data: Training data
        base_cfg: Settings shared by every run
        plateau_eps_c: Relative C gain below which C has plateaued
        fidelity_slack: Allowed relative shortfall of D below the step-1 reference
        plateau_eps: Threshold for the latent-budget step
        l_max: Largest latent budget tried
        latent_budget: Skip step 1 and use this K+L (its reference D is still measured)
        k_max: Largest K tried, default the latent budget
        train_fn: Training routine

    Returns:
        (K, L, λ, SelectionTrace)
    """
    if latent_budget is None:
        budget, curve, plateaued = _latent_budget_curve(
            backend, f, data, base_cfg, plateau_eps, l_max, train_fn
        )
    else:
        _, trace = train_fn(backend, f, data, base_cfg.with_latents(0, latent_budget, lam=1.0))
        budget, curve, plateaued = latent_budget, {latent_budget: trace.final_d}, True

    d_reference = curve[budget]
    threshold = d_reference - fidelity_slack * max(abs(d_reference), D_SCALE_FLOOR)
    selection = SelectionTrace(
        latent_budget=budget,
        budget_curve=curve,
        d_reference=d_reference,
        plateau_eps=plateau_eps,
        plateau_eps_c=plateau_eps_c,
        fidelity_slack=fidelity_slack,
        budget_plateaued=plateaued,
    )
    logger.info(f"Latent budget {budget}, reference D={d_reference:.5f}, D threshold {threshold:.5f}")

    last_k = budget if k_max is None else min(k_max, budget)
    for K in range(1, last_k + 1):
        row = _fit_lambda(backend, f, data, base_cfg, K, budget - K, threshold, train_fn)
        selection.rows.append(row)
        decide_from_trace(selection)
        if row.plateau:
            if K == 1:
                logger.warning(f"C={row.c:.4f} nats at K=1 is below the noise floor")
            break

    K, L, lam = decide_from_trace(selection)
    logger.info(f"Selected K={K}, L={L}, lambda={lam:g}")
    return K, L, lam, selection


def c_is_nondecreasing(trace: SelectionTrace, tolerance: float = 0.03) -> bool:
    """Whether C never drops by more than ``tolerance`` from one K to the next."""
    c = np.array([row.c for row in trace.rows])
    return bool(np.all(np.diff(c) >= -tolerance)) if c.size > 1 else True
