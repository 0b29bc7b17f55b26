"""
Optimizers

Adam (used to maximize the explanation objective) and SGD with momentum (used
to train the MLP classifier). Both update Tensor values in place from the
gradients the tape accumulated.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ..utils.errors import ShapeError
from .tensor import Tensor

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """First/second moment estimates and the step counter."""

    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)
    t: int = 0


def adam_step(params: Sequence[np.ndarray], grads: Sequence[Optional[np.ndarray]],
              state: AdamState, lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8, maximize: bool = True) -> List[np.ndarray]:
    """
    One bias-corrected Adam update.

    With ``maximize=True`` the update ascends the objective, which is the
    convention the explanation objective uses; ``False`` gives descent.
    A missing gradient counts as zero.

    Args:
        params: Current parameter arrays
        grads: Gradients with the same shapes
        state: Moment state, filled on the first call and advanced in place
        lr: Step size
        beta1: First-moment decay
        beta2: Second-moment decay
        eps: Denominator offset
        maximize: Ascend instead of descend

    Returns:
        New parameter arrays
    """
    if len(params) != len(grads):
        raise ShapeError(f"adam_step got {len(params)} parameters but {len(grads)} gradients")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    if len(state.m) != len(params):
        raise ShapeError(f"adam state tracks {len(state.m)} parameters, got {len(params)}")

    state.t += 1
    sign = 1.0 if maximize else -1.0
    correction1 = 1.0 - beta1 ** state.t
    correction2 = 1.0 - beta2 ** state.t

    updated = []
    for i, (p, g) in enumerate(zip(params, grads)):
        p = np.asarray(p, dtype=np.float64)
        g = np.zeros_like(p) if g is None else np.asarray(g, dtype=np.float64)
        if g.shape != p.shape or state.m[i].shape != p.shape:
            raise ShapeError(
                f"adam_step: parameter {i} has extents {p.shape}, gradient {g.shape}"
            )
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g
        m_hat = state.m[i] / correction1
        v_hat = state.v[i] / correction2
        updated.append(p + sign * lr * m_hat / (np.sqrt(v_hat) + eps))
    return updated


class Adam:
    """Adam over a fixed list of Tensors."""

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8, maximize: bool = True):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.maximize = maximize
        self.state = AdamState()

    def step(self) -> None:
        new_values = adam_step(
            [p.values for p in self.params],
            [p.grad for p in self.params],
            self.state,
            self.lr,
            self.beta1,
            self.beta2,
            self.eps,
            self.maximize,
        )
        for p, values in zip(self.params, new_values):
            p.values = values

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


class SgdMomentum:
    """Stochastic gradient descent with classical momentum."""

    def __init__(self, params: Sequence[Tensor], lr: float = 0.1, momentum: float = 0.5):
        self.params = list(params)
        self.lr = lr
        self.momentum = momentum
        self.velocity = [np.zeros_like(p.values) for p in self.params]

    def step(self) -> None:
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            self.velocity[i] = self.momentum * self.velocity[i] - self.lr * p.grad
            p.values = p.values + self.velocity[i]

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
