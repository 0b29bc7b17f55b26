"""
Discrete SCM Oracle

Finite-alphabet structural causal models over the explanation DAG
(α → X ← β, X → Y) with exact information quantities by enumeration.
Information flow is computed literally from interventional distributions
obtained by deleting the mechanisms of intervened nodes, which makes these
routines an independent check on the Monte Carlo estimators.
"""

import functools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Set

import numpy as np
from scipy.special import xlogy

from ..core.probability import SeededRng
from ..utils.errors import EstimatorError, InvalidDistributionError

logger = logging.getLogger(__name__)

ROW_TOL = 1e-12
JOINT_TOL = 1e-9
MAX_STATES = 1_000_000


def _check_rows(table: np.ndarray, name: str) -> None:
    if np.any(table < 0) or not np.all(np.isfinite(table)):
        raise InvalidDistributionError(f"{name} has negative or non-finite entries")
    sums = table.sum(axis=-1)
    worst = float(np.max(np.abs(sums - 1.0)))
    if worst > ROW_TOL:
        raise InvalidDistributionError(f"{name} rows are not normalized (max deviation {worst:.3e})")


def _outer(tables: Sequence[np.ndarray]) -> np.ndarray:
    if not tables:
        return np.ones(1)
    return functools.reduce(np.multiply.outer, tables).reshape(-1)


@dataclass
class DiscreteSCM:
    """
    Conditional tables of the explanation DAG.

    Attributes:
        alpha_tables: Marginal p(α_i) for each causal factor
        beta_tables: Marginal p(β_j) for each noncausal factor
        p_x_given_latent: p(x | α, β) with axes (A_1..A_K, B_1..B_L, X)
        p_y_given_x: p(y | x) with axes (X, Y)
    """

    alpha_tables: List[np.ndarray]
    beta_tables: List[np.ndarray]
    p_x_given_latent: np.ndarray
    p_y_given_x: np.ndarray
    _n_states: int = field(init=False, repr=False, default=0)

    def __post_init__(self) -> None:
        self.alpha_tables = [np.asarray(t, dtype=np.float64).reshape(-1) for t in self.alpha_tables]
        self.beta_tables = [np.asarray(t, dtype=np.float64).reshape(-1) for t in self.beta_tables]
        self.p_x_given_latent = np.asarray(self.p_x_given_latent, dtype=np.float64)
        self.p_y_given_x = np.atleast_2d(np.asarray(self.p_y_given_x, dtype=np.float64))
        if not self.alpha_tables:
            raise InvalidDistributionError("an SCM needs at least one causal factor")
        for i, t in enumerate(self.alpha_tables):
            _check_rows(t, f"p(alpha_{i})")
        for j, t in enumerate(self.beta_tables):
            _check_rows(t, f"p(beta_{j})")

        expected = tuple(self.alpha_sizes + self.beta_sizes)
        if self.p_x_given_latent.shape[:-1] != expected:
            raise InvalidDistributionError(
                f"p(x|alpha,beta) has axes {self.p_x_given_latent.shape[:-1]}, expected {expected}"
            )
        if self.p_y_given_x.shape[0] != self.p_x_given_latent.shape[-1]:
            raise InvalidDistributionError(
                f"p(y|x) has {self.p_y_given_x.shape[0]} rows but X has "
                f"{self.p_x_given_latent.shape[-1]} values"
            )
        _check_rows(self.p_x_given_latent, "p(x|alpha,beta)")
        _check_rows(self.p_y_given_x, "p(y|x)")
        self._n_states = self.n_alpha * self.n_beta * self.x_size * self.y_size

    @property
    def alpha_sizes(self) -> List[int]:
        return [t.size for t in self.alpha_tables]

    @property
    def beta_sizes(self) -> List[int]:
        return [t.size for t in self.beta_tables]

    @property
    def K(self) -> int:
        return len(self.alpha_tables)

    @property
    def L(self) -> int:
        return len(self.beta_tables)

    @property
    def n_alpha(self) -> int:
        return int(np.prod(self.alpha_sizes))

    @property
    def n_beta(self) -> int:
        return int(np.prod(self.beta_sizes)) if self.beta_tables else 1

    @property
    def x_size(self) -> int:
        return int(self.p_x_given_latent.shape[-1])

    @property
    def y_size(self) -> int:
        return int(self.p_y_given_x.shape[1])

    def _check_enumerable(self) -> None:
        if self._n_states > MAX_STATES:
            raise EstimatorError(
                f"SCM has {self._n_states} joint states, enumeration is limited to {MAX_STATES}"
            )

    def p_alpha(self) -> np.ndarray:
        return _outer(self.alpha_tables)

    def p_beta(self) -> np.ndarray:
        return _outer(self.beta_tables)

    def truncated_joint(self, intervened: Set[str]) -> np.ndarray:
        """
        Product of the mechanisms of all nodes not in ``intervened``.

        Intervening on a node deletes its own factor; the result, indexed by
        (α, β, x, y) with α and β flattened, is the interventional
        distribution of the remaining nodes as a function of the intervened
        values.

        Args:
            intervened: Subset of {"alpha", "beta"}
        """
        unknown = set(intervened) - {"alpha", "beta"}
        if unknown:
            raise EstimatorError(f"only alpha and beta can be intervened on, got {sorted(unknown)}")
        self._check_enumerable()
        joint = self.p_x_given_latent.reshape(self.n_alpha, self.n_beta, self.x_size)[..., None]
        joint = joint * self.p_y_given_x[None, None, :, :]
        if "alpha" not in intervened:
            joint = joint * self.p_alpha()[:, None, None, None]
        if "beta" not in intervened:
            joint = joint * self.p_beta()[None, :, None, None]
        return joint

    def latent_joint(self) -> np.ndarray:
        """p(α_1, .., α_K, β, y) with one axis per causal factor and β flattened."""
        joint = self.truncated_joint(set()).sum(axis=2)
        return joint.reshape(tuple(self.alpha_sizes) + (self.n_beta, self.y_size))


def _flow(p_u: np.ndarray, p_v_do_u: np.ndarray) -> float:
    """Σ_u p(u) Σ_v p(v|do u) log(p(v|do u) / Σ_u' p(u') p(v|do u'))."""
    mixture = p_u @ p_v_do_u
    ratio = np.divide(p_v_do_u, mixture[None, :], out=np.ones_like(p_v_do_u),
                      where=mixture[None, :] > 0)
    return float(np.sum(p_u[:, None] * xlogy(p_v_do_u, ratio)))


def exact_information_flow(scm: DiscreteSCM, imposing_beta: bool = False) -> float:
    """
    Information flow from α to Y by literal do-truncation.

    Args:
        scm: Enumerable SCM
        imposing_beta: Also intervene on β and average the flow over p(β)

    Returns:
        Flow in nats
    """
    if not imposing_beta:
        # p(y | do α): delete α's mechanism, marginalize β and x
        p_y_do_alpha = scm.truncated_joint({"alpha"}).sum(axis=(1, 2))
        return _flow(scm.p_alpha(), p_y_do_alpha)

    p_alpha_do_beta = scm.truncated_joint({"beta"}).sum(axis=(2, 3))
    p_y_do_both = scm.truncated_joint({"alpha", "beta"}).sum(axis=2)
    p_beta = scm.p_beta()
    total = 0.0
    for b in range(scm.n_beta):
        if p_beta[b] == 0:
            continue
        total += p_beta[b] * _flow(p_alpha_do_beta[:, b], p_y_do_both[:, b, :])
    return float(total)


def _check_joint(joint: np.ndarray) -> np.ndarray:
    joint = np.asarray(joint, dtype=np.float64)
    if np.any(joint < 0) or not np.all(np.isfinite(joint)):
        raise InvalidDistributionError("joint table has negative or non-finite entries")
    total = float(joint.sum())
    if abs(total - 1.0) > JOINT_TOL:
        raise InvalidDistributionError(f"joint table sums to {total!r}, expected 1")
    return joint


def _entropy_of(joint: np.ndarray, keep: Sequence[int]) -> float:
    drop = tuple(i for i in range(joint.ndim) if i not in keep)
    marginal = joint.sum(axis=drop) if drop else joint
    return float(-np.sum(xlogy(marginal, marginal)))


def conditional_mutual_information(joint: np.ndarray, a_axes: Sequence[int],
                                   b_axes: Sequence[int], c_axes: Sequence[int] = ()) -> float:
    """
    I(A; B | C) of a joint table, each variable a set of axes.

    Computed as H(A,C) + H(B,C) − H(A,B,C) − H(C); zero when A or B is empty.
    """
    joint = _check_joint(joint)
    a, b, c = list(a_axes), list(b_axes), list(c_axes)
    if not a or not b:
        return 0.0
    return (
        _entropy_of(joint, a + c)
        + _entropy_of(joint, b + c)
        - _entropy_of(joint, a + b + c)
        - (_entropy_of(joint, c) if c else 0.0)
    )


def exact_mi(joint: np.ndarray) -> float:
    """
    Mutual information by enumeration.

    Args:
        joint: Table over (α, Y) for I(α; Y), or over (α, Y, β) for I(α; Y | β)

    Returns:
        Nats
    """
    joint = np.asarray(joint, dtype=np.float64)
    if joint.ndim == 2:
        return conditional_mutual_information(joint, [0], [1])
    if joint.ndim == 3:
        return conditional_mutual_information(joint, [0], [1], [2])
    raise InvalidDistributionError(f"exact_mi takes a 2-D or 3-D joint, got {joint.ndim}-D")


def joint_alpha_y(scm: DiscreteSCM) -> np.ndarray:
    """p(α, y) with α flattened."""
    return scm.truncated_joint(set()).sum(axis=(1, 2))


def joint_alpha_y_beta(scm: DiscreteSCM) -> np.ndarray:
    """p(α, y, β) with α and β flattened."""
    return np.transpose(scm.truncated_joint(set()).sum(axis=2), (0, 2, 1))


@dataclass
class IdentityReport:
    """Exact variant values and the residuals of the identities relating them."""

    values: Dict[str, float]
    residuals: Dict[str, float]

    @property
    def max_abs_residual(self) -> float:
        return max(abs(r) for r in self.residuals.values())


def variant_identity_check(scm: DiscreteSCM) -> IdentityReport:
    """
    Exact C, C_iu, C_ic, C_jc and the four identities linking them.

    (a) C    = C_iu + (1/K) Σ_i I(α_¬i; Y | α_i)
    (b) C_jc = C_ic + (1/K) Σ_i I(α_¬i; Y | β)
    (c) C_jc = C + I(α; β | Y)
    (d) C_ic = C_iu + (1/K) Σ_i I(α_i; α_¬i, β | Y)

    Args:
        scm: Enumerable SCM

    Returns:
        IdentityReport with residuals (left side minus right side)
    """
    joint = scm.latent_joint()
    K = scm.K
    alpha = list(range(K))
    beta = [K] if scm.L else []
    y = [K + 1]

    c_joint = conditional_mutual_information(joint, alpha, y)
    c_jc = conditional_mutual_information(joint, alpha, y, beta)
    c_iu_terms, c_ic_terms, a_terms, b_terms, d_terms = [], [], [], [], []
    for i in range(K):
        rest = [j for j in alpha if j != i]
        c_iu_terms.append(conditional_mutual_information(joint, [i], y))
        c_ic_terms.append(conditional_mutual_information(joint, [i], y, rest + beta))
        a_terms.append(conditional_mutual_information(joint, rest, y, [i]))
        b_terms.append(conditional_mutual_information(joint, rest, y, beta))
        d_terms.append(conditional_mutual_information(joint, [i], rest + beta, y))

    c_iu = float(np.mean(c_iu_terms))
    c_ic = float(np.mean(c_ic_terms))
    residuals = {
        "a": c_joint - c_iu - float(np.mean(a_terms)),
        "b": c_jc - c_ic - float(np.mean(b_terms)),
        "c": c_jc - c_joint - conditional_mutual_information(joint, alpha, beta, y),
        "d": c_ic - c_iu - float(np.mean(d_terms)),
    }
    values = {"C": c_joint, "C_iu": c_iu, "C_ic": c_ic, "C_jc": c_jc}
    logger.debug(f"variant identities: values {values}, residuals {residuals}")
    return IdentityReport(values, residuals)


def random_scm(rng: SeededRng, alpha_sizes: Sequence[int], beta_sizes: Sequence[int],
               x_size: int, y_size: int, concentration: float = 1.0) -> DiscreteSCM:
    """
    SCM with every table drawn from a symmetric Dirichlet distribution.

    Args:
        rng: Source of the tables
        alpha_sizes: Alphabet size of each causal factor
        beta_sizes: Alphabet size of each noncausal factor
        x_size: Alphabet size of X
        y_size: Alphabet size of Y
        concentration: Dirichlet parameter

    Returns:
        DiscreteSCM
    """

    def draw(size: int, rows: int = 1) -> np.ndarray:
        table = rng.dirichlet(np.full(size, concentration), size=rows)
        return table / table.sum(axis=-1, keepdims=True)

    alpha_tables = [draw(a)[0] for a in alpha_sizes]
    beta_tables = [draw(b)[0] for b in beta_sizes]
    latent_shape = tuple(alpha_sizes) + tuple(beta_sizes)
    n_latent = int(np.prod(latent_shape))
    p_x = draw(x_size, n_latent).reshape(latent_shape + (x_size,))
    p_y = draw(y_size, x_size)
    return DiscreteSCM(alpha_tables, beta_tables, p_x, p_y)
