"""Tests for the discrete SCM oracle."""

import numpy as np
import pytest

from causal_explainer.analyzers import scm as scm_module
from causal_explainer.analyzers.scm import (
    DiscreteSCM,
    conditional_mutual_information,
    exact_information_flow,
    exact_mi,
    joint_alpha_y,
    joint_alpha_y_beta,
    random_scm,
    variant_identity_check,
)
from causal_explainer.core.probability import SeededRng
from causal_explainer.utils.errors import EstimatorError, InvalidDistributionError


SHAPES = {
    "one-causal": ([3], [3], 4, 2),
    "two-causal": ([2, 3], [2], 4, 3),
}


@pytest.mark.parametrize("seed", range(100))
def test_variant_identities_hold(seed):
    scm = random_scm(SeededRng(seed), [2, 3], [2], x_size=4, y_size=3)
    report = variant_identity_check(scm)
    assert report.max_abs_residual < 1e-9
    assert report.values["C_jc"] >= report.values["C"] - 1e-12


def test_identities_without_noncausal_factors():
    scm = random_scm(SeededRng(11), [2, 2], [], x_size=3, y_size=2)
    report = variant_identity_check(scm)
    assert report.max_abs_residual < 1e-9
    assert report.values["C_jc"] == pytest.approx(report.values["C"])


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("seed", range(100))
def test_flow_equals_mutual_information_without_confounding(seed, shape):
    alpha_sizes, beta_sizes, x_size, y_size = SHAPES[shape]
    scm = random_scm(SeededRng(seed), alpha_sizes, beta_sizes, x_size=x_size, y_size=y_size)
    assert exact_information_flow(scm) == pytest.approx(exact_mi(joint_alpha_y(scm)), abs=1e-9)
    joint = joint_alpha_y_beta(scm)
    conditional = conditional_mutual_information(joint, [0], [1], [2])
    assert exact_information_flow(scm, imposing_beta=True) == pytest.approx(conditional, abs=1e-9)
    assert exact_mi(joint) == pytest.approx(conditional, abs=1e-12)


def test_exact_mi_reference_values():
    assert exact_mi(np.full((2, 2), 0.25)) == pytest.approx(0.0, abs=1e-15)
    assert exact_mi(np.diag([0.5, 0.5])) == pytest.approx(np.log(2))
    with pytest.raises(InvalidDistributionError):
        exact_mi(np.full((2, 2), 0.2))
    with pytest.raises(InvalidDistributionError):
        exact_mi(np.ones(4) / 4)


def test_conditional_mi_with_empty_side_is_zero():
    joint = np.full((2, 2, 2), 0.125)
    assert conditional_mutual_information(joint, [], [1]) == 0.0


def test_deterministic_copy_carries_all_information():
    # α uniform on 2 values, X = α, Y = X
    scm = DiscreteSCM(
        alpha_tables=[[0.5, 0.5]],
        beta_tables=[[0.3, 0.7]],
        p_x_given_latent=np.array([[[1.0, 0.0], [1.0, 0.0]], [[0.0, 1.0], [0.0, 1.0]]]),
        p_y_given_x=np.eye(2),
    )
    assert exact_information_flow(scm) == pytest.approx(np.log(2))
    assert variant_identity_check(scm).values["C"] == pytest.approx(np.log(2))


def test_invalid_tables_rejected():
    with pytest.raises(InvalidDistributionError):
        DiscreteSCM([[0.5, 0.6]], [], np.full((2, 2), 0.5), np.eye(2))
    with pytest.raises(InvalidDistributionError):
        DiscreteSCM([[0.5, 0.5]], [], np.full((3, 2), 0.5), np.eye(2))
    with pytest.raises(InvalidDistributionError):
        DiscreteSCM([[0.5, 0.5]], [], np.full((2, 3), 1 / 3), np.eye(2))
    with pytest.raises(InvalidDistributionError):
        DiscreteSCM([], [[1.0]], np.ones((1, 1)), np.ones((1, 1)))


def test_enumeration_limit(monkeypatch):
    scm = random_scm(SeededRng(0), [2], [2], x_size=3, y_size=2)
    monkeypatch.setattr(scm_module, "MAX_STATES", 10)
    with pytest.raises(EstimatorError):
        exact_information_flow(scm)
    with pytest.raises(EstimatorError):
        scm.truncated_joint({"x"})
