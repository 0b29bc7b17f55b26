"""Tests for latent sweeps, per-factor flow, interventions and landscapes."""

import numpy as np
import pytest

from causal_explainer.analyzers.evaluation import (
    encode_anchors,
    intervention_accuracy_drop,
    intervention_table,
    latent_sweep,
    per_factor_information_flow,
)
from causal_explainer.analyzers.influence import decomposition_terms
from causal_explainer.analyzers.landscape import (
    angle_landscape,
    landscape_classifier,
    line_separation,
    orientation_map,
)
from causal_explainer.analyzers.lingauss import aligned_optimum
from causal_explainer.core.probability import SeededRng
from causal_explainer.datasets.base import LabeledData
from causal_explainer.models.classifiers import ConstantClassifier
from causal_explainer.models.generative import VaeModel
from causal_explainer.utils.errors import BackendError, ConfigError, DimensionError


def test_sweep_shapes_and_center(small_map, linear_classifier):
    anchors = np.array([[0.5, -0.2], [1.0, 1.0]])
    sweep = latent_sweep(small_map, linear_classifier, anchors, factor=0, span=2.0, steps=5)
    assert sweep.outputs.shape == (2, 5, 2)
    assert sweep.probs.shape == (2, 5, 2)
    np.testing.assert_allclose(sweep.values, [-2.0, -1.0, 0.0, 1.0, 2.0])
    np.testing.assert_allclose(sweep.outputs[:, sweep.center], small_map.mean_output(anchors))


def test_single_step_sweep_reproduces_anchors(small_map, linear_classifier):
    anchors = SeededRng(0).normal((3, 2))
    sweep = latent_sweep(small_map, linear_classifier, anchors, factor=1, steps=1)
    np.testing.assert_allclose(sweep.outputs[:, 0], small_map.mean_output(anchors))


def test_sweep_along_aligned_factor_moves_prediction(linear_classifier):
    g = aligned_optimum([1.0, 0.0])
    causal = latent_sweep(g, linear_classifier, np.zeros(2), factor=0)
    noncausal = latent_sweep(g, linear_classifier, np.zeros(2), factor=1)
    assert np.all(np.diff(causal.probs[0, :, 1]) > 0)
    np.testing.assert_allclose(noncausal.probs[0, :, 1], 0.5, atol=1e-9)


def test_sweep_argument_checks(small_map, linear_classifier):
    with pytest.raises(ConfigError):
        latent_sweep(small_map, linear_classifier, np.zeros(2), factor=0, steps=4)
    with pytest.raises(DimensionError):
        latent_sweep(small_map, linear_classifier, np.zeros(2), factor=2)
    with pytest.raises(DimensionError):
        latent_sweep(small_map, linear_classifier, np.zeros(3), factor=0)


def test_per_factor_flow(linear_classifier):
    flows = per_factor_information_flow(aligned_optimum([1.0, 0.0]), linear_classifier, 200, 400,
                                        SeededRng(1))
    assert flows.shape == (2,)
    assert flows[0] > 0.1
    assert flows[1] < 0.02


def _labeled_pixels(n=20, d=6):
    r = np.random.default_rng(0)
    return LabeledData(r.uniform(size=(n, d)), np.arange(n) % 2)


def test_intervention_with_constant_classifier_has_no_drop():
    vae = VaeModel(6, K=1, L=1, hidden=(8,), rng=SeededRng(0))
    f = ConstantClassifier([0.2, 0.8], input_dim=6)
    result = intervention_accuracy_drop(vae, f, _labeled_pixels(), factor=0, rng=SeededRng(1))
    assert result.original_acc == result.reencoded_acc == result.intervened_acc == 0.5
    assert result.drop == 0.0
    assert len(intervention_table(vae, f, _labeled_pixels(), SeededRng(1))) == 2


def test_intervention_preconditions(small_map, linear_classifier):
    vae = VaeModel(6, K=1, L=1, hidden=(8,), rng=SeededRng(0))
    f = ConstantClassifier([0.5, 0.5], input_dim=6)
    with pytest.raises(BackendError):
        intervention_accuracy_drop(small_map, linear_classifier, _labeled_pixels(d=2), 0, SeededRng(0))
    with pytest.raises(BackendError):
        encode_anchors(small_map, np.zeros((1, 2)))
    with pytest.raises(ConfigError):
        intervention_accuracy_drop(vae, f, LabeledData(np.zeros((3, 6))), 0, SeededRng(0))
    with pytest.raises(DimensionError):
        intervention_accuracy_drop(vae, f, _labeled_pixels(), 5, SeededRng(0))


def test_line_separation_wraps():
    assert line_separation(10.0, 170.0) == pytest.approx(20.0)
    assert line_separation(0.0, 90.0) == pytest.approx(90.0)
    assert line_separation(45.0, 45.0) == 0.0


def test_orientation_map_columns():
    g = orientation_map(0.0, 90.0, K=1, gamma=0.05)
    np.testing.assert_allclose(g.W.values, np.sqrt(0.95) * np.eye(2), atol=1e-12)
    assert g.data_fidelity().item() == pytest.approx(0.0, abs=1e-12)


def test_single_landscape_prefers_aligned_causal_column():
    land = angle_landscape("single", ["joint"], grid_res=45.0, n_alpha=300, n_beta=60, rng=SeededRng(0))
    np.testing.assert_allclose(land.angles, [0.0, 45.0, 90.0, 135.0])
    assert land.values["joint"].shape == (4, 4)
    assert land.argmax("joint")[0] == 0.0
    assert land.entropy_y is not None
    # orthogonal columns reproduce the identity data covariance
    assert land.fidelity[0, 2] == pytest.approx(0.0, abs=1e-12)
    assert land.fidelity[0, 0] < land.fidelity[0, 2]
    assert land.separation("joint", lam=1.0) == pytest.approx(90.0)


def test_single_landscape_is_symmetric_under_half_turns():
    budgets = {"n_alpha": 400, "n_beta": 100}
    land = angle_landscape("single", ["joint"], grid_res=45.0, rng=SeededRng(0), **budgets)
    f, K = landscape_classifier("single")
    for i, t1 in enumerate(land.angles):
        for j, t2 in enumerate(land.angles):
            for turned in ((t1 + 180.0, t2), (t1, t2 + 180.0)):
                g = orientation_map(*turned, K=K, gamma=0.05)
                h_y, cond = decomposition_terms(g, f, rng=SeededRng(0), **budgets)
                assert h_y - cond == pytest.approx(land.values["joint"][i, j], abs=0.02)
                assert g.data_fidelity().item() == pytest.approx(land.fidelity[i, j], abs=1e-9)


def test_and_landscape_separates_columns():
    land = angle_landscape("and", ["joint", "independent-conditional"], grid_res=90.0,
                           n_alpha=100, n_beta=100, rng=SeededRng(0))
    assert set(land.values) == {"joint", "independent-conditional"}
    assert land.entropy_y is None
    assert land.separation("joint") == pytest.approx(90.0)


def test_landscape_argument_checks():
    with pytest.raises(ConfigError):
        angle_landscape("single", ["joint"], grid_res=0.0)
    with pytest.raises(ConfigError):
        landscape_classifier("or")
    _, K = landscape_classifier("and")
    assert K == 2
