"""Tests for Adam, SGD with momentum and the dense layers."""

import numpy as np
import pytest

from causal_explainer.core.layers import Dense, Mlp
from causal_explainer.core.optim import Adam, AdamState, SgdMomentum, adam_step
from causal_explainer.core.probability import SeededRng
from causal_explainer.core.tensor import Tape, Tensor, reduce_sum
from causal_explainer.utils.errors import DimensionError, ShapeError


def test_first_adam_step_moves_by_learning_rate():
    state = AdamState()
    (up,) = adam_step([np.array([1.0, -2.0])], [np.array([0.3, -5.0])], state, lr=0.1)
    np.testing.assert_allclose(up, [1.1, -2.1], atol=1e-6)
    (down,) = adam_step([np.array([0.0])], [np.array([2.0])], AdamState(), lr=0.1, maximize=False)
    np.testing.assert_allclose(down, [-0.1], atol=1e-6)
    assert state.t == 1


def test_missing_gradient_is_zero():
    (same,) = adam_step([np.array([4.0])], [None], AdamState(), lr=0.5)
    np.testing.assert_allclose(same, [4.0])


def test_adam_shape_mismatch():
    with pytest.raises(ShapeError):
        adam_step([np.ones(2)], [np.ones(3)], AdamState(), lr=0.1)
    with pytest.raises(ShapeError):
        adam_step([np.ones(2)], [], AdamState(), lr=0.1)


def test_adam_ascends_concave_objective():
    x = Tensor([0.0, 10.0], requires_grad=True)
    target = np.array([3.0, -1.0])
    opt = Adam([x], lr=0.1, maximize=True)
    for _ in range(2000):
        opt.zero_grad()
        with Tape() as tape:
            diff = x - target
            tape.backward(-reduce_sum(diff * diff))
        opt.step()
    np.testing.assert_allclose(x.values, target, atol=1e-2)


def test_sgd_momentum_descends():
    x = Tensor([5.0], requires_grad=True)
    opt = SgdMomentum([x], lr=0.1, momentum=0.5)
    for _ in range(200):
        opt.zero_grad()
        with Tape() as tape:
            tape.backward(reduce_sum(x * x))
        opt.step()
    assert abs(x.values[0]) < 1e-6


def test_dense_layer_width_check():
    layer = Dense(3, 2, SeededRng(0))
    assert layer(Tensor(np.ones((4, 3)))).shape == (4, 2)
    with pytest.raises(DimensionError):
        layer(Tensor(np.ones((4, 5))))


def test_mlp_parameters_and_freeze():
    net = Mlp([4, 8, 3], SeededRng(1))
    assert len(net.parameters()) == 4
    assert net(Tensor(np.ones((2, 4)))).shape == (2, 3)
    net.freeze()
    assert not any(p.requires_grad for p in net.parameters())
    with pytest.raises(DimensionError):
        Mlp([4])
