"""ParamStore and optimizer tests."""

import math

import numpy as np
import pytest

from promptlink import autodiff as ad
from promptlink.errors import TrainError, ValidationError
from promptlink.params import AdamW, ParamStore


def test_duplicate_name_rejected():
    store = ParamStore()
    store.add("w", np.zeros(2))
    with pytest.raises(ValidationError):
        store.add("w", np.zeros(2))


def test_gradient_accumulator_matches_shape():
    store = ParamStore()
    t = store.add("w", np.ones((3, 2)))
    assert t.grad.shape == (3, 2)
    assert np.all(t.grad == 0.0)


def test_zero_gradients_with_zero_weight_decay_leaves_params_unchanged():
    store = ParamStore()
    t = store.add("w", np.array([1.0, -2.0], dtype=np.float64))
    opt = AdamW(store, lr=0.1, weight_decay=0.0)
    opt.step()
    np.testing.assert_allclose(t.data, [1.0, -2.0])


def test_update_moves_against_gradient_sign():
    store = ParamStore()
    t = store.add("w", np.array([0.0], dtype=np.float64))
    opt = AdamW(store, lr=0.05, weight_decay=0.0)
    for _ in range(5):
        t.grad[...] = 2.0
        opt.step()
    assert t.data[0] < 0.0


def test_first_step_hand_value():
    # p=1, g=1, lr=0.1, betas (0.9, 0.999), eps 1e-8, wd 0:
    # m_hat = 1, and with the step size folding in the bias corrections,
    # p' = 1 - lr*sqrt(1-b2)/(1-b1) * m / (sqrt(v) + eps)
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
    m = (1 - b1) * 1.0
    v = (1 - b2) * 1.0
    expected = 1.0 - lr * math.sqrt(1 - b2) / (1 - b1) * m / (math.sqrt(v) + eps)

    store = ParamStore()
    t = store.add("w", np.array([1.0], dtype=np.float64))
    opt = AdamW(store, lr=lr, betas=(b1, b2), eps=eps, weight_decay=0.0)
    t.grad[...] = 1.0
    opt.step()
    assert t.data[0] == pytest.approx(expected, abs=1e-15)
    assert t.data[0] == pytest.approx(0.9000000316, abs=1e-9)


def test_step_zeroes_gradients_and_increments_counter():
    store = ParamStore()
    t = store.add("w", np.array([1.0]))
    opt = AdamW(store, lr=0.1)
    t.grad[...] = 1.0
    opt.step()
    assert opt.t == 1
    assert np.all(t.grad == 0.0)


def test_non_finite_gradient_names_parameter():
    store = ParamStore()
    t = store.add("bad.weight", np.array([1.0]))
    opt = AdamW(store, lr=0.1)
    t.grad = np.array([np.inf], dtype=np.float32)
    with pytest.raises(TrainError, match="bad.weight"):
        opt.step()


def test_decoupled_weight_decay_shrinks_parameters():
    store = ParamStore()
    t = store.add("w", np.array([10.0], dtype=np.float64))
    opt = AdamW(store, lr=0.1, weight_decay=0.5)
    opt.step()  # zero gradient: only the decay term acts
    assert t.data[0] == pytest.approx(10.0 * (1 - 0.1 * 0.5))


def test_load_arrays_validates_shapes():
    store = ParamStore()
    store.add("w", np.zeros((2, 2)))
    with pytest.raises(ValidationError):
        store.load_arrays({"w": np.zeros((3, 3))})
    with pytest.raises(ValidationError):
        store.load_arrays({"nope": np.zeros(1)})


def test_backward_then_step_descends_on_quadratic():
    store = ParamStore()
    w = store.add("w", np.array([3.0], dtype=np.float64))
    opt = AdamW(store, lr=0.3, weight_decay=0.0)
    values = []
    for _ in range(60):
        loss = ad.mul(w, w)
        ad.backward(ad.reshape(loss, ()))
        opt.step()
        values.append(abs(float(w.data[0])))
    assert values[-1] < 0.5
