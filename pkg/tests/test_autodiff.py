"""Tape primitives, gradient correctness against finite differences."""

import math

import numpy as np
import pytest

from gflowlab import autodiff as ad
from gflowlab.errors import DomainError, ShapeMismatch
from gflowlab.nn import MlpSpec, ParamStore, init_params, mlp_forward, mlp_forward_np

from conftest import assert_grads_close, finite_difference_grads


def scalar_leaf(store_value):
    store = ParamStore({"x": ()})
    store.set_group("x", np.asarray(store_value))
    return store


def test_primitive_values():
    t = ad.Tape()
    c = t.constant
    assert ad.sigmoid(c(0.0)).value == 0.5
    assert ad.logsumexp([c(0.0), c(0.0)]).item() == pytest.approx(math.log(2), abs=1e-15)
    assert ad.relu(c(-2.0)).item() == 0.0
    assert ad.square(c(3.0)).item() == 9.0
    assert ad.maximum(c(2.0), c(5.0)).item() == 5.0
    assert (c(6.0) / c(3.0)).item() == 2.0
    assert (-c(4.0)).item() == -4.0
    assert ad.tanh(c(0.0)).item() == 0.0


def test_log_of_non_positive_raises():
    t = ad.Tape()
    with pytest.raises(DomainError):
        ad.log(t.constant(-1.0))
    with pytest.raises(DomainError):
        ad.log(t.constant(0.0))


def test_division_by_zero_raises():
    t = ad.Tape()
    with pytest.raises(DomainError):
        t.constant(1.0) / t.constant(0.0)


def test_square_gradient():
    store = scalar_leaf(3.0)
    t = ad.Tape()
    ad.backward(ad.square(store.leaf(t, "x")))
    assert store.grads[0] == pytest.approx(6.0)


def test_sigmoid_gradient_at_zero():
    store = scalar_leaf(0.0)
    t = ad.Tape()
    ad.backward(ad.sigmoid(store.leaf(t, "x")))
    assert store.grads[0] == pytest.approx(0.25)


def test_backward_requires_scalar():
    t = ad.Tape()
    with pytest.raises(ShapeMismatch):
        ad.backward(t.constant(np.zeros(3)))


def test_backward_accumulates_and_is_linear():
    store = scalar_leaf(1.5)

    def loss_a():
        t = ad.Tape()
        return ad.square(store.leaf(t, "x"))

    def loss_b():
        t = ad.Tape()
        return ad.exp(store.leaf(t, "x"))

    ad.backward(loss_a())
    ad.backward(loss_b())
    separate = store.grads.copy()

    store.zero_grads()
    t = ad.Tape()
    x = store.leaf(t, "x")
    ad.backward(ad.square(x) + ad.exp(x))
    assert np.allclose(separate, store.grads, atol=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_random_expression_gradients(seed):
    rng = np.random.default_rng(seed)
    store = ParamStore({"a": (4,), "b": (4,)})
    store.set_group("a", rng.normal(size=4))
    store.set_group("b", rng.uniform(0.5, 2.0, size=4))

    def loss():
        t = ad.Tape()
        a = store.leaf(t, "a")
        b = store.leaf(t, "b")
        expr = ad.sigmoid(a * b) + ad.tanh(a - b) + ad.log(b) / b
        expr = ad.square(expr) + ad.relu(a) * ad.exp(-b)
        return ad.vsum(expr) + ad.logsumexp(a, axis=0)

    value = loss()
    ad.backward(value)
    got = store.grads.copy()
    store.zero_grads()
    expected = finite_difference_grads(lambda: loss().item(), store)
    assert_grads_close(got, expected)


def test_mlp_gradients_match_finite_differences(rng):
    spec = MlpSpec(3, (5, 4), 2, activation="tanh")
    store = init_params(spec, seed=0, include_log_z=False)
    x = rng.normal(size=(3, 3))
    w = rng.normal(size=2)

    def loss():
        t = ad.Tape()
        out = mlp_forward(t, store, spec, x)
        return ad.vsum(ad.square(ad.matmul(out, t.constant(w))))

    value = loss()
    ad.backward(value)
    got = store.grads.copy()
    store.zero_grads()
    expected = finite_difference_grads(lambda: loss().item(), store)
    assert_grads_close(got, expected)


def test_matmul_take_segment_gradients(rng):
    store = ParamStore({"w": (4, 3)})
    store.set_group("w", rng.normal(size=(4, 3)))
    x = rng.normal(size=(5, 4))
    rows = np.array([0, 1, 2, 3, 4])
    cols = np.array([0, 2, 1, 1, 0])
    segs = np.array([0, 0, 1, 1, 1])

    def loss():
        t = ad.Tape()
        h = ad.matmul(t.constant(x), store.leaf(t, "w"))
        picked = ad.take_pairs(h, rows, cols)
        return ad.vsum(ad.square(ad.segment_sum(picked, segs, 2)))

    ad.backward(loss())
    got = store.grads.copy()
    store.zero_grads()
    expected = finite_difference_grads(lambda: loss().item(), store)
    assert_grads_close(got, expected)


def test_logsumexp_axis_gradients(rng):
    store = ParamStore({"z": (3, 4)})
    store.set_group("z", rng.normal(size=(3, 4)))

    def loss():
        t = ad.Tape()
        z = store.leaf(t, "z")
        return ad.vsum(ad.logsumexp(z, axis=1, keepdims=True)) + \
            ad.mean(ad.logsumexp(z, axis=0))

    ad.backward(loss())
    got = store.grads.copy()
    store.zero_grads()
    expected = finite_difference_grads(lambda: loss().item(), store)
    assert_grads_close(got, expected)


def test_determinism_bit_identical():
    spec = MlpSpec(4, (8,), 3)
    store_a = init_params(spec, seed=7)
    store_b = init_params(spec, seed=7)
    assert np.array_equal(store_a.values, store_b.values)
    x = np.linspace(-1, 1, 8).reshape(2, 4)
    out_a = mlp_forward_np(store_a, spec, x)
    out_b = mlp_forward_np(store_b, spec, x)
    assert np.array_equal(out_a, out_b)

    def grads(store):
        t = ad.Tape()
        out = mlp_forward(t, store, spec, x)
        ad.backward(ad.vsum(ad.square(out)))
        g = store.grads.copy()
        store.zero_grads()
        return g

    assert np.array_equal(grads(store_a), grads(store_b))


def test_taped_and_plain_forward_agree():
    spec = MlpSpec(3, (6, 5), 2, activation="relu")
    store = init_params(spec, seed=3, include_log_z=False)
    x = np.random.default_rng(1).normal(size=(4, 3))
    t = ad.Tape()
    taped = mlp_forward(t, store, spec, x).value
    assert np.array_equal(taped, mlp_forward_np(store, spec, x))
