"""Tests for the autodiff engine: op semantics and gradient fidelity."""

import numpy as np
import pytest

from phishloc import tensor as T
from phishloc.errors import ConfigError, DimensionError, SequenceTooShortError

EULER_MASCHERONI = 0.5772156649


def central_diff(f, x, h=1e-5):
    """Finite-difference gradient of a scalar function of one array."""
    g = np.zeros_like(x)
    flat = g.reshape(-1)
    for i in range(x.size):
        xp = x.copy().reshape(-1)
        xm = x.copy().reshape(-1)
        xp[i] += h
        xm[i] -= h
        flat[i] = (f(xp.reshape(x.shape)) - f(xm.reshape(x.shape))) / (2 * h)
    return g


def rel_err(a, b):
    return np.max(np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b))))


class TestMatmul:
    def test_identity(self):
        a = np.arange(6, dtype=float).reshape(2, 3)
        out = T.matmul(T.Tensor(a), T.Tensor(np.eye(3)))
        np.testing.assert_array_equal(out.data, a)

    def test_hand_product(self):
        out = T.matmul(T.Tensor([[1.0, 2.0], [3.0, 4.0]]), T.Tensor([[1.0], [1.0]]))
        np.testing.assert_array_equal(out.data, [[3.0], [7.0]])

    def test_zero(self):
        a = np.random.default_rng(0).normal(size=(3, 4))
        out = T.matmul(T.Tensor(a), T.Tensor(np.zeros((4, 2))))
        np.testing.assert_array_equal(out.data, np.zeros((3, 2)))

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
            T.matmul(T.Tensor(np.ones((2, 3))), T.Tensor(np.ones((2, 3))))

    def test_associativity(self):
        rng = np.random.default_rng(5)
        a, b, c = (rng.normal(size=(4, 4)) for _ in range(3))
        left = T.matmul(T.matmul(T.Tensor(a), T.Tensor(b)), T.Tensor(c)).data
        right = T.matmul(T.Tensor(a), T.matmul(T.Tensor(b), T.Tensor(c))).data
        np.testing.assert_allclose(left, right, atol=1e-9)


class TestConv1d:
    def test_hand_sum(self):
        x = T.Tensor([[1.0], [2.0], [3.0]])
        kernel = T.Tensor(np.ones((3, 1, 1)))
        out = T.conv1d_valid(x, kernel, T.Tensor([0.0]))
        np.testing.assert_array_equal(out.data, [[6.0]])

    def test_zero_kernel_gives_bias(self):
        x = T.Tensor(np.random.default_rng(1).normal(size=(5, 2)))
        out = T.conv1d_valid(x, T.Tensor(np.zeros((3, 2, 4))), T.Tensor([1.0, 2.0, 3.0, 4.0]))
        np.testing.assert_array_equal(out.data, np.tile([1.0, 2.0, 3.0, 4.0], (3, 1)))

    def test_output_length(self):
        x = T.Tensor(np.zeros((5, 2)))
        out = T.conv1d_valid(x, T.Tensor(np.zeros((3, 2, 7))), T.Tensor(np.zeros(7)))
        assert out.shape == (3, 7)

    def test_too_short(self):
        with pytest.raises(SequenceTooShortError):
            T.conv1d_valid(T.Tensor(np.zeros((2, 1))), T.Tensor(np.zeros((3, 1, 1))),
                           T.Tensor(np.zeros(1)))

    def test_batched_matches_single(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(4, 6, 3))
        kernel = T.Tensor(rng.normal(size=(3, 3, 5)))
        bias = T.Tensor(rng.normal(size=5))
        batched = T.conv1d_valid(T.Tensor(x), kernel, bias).data
        for i in range(4):
            single = T.conv1d_valid(T.Tensor(x[i]), kernel, bias).data
            np.testing.assert_allclose(batched[i], single, atol=1e-12)


class TestGlobalMaxPool:
    def test_column_max(self):
        out = T.global_max_pool(T.Tensor([[1.0], [5.0], [3.0]]))
        np.testing.assert_array_equal(out.data, [5.0])

    def test_two_channels(self):
        out = T.global_max_pool(T.Tensor([[1.0, 9.0], [4.0, 2.0]]))
        np.testing.assert_array_equal(out.data, [4.0, 9.0])

    def test_tie_gradient_goes_to_first(self):
        x = T.Tensor(np.array([[2.0], [2.0], [2.0]]), requires_grad=True)
        with T.Tape() as tape:
            out = T.tsum(T.global_max_pool(x))
        T.backward(out, tape)
        np.testing.assert_array_equal(x.grad, [[1.0], [0.0], [0.0]])

    def test_empty_axis(self):
        with pytest.raises(DimensionError):
            T.global_max_pool(T.Tensor(np.zeros((0, 3))))


class TestActivations:
    def test_sigmoid_at_zero(self):
        assert T.apply_activation("sigmoid", T.Tensor([0.0])).data[0] == pytest.approx(0.5)

    def test_softmax_uniform(self):
        np.testing.assert_allclose(T.apply_activation("softmax", T.Tensor([0.0, 0.0])).data,
                                   [0.5, 0.5])

    def test_relu(self):
        np.testing.assert_array_equal(T.apply_activation("relu", T.Tensor([-1.0, 2.0])).data,
                                      [0.0, 2.0])

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            T.apply_activation("tanh", T.Tensor([0.0]))

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = rng.normal(scale=10, size=(4, 7))
            y = T.softmax(T.Tensor(x)).data
            assert np.all(y >= 0)
            np.testing.assert_allclose(y.sum(axis=-1), 1.0, atol=1e-9)


class TestBackward:
    def test_power_rule(self):
        x = T.Tensor([3.0], requires_grad=True)
        with T.Tape() as tape:
            loss = T.tsum(T.square(x))
        T.backward(loss, tape)
        np.testing.assert_allclose(x.grad, [6.0])

    def test_sigmoid_derivative_at_zero(self):
        x = T.Tensor([0.0], requires_grad=True)
        with T.Tape() as tape:
            loss = T.tsum(T.sigmoid(x))
        T.backward(loss, tape)
        np.testing.assert_allclose(x.grad, [0.25])

    def test_non_scalar_loss_rejected(self):
        x = T.Tensor([1.0, 2.0], requires_grad=True)
        with T.Tape() as tape:
            y = T.square(x)
        with pytest.raises(DimensionError):
            T.backward(y, tape)

    def test_detached_tensor_gets_zero_grad(self):
        x = T.Tensor([1.0], requires_grad=True)
        other = T.Tensor([2.0], requires_grad=True)
        with T.Tape() as tape:
            loss = T.tsum(T.square(other))
        T.backward(loss, tape)
        np.testing.assert_array_equal(x.grad_or_zeros(), [0.0])

    def test_shared_input_accumulates(self):
        x = T.Tensor([2.0], requires_grad=True)
        with T.Tape() as tape:
            loss = T.tsum(T.add(T.mul(x, x), x))  # x^2 + x
        T.backward(loss, tape)
        np.testing.assert_allclose(x.grad, [5.0])

    def test_composite_matches_finite_differences(self):
        """Every differentiable op, randomized, against central differences."""
        rng = np.random.default_rng(42)

        def build(xt, wt):
            h = T.relu(T.matmul(xt, wt))
            y = T.softmax(h)
            z = T.sigmoid(T.sub(T.mul(y, 2.0), 0.5))
            q = T.div(T.exp(T.mul(z, 0.3)), T.add(T.square(z), 1.0))
            r = T.log(T.clamp(T.add(q, 0.5), 1e-6, 10.0))
            return T.tmean(r)

        failures = 0
        for trial in range(100):
            x = rng.normal(size=(3, 4))
            w = rng.normal(size=(4, 5))
            xt = T.Tensor(x, requires_grad=True)
            wt = T.Tensor(w, requires_grad=True)
            with T.Tape() as tape:
                loss = build(xt, wt)
            T.backward(loss, tape)
            fd_x = central_diff(lambda v: build(T.Tensor(v), T.Tensor(w)).item(), x)
            fd_w = central_diff(lambda v: build(T.Tensor(x), T.Tensor(v)).item(), w)
            if rel_err(xt.grad, fd_x) > 1e-4 or rel_err(wt.grad, fd_w) > 1e-4:
                failures += 1
        assert failures == 0

    def test_conv_pool_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(6, 3))
        kern = rng.normal(size=(3, 3, 4))
        bias = rng.normal(size=4)

        def run(xv, kv, bv):
            return T.tsum(T.global_max_pool(
                T.relu(T.conv1d_valid(T.Tensor(xv), T.Tensor(kv), T.Tensor(bv))))).item()

        xt = T.Tensor(x, requires_grad=True)
        kt = T.Tensor(kern, requires_grad=True)
        bt = T.Tensor(bias, requires_grad=True)
        with T.Tape() as tape:
            loss = T.tsum(T.global_max_pool(T.relu(T.conv1d_valid(xt, kt, bt))))
        T.backward(loss, tape)
        assert rel_err(xt.grad, central_diff(lambda v: run(v, kern, bias), x)) < 1e-4
        assert rel_err(kt.grad, central_diff(lambda v: run(x, v, bias), kern)) < 1e-4
        assert rel_err(bt.grad, central_diff(lambda v: run(x, kern, v), bias)) < 1e-4


class TestStructuralOps:
    def test_reshape_roundtrip_gradient(self):
        x = T.Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        with T.Tape() as tape:
            loss = T.tsum(T.mul(T.reshape(x, (6,)), np.arange(6.0)))
        T.backward(loss, tape)
        np.testing.assert_array_equal(x.grad, np.arange(6.0).reshape(2, 3))

    def test_scatter_rows_places_and_gathers_back(self):
        v = T.Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]), requires_grad=True)
        with T.Tape() as tape:
            placed = T.scatter_rows(v, np.array([2, 0]), 4)
            loss = T.tsum(T.square(placed))
        np.testing.assert_array_equal(placed.data[2], [1.0, 2.0])
        np.testing.assert_array_equal(placed.data[1], [0.0, 0.0])
        T.backward(loss, tape)
        np.testing.assert_array_equal(v.grad, 2 * v.data)

    def test_append_row_gradient_sums_over_batch(self):
        row = T.Tensor(np.array([1.0, 2.0]), requires_grad=True)
        y = T.Tensor(np.zeros((3, 2, 2)), requires_grad=True)
        with T.Tape() as tape:
            out = T.append_row(y, row)
            loss = T.tsum(out)
        assert out.shape == (3, 3, 2)
        T.backward(loss, tape)
        np.testing.assert_array_equal(row.grad, [3.0, 3.0])

    def test_select_index(self):
        x = T.Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]), requires_grad=True)
        with T.Tape() as tape:
            picked = T.select_index(x, np.array([1, 0]))
            loss = T.tsum(picked)
        np.testing.assert_array_equal(picked.data, [2.0, 3.0])
        T.backward(loss, tape)
        np.testing.assert_array_equal(x.grad, [[0.0, 1.0], [1.0, 0.0]])


class TestGumbel:
    def test_known_uniform_values(self):
        class StubRng:
            def __init__(self, values):
                self.values = np.asarray(values)

            def random(self, shape):
                return np.broadcast_to(self.values, shape)

        g = T.sample_gumbel((2,), StubRng([1.0 / np.e, np.exp(-np.e)]))
        np.testing.assert_allclose(g.data, [0.0, -1.0], atol=1e-12)

    def test_seed_determinism(self):
        a = T.sample_gumbel((100,), np.random.default_rng(11)).data
        b = T.sample_gumbel((100,), np.random.default_rng(11)).data
        np.testing.assert_array_equal(a, b)

    def test_mean_matches_euler_mascheroni(self):
        g = T.sample_gumbel((1_000_000,), np.random.default_rng(0)).data
        assert abs(g.mean() - EULER_MASCHERONI) < 0.01

    def test_finite_even_at_extreme_uniforms(self):
        class EdgeRng:
            def random(self, shape):
                out = np.zeros(shape)
                out.reshape(-1)[0] = 0.0
                out.reshape(-1)[-1] = 1.0
                return out

        g = T.sample_gumbel((4,), EdgeRng())
        assert np.all(np.isfinite(g.data))
