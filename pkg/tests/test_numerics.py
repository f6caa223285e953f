"""Tests for the tensor library: gradients, FLOP counting and numeric guards."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stormcast_edl.errors import DomainError, GraphError, NumericError, ShapeError
from stormcast_edl.numerics import (
    Adam,
    GradTape,
    Tensor,
    backward,
    clip_grad_norm,
    count_flops,
    digamma,
    dropout,
    exp,
    gelu,
    getitem,
    gradient_check,
    layer_norm,
    lgamma,
    log,
    log1p,
    matmul,
    mean,
    mean_squared_error,
    reshape,
    softmax,
    softplus,
    sqrt,
    tensor_sum,
    transpose,
)


def leaf(rng, *shape, low=-1.0, high=1.0):
    return Tensor(rng.uniform(low, high, size=shape), requires_grad=True)


def naive_matmul(a, b):
    m, k = a.shape
    n = b.shape[1]
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            total = 0.0
            for r in range(k):
                total += a[i, r] * b[r, j]
            out[i, j] = total
    return out


class TestGradients:
    def test_broadcast_gradients_sum_over_expanded_axes(self):
        x = Tensor(np.array([[1.0], [2.0], [3.0]]), requires_grad=True)
        y = Tensor(np.array([[10.0, 20.0, 30.0, 40.0]]), requires_grad=True)
        with GradTape() as tape:
            loss = tensor_sum(x * y)
        grads = tape.backward(loss)

        np.testing.assert_allclose(grads[x], np.full((3, 1), 100.0))
        np.testing.assert_allclose(grads[y], np.full((1, 4), 6.0))

    def test_elementwise_chain(self, rng):
        x = leaf(rng, 3, 4, low=0.5, high=2.0)
        error = gradient_check(lambda: mean(sqrt(x) * log(x) + exp(-x) / x + log1p(x) ** 2), [x])
        assert error < 1e-6

    def test_matmul_with_batch_axes(self, rng):
        a = leaf(rng, 2, 3, 4)
        b = leaf(rng, 4, 5)
        assert gradient_check(lambda: tensor_sum(matmul(a, b) ** 2), [a, b]) < 1e-6

    def test_softmax_and_layout(self, rng):
        x = leaf(rng, 2, 3, 4)
        w = Tensor(rng.normal(size=(4, 3, 2)))

        def fn():
            moved = transpose(softmax(x, axis=1), (2, 1, 0))
            return tensor_sum(reshape(moved, (4, 6)) * reshape(w, (4, 6)))

        assert gradient_check(fn, [x]) < 1e-6

    def test_layer_norm_and_gelu(self, rng):
        x = leaf(rng, 3, 5)
        gain = leaf(rng, 5, low=0.5, high=1.5)
        bias = leaf(rng, 5)
        fn = lambda: mean(gelu(layer_norm(x, gain, bias, 1e-10)) ** 2)  # noqa: E731
        assert gradient_check(fn, [x, gain, bias]) < 1e-5

    def test_special_functions(self, rng):
        x = leaf(rng, 6, low=0.3, high=5.0)
        fn = lambda: tensor_sum(lgamma(x) * digamma(x) + softplus(x - 2.0))  # noqa: E731
        assert gradient_check(fn, [x]) < 1e-6

    def test_fancy_index_accumulates(self):
        x = Tensor(np.arange(4.0), requires_grad=True)
        with GradTape() as tape:
            loss = tensor_sum(getitem(x, np.array([0, 0, 3])))
        np.testing.assert_allclose(tape.backward(loss)[x], [2.0, 0.0, 0.0, 1.0])

    def test_unused_leaf_gets_zero_gradient(self):
        x = Tensor(np.ones(3), requires_grad=True)
        y = Tensor(np.ones(3), requires_grad=True)
        with GradTape() as tape:
            _ = y * 2.0
            loss = tensor_sum(x * 3.0)
        grads = tape.backward(loss)
        np.testing.assert_allclose(grads[x], [3.0, 3.0, 3.0])
        np.testing.assert_allclose(grads[y], [0.0, 0.0, 0.0])

    def test_backward_needs_scalar(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with GradTape():
            y = x * 2.0
        with pytest.raises(GraphError):
            backward(y)

    def test_untaped_loss_cannot_be_differentiated(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(GraphError):
            backward(tensor_sum(x))

    def test_square_derivative(self):
        x = Tensor(np.array([3.0]), requires_grad=True)
        with GradTape() as tape:
            loss = tensor_sum(x**2)
        np.testing.assert_allclose(tape.backward(loss)[x], [6.0])

    def test_softplus_sum_at_zero(self):
        x = Tensor(np.zeros(5), requires_grad=True)
        with GradTape() as tape:
            loss = tensor_sum(softplus(x))
        np.testing.assert_allclose(tape.backward(loss)[x], np.full(5, 0.5), rtol=1e-15)

    def test_twenty_parameter_composite_at_random_points(self, rng):
        inputs = Tensor(rng.normal(size=(5, 3)))
        weight = Tensor(np.zeros((3, 4)), requires_grad=True)
        bias = Tensor(np.zeros(4), requires_grad=True)
        scale = Tensor(np.zeros(4), requires_grad=True)

        def fn():
            hidden = softplus(matmul(inputs, weight) + bias)
            return (
                mean(hidden * scale)
                + mean(lgamma(1.5 + softplus(bias)))
                + tensor_sum(softmax(scale) * bias)
            )

        worst = 0.0
        for _ in range(100):
            for param in (weight, bias, scale):
                param.assign(rng.uniform(-2.0, 2.0, size=param.shape))
            worst = max(worst, gradient_check(fn, [weight, bias, scale], h=1e-5))
        assert worst < 1e-4


class TestMatmul:
    def test_identity(self):
        eye = Tensor(np.eye(2))
        np.testing.assert_array_equal(matmul(eye, eye).numpy(), np.eye(2))

    def test_small_product(self):
        a = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]))
        b = Tensor(np.array([[0.0], [1.0]]))
        np.testing.assert_array_equal(matmul(a, b).numpy(), [[2.0], [4.0]])

    def test_matches_triple_loop(self, rng):
        a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
        product = matmul(Tensor(a), Tensor(b)).numpy()
        np.testing.assert_allclose(product, naive_matmul(a, b), rtol=1e-12, atol=1e-14)

    @given(
        m=st.integers(1, 32),
        k=st.integers(1, 32),
        n=st.integers(1, 32),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=25, deadline=None)
    def test_relative_frobenius_error(self, m, k, n, seed):
        generator = np.random.default_rng(seed)
        a, b = generator.normal(size=(m, k)), generator.normal(size=(k, n))
        expected = naive_matmul(a, b)
        error = np.linalg.norm(matmul(Tensor(a), Tensor(b)).numpy() - expected)
        assert error <= 1e-12 * max(np.linalg.norm(expected), 1e-300)


class TestSoftmax:
    def test_uniform_pair(self):
        np.testing.assert_array_equal(softmax(Tensor([0.0, 0.0])).numpy(), [0.5, 0.5])

    def test_large_logit_does_not_overflow(self):
        np.testing.assert_allclose(softmax(Tensor([1000.0, 0.0])).numpy(), [1.0, 0.0], atol=1e-12)

    def test_rows_sum_to_one(self, rng):
        out = softmax(Tensor(rng.normal(scale=3.0, size=(6, 9))), axis=1).numpy()
        assert np.all((out > 0.0) & (out < 1.0))
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)

    def test_matches_extended_precision(self, rng):
        x = rng.normal(scale=3.0, size=7)
        with mpmath.workdps(40):
            exps = [mpmath.exp(mpmath.mpf(v)) for v in x]
            total = mpmath.fsum(exps)
            expected = [float(e / total) for e in exps]
        np.testing.assert_allclose(softmax(Tensor(x)).numpy(), expected, rtol=1e-12, atol=1e-15)

    @given(shift=st.floats(-100.0, 100.0), seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_shift_invariance(self, shift, seed):
        x = np.random.default_rng(seed).normal(size=(3, 5))
        base = softmax(Tensor(x), axis=-1).numpy()
        shifted = softmax(Tensor(x + shift), axis=-1).numpy()
        np.testing.assert_allclose(shifted, base, rtol=1e-12, atol=1e-15)


class TestFlops:
    def test_matmul_counts_two_per_multiply_add(self):
        with count_flops() as counter:
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((3, 4))))
        assert counter.total == 2 * 2 * 3 * 4

    def test_batched_matmul(self):
        with count_flops() as counter:
            matmul(Tensor(np.ones((5, 2, 3))), Tensor(np.ones((3, 4))))
        assert counter.breakdown == {"matmul": 5 * 2 * 2 * 3 * 4}

    def test_layout_is_free_and_softmax_costs_three(self):
        x = Tensor(np.ones((2, 6)))
        with count_flops() as counter:
            y = transpose(reshape(x, (3, 4)), (1, 0))
            softmax(y, axis=-1)
        assert counter.snapshot() == {"softmax": 36, "total": 36}

    def test_elementwise_counts_output_elements(self):
        with count_flops() as counter:
            Tensor(np.ones((3, 1))) + Tensor(np.ones((1, 4)))
        assert counter.total == 12

    def test_no_counter_no_cost(self):
        with count_flops() as counter:
            pass
        matmul(Tensor(np.ones((2, 2))), Tensor(np.ones((2, 2))))
        assert counter.total == 0


class TestGuards:
    def test_overflow_raises_numeric_error(self):
        with pytest.raises(NumericError):
            exp(Tensor([1000.0]))

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            log(Tensor([0.0]))
        with pytest.raises(DomainError):
            Tensor([1.0]) / Tensor([0.0])
        with pytest.raises(DomainError):
            lgamma(Tensor([-0.5]))

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
        with pytest.raises(ShapeError):
            Tensor(np.ones(3)) + Tensor(np.ones(4))
        with pytest.raises(ShapeError):
            mean_squared_error(Tensor(np.ones(3)), np.ones(4))

    def test_tensors_are_immutable(self):
        t = Tensor(np.ones(3))
        with pytest.raises(ValueError):
            t.data[0] = 2.0
        with pytest.raises(ShapeError):
            t.assign(np.ones(4))


class TestSpecialValues:
    @pytest.mark.parametrize("x", [0.01, 0.5, 1.0, 2.5, 17.0, 1234.5])
    def test_lgamma_digamma_match_mpmath(self, x):
        assert lgamma(Tensor([x])).item() == pytest.approx(float(mpmath.loggamma(x)), rel=1e-12)
        assert digamma(Tensor([x])).item() == pytest.approx(float(mpmath.digamma(x)), rel=1e-12)

    @given(st.floats(min_value=-30.0, max_value=700.0))
    @settings(max_examples=100, deadline=None)
    def test_softplus_bounds(self, x):
        value = softplus(Tensor([x])).item()
        assert value > 0.0
        assert value >= x
        assert value == pytest.approx(float(mpmath.log1p(mpmath.exp(x))), rel=1e-12)

    def test_gelu_uses_exact_normal_cdf(self):
        expected = 0.5 * (1.0 + math.erf(1.0 / math.sqrt(2.0)))
        assert gelu(Tensor([1.0])).item() == pytest.approx(expected)


class TestOptim:
    def test_clip_rescales_to_bound(self):
        p = Tensor(np.zeros(2), requires_grad=True)
        clipped, norm = clip_grad_norm({p: np.array([3.0, 4.0])}, 1.0)
        assert norm == pytest.approx(5.0)
        np.testing.assert_allclose(clipped[p], [0.6, 0.8], rtol=1e-9)

    def test_clip_disabled_or_within_bound(self):
        p = Tensor(np.zeros(2), requires_grad=True)
        grads = {p: np.array([3.0, 4.0])}
        assert clip_grad_norm(grads, 0.0)[0][p] is grads[p]
        np.testing.assert_array_equal(clip_grad_norm(grads, 10.0)[0][p], [3.0, 4.0])

    def test_adam_minimises_quadratic(self):
        x = Tensor(np.zeros(1), requires_grad=True)
        optimizer = Adam([x], lr=0.05)
        for _ in range(2000):
            with GradTape() as tape:
                loss = tensor_sum((x - 3.0) ** 2)
            optimizer.step(tape.backward(loss))
        assert x.item() == pytest.approx(3.0, abs=0.05)


class TestDropout:
    def test_identity_without_rng(self):
        x = Tensor(np.ones(5))
        assert dropout(x, 0.5, None) is x

    def test_inverted_scaling_preserves_mean(self):
        out = dropout(Tensor(np.ones(20000)), 0.5, np.random.default_rng(0))
        assert set(np.unique(out.data)) <= {0.0, 2.0}
        assert out.data.mean() == pytest.approx(1.0, abs=0.05)
