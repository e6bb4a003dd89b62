import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from latent_steer import autodiff as ad
from latent_steer.checks import gradcheck_suite, primitive_composition

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def grad_of(f, *xs):
    tape = ad.Tape()
    ts = [tape.watch(x) for x in xs]
    return tape.gradients(f(*ts), ts)


def test_mean_matmul_gradient_example():
    W = np.array([[1.0, 2.0], [3.0, 4.0]])
    x = np.array([1.0, 2.0])
    (gW,) = grad_of(lambda w: ad.mean(ad.matmul(w, x)), W)
    np.testing.assert_array_equal(gW, [[0.5, 1.0], [0.5, 1.0]])


def test_tanh_sigmoid_against_closed_form():
    x = np.linspace(-3, 3, 13)
    (g,) = grad_of(lambda t: ad.sum_(ad.tanh(t)), x)
    np.testing.assert_allclose(g, 1 / np.cosh(x) ** 2, atol=1e-15)
    (g,) = grad_of(lambda t: ad.sum_(ad.sigmoid(t)), x)
    s = 1 / (1 + np.exp(-x))
    np.testing.assert_allclose(g, s * (1 - s), atol=1e-15)


def test_relu_and_clamp_subgradients():
    x = np.array([-1.0, 0.0, 2.0])
    (g,) = grad_of(lambda t: ad.sum_(ad.relu(t)), x)
    np.testing.assert_array_equal(g, [0.0, 0.0, 1.0])
    (g,) = grad_of(lambda t: ad.sum_(ad.clamp(t, -0.5, 1.0)), x)
    np.testing.assert_array_equal(g, [0.0, 1.0, 0.0])


def test_batched_matmul_gradient_shape():
    a = np.random.default_rng(0).standard_normal((3, 2, 4))
    b = np.random.default_rng(1).standard_normal((3, 4, 5))
    ga, gb = grad_of(lambda p, q: ad.sum_(ad.matmul(p, q)), a, b)
    np.testing.assert_allclose(ga, np.broadcast_to(b.sum(axis=2)[:, None, :], a.shape))
    np.testing.assert_allclose(gb, np.broadcast_to(a.sum(axis=1)[:, :, None], b.shape))


def test_shape_mismatch_is_rejected():
    with pytest.raises(ad.ShapeError):
        ad.add(np.ones(2), np.ones(3))
    with pytest.raises(ad.ShapeError):
        ad.matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_non_finite_outputs_raise():
    with pytest.raises(ad.NonFiniteError):
        ad.log(np.array([-1.0]))
    with pytest.raises(ad.NonFiniteError):
        ad.exp(np.array([1e4]))


def test_unused_leaf_gets_zero_gradient():
    tape = ad.Tape()
    a, b = tape.watch(np.ones(3)), tape.watch(np.ones((2, 2)))
    g = tape.backward(ad.sum_(ad.square(a)))
    np.testing.assert_array_equal(g[b], np.zeros((2, 2)))
    np.testing.assert_array_equal(g[a], 2 * np.ones(3))


def test_fan_out_accumulates():
    (g,) = grad_of(lambda t: ad.sum_(ad.mul(t, t)), np.array([3.0]))
    assert g[0] == 6.0


def test_backward_requires_scalar():
    tape = ad.Tape()
    x = tape.watch(np.ones(3))
    with pytest.raises(ad.ShapeError):
        tape.backward(ad.tanh(x))


def test_expand_is_explicit():
    (g,) = grad_of(lambda t: ad.sum_(ad.expand(t, (4, 3))), np.ones((1, 3)))
    np.testing.assert_array_equal(g, 4 * np.ones((1, 3)))
    with pytest.raises(ad.ShapeError):
        ad.expand(np.ones((2, 3)), (4, 3))


def test_apply_by_name():
    out = ad.apply("clamp", np.array([-2.0, 0.5, 2.0]), lo=0.0, hi=1.0)
    np.testing.assert_array_equal(out.data, [0.0, 0.5, 1.0])
    with pytest.raises(ValueError):
        ad.apply("nope", np.ones(1))


def test_gradient_check_step_bounds():
    with pytest.raises(ValueError):
        ad.gradient_check(lambda t: ad.sum_(t), np.ones(2), step=1e-2)


@pytest.mark.parametrize("seed", range(5))
def test_random_compositions_match_finite_differences(seed):
    f, x, _ = primitive_composition(seed)
    assert ad.gradient_check(f, x) < 1e-6


@given(arrays(np.float64, (4,), elements=finite), arrays(np.float64, (4,), elements=finite))
def test_gradient_is_linear_in_loss(x, c):
    # d/dx sum(c * x + 2 * x^2) = c + 4x
    (g,) = grad_of(lambda t: ad.add(ad.sum_(ad.mul(t, c)), ad.scale(ad.sum_(ad.square(t)), 2.0)), x)
    np.testing.assert_allclose(g, c + 4 * x, rtol=1e-12, atol=1e-12)


@given(arrays(np.float64, (2, 3), elements=finite))
def test_reshape_transpose_are_permutations(x):
    w = np.arange(6.0).reshape(3, 2)
    (g,) = grad_of(lambda t: ad.sum_(ad.mul(ad.transpose(t), w)), x)
    np.testing.assert_array_equal(g, w.T)


@given(arrays(np.float64, (3, 2), elements=finite))
def test_no_tape_means_plain_values(x):
    out = ad.tanh(ad.matmul(x, np.ones((2, 2))))
    assert not out.tracked
    np.testing.assert_allclose(out.data, np.tanh(x @ np.ones((2, 2))))


def test_gradcheck_suite_small():
    res = gradcheck_suite(n_compositions=3, dims=(4,))
    assert all(r.passed for r in res), [(r.name, r.error) for r in res if not r.passed]
