import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latent_steer.autodiff import NonFiniteError
from latent_steer.optim import (
    MomentumState,
    OptimState,
    make_optimizer,
    radam_step,
    rectifier,
    rho,
    sgd_momentum_step,
)


def radam_scalar(x, steps, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8, grad=lambda x: 2 * x):
    """Plain-float RAdam on one coordinate, written out from the recurrence."""
    m = v = 0.0
    rho_inf = 2 / (1 - b2) - 1
    out = []
    for t in range(1, steps + 1):
        g = grad(x)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mh = m / (1 - b1 ** t)
        rt = rho_inf - 2 * t * b2 ** t / (1 - b2 ** t)
        if rt > 4:
            r = math.sqrt((rt - 4) * (rt - 2) * rho_inf / ((rho_inf - 4) * (rho_inf - 2) * rt))
            x = x - lr * r * mh / (math.sqrt(v / (1 - b2 ** t)) + eps)
        else:
            x = x - lr * mh
        out.append(x)
    return out


def run_radam(x0, steps, **kw):
    state = OptimState(**kw)
    p = [np.array([x0])]
    xs = []
    for _ in range(steps):
        p, state = radam_step(p, [2 * p[0]], state)
        xs.append(float(p[0][0]))
    return xs


def test_first_step_is_unrectified():
    # rho_1 = 1 <= 4, so the step is plain momentum: 1 - 1e-3 * 2
    assert run_radam(1.0, 1) == [0.998]
    assert rectifier(1, 0.999) is None


def test_rho_values():
    rho_inf, r1 = rho(1, 0.999)
    assert rho_inf == pytest.approx(1999.0)
    assert r1 == pytest.approx(1.0, abs=1e-9)
    assert rectifier(4, 0.999) is None
    assert rectifier(6, 0.999) is not None


def test_ten_steps_match_scalar_oracle():
    got = run_radam(1.0, 10)
    want = radam_scalar(1.0, 10)
    assert max(abs(a - b) for a, b in zip(got, want)) < 1e-12


def test_sgd_momentum_example():
    step, state = make_optimizer("sgd", lr=0.1, momentum=0.9)
    p = [np.array([0.0])]
    p, state = step(p, [np.array([1.0])], state)
    assert p[0][0] == pytest.approx(-0.1)
    p, state = step(p, [np.array([1.0])], state)
    assert p[0][0] == pytest.approx(-0.29)


def test_non_finite_update_raises():
    with pytest.raises(NonFiniteError):
        radam_step([np.array([1.0])], [np.array([np.inf])], OptimState())
    with pytest.raises(NonFiniteError):
        sgd_momentum_step([np.array([1.0])], [np.array([np.nan])], MomentumState())


def test_shape_checks_and_unknown_optimizer():
    with pytest.raises(ValueError):
        radam_step([np.zeros(2)], [np.zeros(3)], OptimState())
    with pytest.raises(ValueError):
        make_optimizer("adamw")


def test_params_not_mutated():
    p = [np.array([1.0, 2.0])]
    radam_step(p, [np.ones(2)], OptimState())
    np.testing.assert_array_equal(p[0], [1.0, 2.0])


@given(st.floats(-10, 10, allow_nan=False), st.integers(1, 40))
def test_radam_matches_oracle_anywhere(x0, steps):
    got = run_radam(x0, steps)
    want = radam_scalar(x0, steps)
    assert max(abs(a - b) for a, b in zip(got, want)) < 1e-12


@given(st.floats(0.01, 5.0))
def test_radam_descends_on_quadratic(x0):
    xs = run_radam(x0, 200, lr=1e-2)
    assert abs(xs[-1]) < abs(x0)
