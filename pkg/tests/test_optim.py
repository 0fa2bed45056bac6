"""Adam and L-BFGS on standard test functions."""

import numpy as np
import pytest

from ipinn.errors import NumericError
from ipinn.optim import (AdamState, GRAD_CONVERGED, LbfgsConfig, adam_step,
                         lbfgs_minimize)


def rosenbrock(x):
    f = 100.0 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2
    g = np.array([-400 * x[0] * (x[1] - x[0] ** 2) - 2 * (1 - x[0]),
                  200 * (x[1] - x[0] ** 2)])
    return f, g


def least_squares_10d(seed=0):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(10, 10)) + 3 * np.eye(10)
    b = rng.normal(size=10)

    def f(x):
        r = A @ x - b
        return r @ r, 2 * A.T @ r

    return f, np.linalg.solve(A, b)


# ------------------------------------------------------------------- Adam

def test_adam_first_step_is_signed_lr():
    st = AdamState(lr=1e-3)
    w = np.zeros(4)
    gconst = np.array([3.0, -0.5, 1e-4, -7.0])
    adam_step(st, w, gconst.copy())
    np.testing.assert_allclose(w, -1e-3 * np.sign(gconst), rtol=1e-3)
    assert st.t == 1


def test_adam_zero_gradient_no_move():
    st = AdamState()
    w = np.array([1.0, -2.0])
    adam_step(st, w, np.zeros(2))
    np.testing.assert_array_equal(w, [1.0, -2.0])


def test_adam_converges_on_quadratic():
    rng = np.random.default_rng(0)
    wstar = rng.uniform(-1, 1, 10)
    w = np.zeros(10)
    st = AdamState(lr=1e-2)
    for _ in range(2000):
        adam_step(st, w, 2 * (w - wstar))
    assert np.linalg.norm(w - wstar) <= 1e-4


def test_adam_scale_equivariance():
    """Trajectories on f and 2f coincide (per-coordinate normalisation)."""
    rng = np.random.default_rng(1)
    wstar = rng.uniform(-1, 1, 6)
    paths = []
    for scale in (1.0, 2.0):
        w = np.zeros(6)
        st = AdamState(lr=1e-2, eps=1e-14)
        for _ in range(500):
            adam_step(st, w, scale * 2 * (w - wstar))
        paths.append(w.copy())
    np.testing.assert_allclose(paths[0], paths[1], atol=1e-8)


def test_adam_rejects_nonfinite_gradient():
    st = AdamState()
    with pytest.raises(NumericError):
        adam_step(st, np.zeros(2), np.array([1.0, np.nan]))


# ------------------------------------------------------------------ L-BFGS

def test_stationary_start_returns_immediately():
    f, xstar = least_squares_10d()
    x, reason, info = lbfgs_minimize(f, xstar)
    assert reason == GRAD_CONVERGED
    assert info["iterations"] == 0


def test_quadratic_gradient_below_1e10_within_30_iters():
    f, _ = least_squares_10d()
    x, reason, info = lbfgs_minimize(
        f, np.zeros(10), LbfgsConfig(gtol=1e-10, ftol=0.0, max_iters=30))
    assert reason == GRAD_CONVERGED
    assert info["gnorm"] < 1e-10
    assert info["iterations"] <= 30


def test_rosenbrock_reaches_1e8():
    x, reason, info = lbfgs_minimize(rosenbrock, np.array([-1.2, 1.0]))
    assert info["f"] < 1e-8
    np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-5)


def test_memory_zero_is_steepest_descent():
    f, _ = least_squares_10d(seed=3)
    directions = []

    def cb(it, x, f, g, direction, alpha):
        directions.append((direction.copy(), g.copy()))

    lbfgs_minimize(f, np.ones(10), LbfgsConfig(memory=0, max_iters=5, ftol=0.0),
                   callback=cb)
    assert len(directions) >= 3
    # the step direction is always the negative gradient at the step start
    _, g0 = directions[0]
    d1, _ = directions[1]
    g_prev = None
    for k, (d, g_at_end) in enumerate(directions):
        if g_prev is not None:
            np.testing.assert_allclose(d, -g_prev, rtol=1e-12)
        g_prev = g_at_end


def test_accepted_steps_satisfy_strong_wolfe():
    f, _ = least_squares_10d(seed=5)
    cfg = LbfgsConfig(c1=1e-4, c2=0.9, max_iters=15, ftol=0.0)
    state = {"x": np.full(10, 2.0)}
    checks = []

    def cb(it, x, f, g, direction, alpha):
        x0 = state["x"]
        f0, g0 = func(x0)
        d0 = g0 @ direction
        fa, ga = func(x0 + alpha * direction)
        checks.append((fa <= f0 + cfg.c1 * alpha * d0 + 1e-12,
                       abs(ga @ direction) <= cfg.c2 * abs(d0) + 1e-12))
        state["x"] = x.copy()

    func = f
    lbfgs_minimize(func, state["x"].copy(), cfg, callback=cb)
    assert checks
    assert all(a for a, _ in checks), "Armijo condition violated"
    assert all(c for _, c in checks), "curvature condition violated"


def test_line_search_failure_is_a_reason_not_an_exception():
    def linear(x):  # unbounded descent: curvature condition can never hold
        return -x.sum(), -np.ones_like(x)

    x, reason, info = lbfgs_minimize(linear, np.zeros(3),
                                     LbfgsConfig(max_iters=10, max_ls=8))
    assert reason == "line-search-failed"
