"""Loss-weighting schemes: formulas, cap property, limits."""

import numpy as np
import pytest

from ipinn.autodiff import Graph
from ipinn.errors import ContractViolation
from ipinn.weighting import (RAW_BLOCK, WeightState, initial_lambda,
                             initial_raw, lambdas, total_loss)

from conftest import central_diff

TERMS3 = ("ic", "bc", "r")


def eval_total(scheme, losses, raw=None, gamma=0.0, fixed=None):
    g = Graph()
    state = WeightState(scheme, TERMS3, gamma=gamma,
                        raw=raw, fixed_lambdas=fixed)
    nodes = {t: g.const(v) for t, v in zip(TERMS3, losses)}
    raw_node = g.param(RAW_BLOCK, (1, 3)) if state.trainable else None
    total = total_loss(g, nodes, state, raw_node)
    g.freeze()
    if state.trainable:
        g.set_params(state.raw)
    g.forward()
    return float(g.value_of(total)[0, 0]), g, total, state


def test_paper_initialization_gives_unit_weights():
    # gamma = 100, sigma^2 = 1 - 1/100  ->  lambda = 1
    state = WeightState("iaw", TERMS3, gamma=100.0)
    np.testing.assert_allclose(np.exp(state.raw), 1 - 1 / 100.0, rtol=1e-15)
    np.testing.assert_allclose(lambdas(state), 1.0, rtol=1e-15)
    state = WeightState("aw", TERMS3)
    np.testing.assert_allclose(lambdas(state), 1.0, rtol=1e-15)


def test_small_gamma_initialization_records_half_gamma():
    state = WeightState("iaw", TERMS3, gamma=0.5)
    np.testing.assert_allclose(lambdas(state), 0.25, rtol=1e-15)
    assert initial_lambda("iaw", 0.5) == 0.25
    assert initial_lambda("iaw", 100.0) == 1.0


def test_cap_attained_as_sigma_vanishes():
    state = WeightState("iaw", TERMS3, gamma=1e3, raw=np.full(3, -200.0))
    np.testing.assert_allclose(lambdas(state), 1e3, rtol=1e-12)


def test_aw_half_weight_at_unit_sigma():
    state = WeightState("aw", TERMS3, raw=np.zeros(3))
    np.testing.assert_allclose(lambdas(state), 0.5, rtol=1e-15)


def test_gamma_must_be_positive():
    with pytest.raises(ContractViolation):
        WeightState("iaw", TERMS3, gamma=0.0)
    with pytest.raises(ContractViolation):
        WeightState("bogus", TERMS3)


def test_fixed_total_is_plain_sum():
    total, *_ = eval_total("fixed", (1.0, 2.0, 3.0), fixed=np.ones(3))
    assert total == pytest.approx(6.0)


def test_aw_total_matches_formula_at_unit_sigma():
    # sigma^2 = 1: sum L/2 + (1/2) log 1 = 3
    total, *_ = eval_total("aw", (1.0, 2.0, 3.0), raw=np.zeros(3))
    assert total == pytest.approx(3.0)


def test_aw_total_matches_independent_formula_random():
    rng = np.random.default_rng(0)
    for _ in range(20):
        L = rng.uniform(0.1, 5.0, 3)
        s = rng.uniform(-2, 2, 3)
        total, *_ = eval_total("aw", L, raw=s)
        sig2 = np.exp(s)
        expect = np.sum(L / (2 * sig2) + 0.5 * np.log(sig2))
        assert total == pytest.approx(expect, rel=1e-12)


def test_iaw_total_matches_independent_formula_random():
    rng = np.random.default_rng(1)
    for gamma in (1.0, 100.0, 1e6):
        L = rng.uniform(0.1, 5.0, 3)
        s = rng.uniform(-2, 2, 3)
        total, *_ = eval_total("iaw", L, raw=s, gamma=gamma)
        den = np.exp(s) + 1 / gamma
        expect = np.sum(L / den + np.log(den))
        assert total == pytest.approx(expect, rel=1e-12)


def test_cap_property_million_random_raws():
    rng = np.random.default_rng(2)
    s = rng.uniform(-30.0, 30.0, 10 ** 6)
    for gamma in (1.0, 1e3, 1e6):
        lam = 1.0 / (np.exp(s) + 1.0 / gamma)
        assert lam.min() > 0.0
        assert lam.max() <= gamma


def test_monotonicity_in_sigma():
    state0 = WeightState("iaw", TERMS3, gamma=50.0)
    s = np.linspace(-5, 5, 101)
    lam = 1.0 / (np.exp(s) + 1.0 / state0.gamma)
    assert np.all(np.diff(lam) < 0)


def test_per_term_weight_limit_bound():
    """iaw weight vs doubled aw weight: relative gap <= 1/(gamma sigma^2)."""
    rng = np.random.default_rng(3)
    gamma = 1e12
    s = rng.uniform(-3, 3, 1000)
    sig2 = np.exp(s)
    w_iaw = 1.0 / (sig2 + 1.0 / gamma)
    w_aw2 = 1.0 / sig2
    rel = np.abs(w_iaw - w_aw2) / w_aw2
    # the bound is tight to O(1/(gamma sigma^2)); allow cancellation noise
    assert np.all(rel <= (1.0 / (gamma * sig2)) * (1 + 1e-2) + 4e-16)


def test_limit_iaw_total_is_doubled_aw_bracket():
    rng = np.random.default_rng(4)
    for _ in range(10):
        L = rng.uniform(0.5, 3.0, 3)
        s = np.log(rng.uniform(0.5, 2.0, 3))
        t_iaw, *_ = eval_total("iaw", L, raw=s, gamma=1e12)
        sig2 = np.exp(s)
        doubled_aw = np.sum(2 * (L / (2 * sig2) + 0.5 * np.log(sig2)))
        assert t_iaw == pytest.approx(doubled_aw, rel=1e-6)


def test_regularizer_gradient_sign_at_zero_loss():
    """d/ds log(exp(s) + 1/gamma) > 0 for every s."""
    _, g, total, state = eval_total("iaw", (0.0, 0.0, 0.0),
                                    raw=np.array([-20.0, 0.0, 20.0]), gamma=1e3)
    g.backward(total)
    assert np.all(g.grad_vector() > 0.0)


def test_total_loss_gradient_matches_fd():
    rng = np.random.default_rng(5)
    L = rng.uniform(0.1, 2.0, 3)
    for scheme, gamma in (("aw", 0.0), ("iaw", 100.0)):
        g = Graph()
        state = WeightState(scheme, TERMS3, gamma=gamma)
        nodes = {t: g.const(v) for t, v in zip(TERMS3, L)}
        raw_node = g.param(RAW_BLOCK, (1, 3))
        total = total_loss(g, nodes, state, raw_node)
        g.freeze()
        s0 = rng.uniform(-1, 1, 3)

        def f(t):
            g.set_params(t)
            g.forward()
            return g.value_of(total)[0, 0]

        f(s0)
        g.backward(total)
        np.testing.assert_allclose(g.grad_vector(), central_diff(f, s0, 1e-6),
                                   rtol=1e-6, atol=1e-9)


def test_term_mismatch_rejected():
    g = Graph()
    state = WeightState("fixed", ("bc", "r"))
    with pytest.raises(ContractViolation):
        total_loss(g, {"bc": g.const(1.0)}, state)


def test_initial_raw_values():
    np.testing.assert_allclose(initial_raw("aw", 0.0, 2), np.log(0.5))
    np.testing.assert_allclose(initial_raw("iaw", 100.0, 2), np.log(0.99))
    np.testing.assert_allclose(initial_raw("iaw", 0.5, 2), np.log(2.0))
