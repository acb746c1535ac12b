import math

from radner_tracker.coefficients import Model
from radner_tracker.endogenous import (
    ENDOGENOUS_FUNCTIONS,
    build_coefficients,
    coefficient_table,
    core_max_step,
    investor_strategy,
    investor_value,
    solve,
    solve_core,
    stock_drift,
    stock_price,
    tracker_strategy,
    tracker_value,
)
from radner_tracker.error import ExponentSaturationWarning, OutOfDomain
from radner_tracker.exogenous import solve_core_exogenous
from test.util import base_params, degenerate_params, endogenous_core_rhs, rk4_core

import numpy as np
import pytest


@pytest.fixture(scope="module")
def base():
    return solve(base_params())


@pytest.mark.xdist_group(name="fast")
def test_degenerate_closed_forms():
    core = solve_core(degenerate_params())
    s = np.linspace(0.0, 1.0, 1001)
    assert np.max(np.abs(core.z1(s) - 5 / 101 * s**2)) < 1e-9
    assert np.max(np.abs(core.z2(s) - 50 / 30603 * s**3)) < 1e-9


@pytest.mark.xdist_group(name="fast")
def test_core_matches_fixed_step_oracle(base):
    s, z1, z2 = rk4_core(endogenous_core_rhs(base_params()))
    idx = slice(None, None, 500)
    assert np.max(np.abs(base.core.z1(s[idx]) - z1[idx])) < 1e-8
    assert np.max(np.abs(base.core.z2(s[idx]) - z2[idx])) < 1e-8

    # strictly inside the a priori bounds
    assert 0 < z1[-1] < 5 / 101
    assert 0 < z2[-1] < 50 / 30603


@pytest.mark.xdist_group(name="fast")
def test_initial_values(base):
    assert base.core.z1(0.0) == 0.0
    assert base.core.z2(0.0) == 0.0
    assert base.core.g33_integral() > 0


@pytest.mark.xdist_group(name="fast")
def test_terminal_conditions(base):
    assert base.coeffs.names == ENDOGENOUS_FUNCTIONS
    for name in ENDOGENOUS_FUNCTIONS:
        assert abs(base.coeffs.value(name, 1.0)) < 1e-14, name


@pytest.mark.xdist_group(name="fast")
def test_positive_loadings(base):
    ts = np.linspace(0.0, 1.0, 1001)[:-1]
    assert (base.coeffs.beta(ts) > 0).all()
    assert (base.coeffs.g33(ts) > 0).all()


@pytest.mark.xdist_group(name="fast")
def test_closed_form_coefficients(base):
    ts = np.linspace(0.0, 1.0, 11)
    s = 1.0 - ts
    assert np.allclose(base.coeffs.alpha(ts), 10 / 101 * s, rtol=0, atol=1e-15)
    assert np.allclose(base.coeffs.mu(ts), -10 / 101 * s, rtol=0, atol=1e-15)
    assert np.allclose(base.coeffs.g22(ts), 50 / 10201 * s, rtol=0, atol=1e-15)
    assert np.allclose(base.coeffs.g23(ts), 10 / 101 * base.coeffs.beta(ts), rtol=0, atol=1e-15)


@pytest.mark.xdist_group(name="fast")
def test_market_clears(base):
    params = base.params
    rng = np.random.default_rng(0)
    t = rng.uniform(0.0, 1.0, 1000)
    Y, Yp = rng.normal(0.0, 3.0, (2, 1000))
    total = params.I * investor_strategy(params, base.coeffs, t, Y, Yp)
    total = total + tracker_strategy(params, base.coeffs, t, Y, Yp)
    assert np.max(np.abs(total - params.Sigma)) < 1e-12


@pytest.mark.xdist_group(name="fast")
def test_stock_price_and_drift(base):
    coeffs = base.coeffs
    assert stock_price(coeffs, 1.0, 2.5, 3.0, -1.0) == 2.5
    assert math.isclose(stock_price(coeffs, 0.0, 0.0, 0.0, 0.0), -10 / 101)

    # μ′ = Σα₀ and α′ = −α₀, so with Σ = 1 a unit noise level has no drift
    assert math.isclose(stock_drift(coeffs, 0.3, 0.0, 0.0), 10 / 101)
    assert abs(stock_drift(coeffs, 0.3, 1.0, 0.0)) < 1e-15

    prices = stock_price(coeffs, np.array([0.0, 0.5]), 0.0, np.array([1.0, 1.0]), 0.0)
    assert prices.shape == (2,)


@pytest.mark.xdist_group(name="fast")
def test_value_functions_at_maturity(base):
    params, coeffs = base.params, base.coeffs
    assert math.isclose(investor_value(params, coeffs, 1.0, 0.5, 3.0, 4.0), -math.exp(-0.5))
    assert tracker_value(params, coeffs, 1.0, 0.5, 3.0, 4.0) == 0.5
    assert investor_value(params, coeffs, 0.2, 1.0, 0.0, 0.0) < 0


@pytest.mark.xdist_group(name="fast")
def test_investor_value_saturates(base):
    with pytest.warns(ExponentSaturationWarning):
        v = investor_value(base.params, base.coeffs, 0.0, -1e6, 0.0, 0.0)
    assert v == pytest.approx(-math.exp(700.0), rel=1e-12)
    assert math.isfinite(v)


@pytest.mark.xdist_group(name="fast")
def test_small_kappa_limit():
    params = base_params(kappa=1e-8)
    eq = solve(params)
    t, Y, Yp = 0.25, 1.5, -2.0
    assert abs(investor_strategy(params, eq.coeffs, t, Y, Yp)) < 1e-6
    assert abs(tracker_strategy(params, eq.coeffs, t, Y, Yp) - params.Sigma) < 1e-6
    assert abs(stock_price(eq.coeffs, t, 0.7, Y, Yp) - 0.7) < 1e-6


@pytest.mark.xdist_group(name="fast")
def test_out_of_domain(base):
    with pytest.raises(OutOfDomain):
        base.coeffs.beta(1.5)
    with pytest.raises(OutOfDomain):
        base.coeffs.derivative("g33", np.array([0.5, -0.01]))


@pytest.mark.xdist_group(name="fast")
def test_coefficient_table(base):
    table = coefficient_table(base.coeffs)
    assert list(table.columns) == ["t", *ENDOGENOUS_FUNCTIONS]
    assert len(table) == 1001
    assert table["t"].iloc[-1] == 1.0
    assert (table.iloc[-1, 1:].abs() < 1e-14).all()

    with pytest.raises(ValueError, match="at least 2 points"):
        coefficient_table(base.coeffs, 1)


@pytest.mark.xdist_group(name="fast")
def test_build_rejects_foreign_core():
    params = base_params()
    with pytest.raises(ValueError, match="endogenous"):
        build_coefficients(params, solve_core_exogenous(params))
    with pytest.raises(ValueError, match="endogenous"):
        build_coefficients(params.replace(kappa=1.0), solve_core(params))


@pytest.mark.xdist_group(name="fast")
def test_model_and_step_cap(base):
    assert base.coeffs.model is Model.ENDOGENOUS
    assert str(base.coeffs.model) == "endogenous"
    assert core_max_step(1e-10) == pytest.approx(10**-2.5)
    assert core_max_step(0.9) == 0.125
