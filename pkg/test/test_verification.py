from radner_tracker.coefficients import Model
from radner_tracker.endogenous import solve
from radner_tracker.error import (
    BoundViolation,
    ClearingViolation,
    IdentityViolation,
    ResidualExceedsTolerance,
    is_check_failure,
)
from radner_tracker.exogenous import solve_exogenous
from radner_tracker.verification import (
    RESIDUAL_TOL,
    BoundReport,
    IdentityReport,
    IdentityRow,
    check_clearing,
    check_exogenous_limit,
    check_pointwise_optimizers,
    check_positivity_bounds,
    check_proportionalities,
    check_welfare_decoupling,
    residuals_endogenous,
    residuals_exogenous,
    verify_all,
)
from test.util import base_params, degenerate_params

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st


@pytest.mark.xdist_group(name="fast")
@pytest.mark.parametrize("a", [1.0, 10.0, 20.0])
def test_endogenous_residuals(a):
    params = base_params(a=a)
    eq = solve(params)
    report = residuals_endogenous(params, eq.coeffs)
    assert report.passed
    assert len(report.rows) == 15
    assert report.worst.max_residual < RESIDUAL_TOL
    assert report["f22"].terminal_value == 0.0
    assert "M := I" in report.note
    assert report.check == "residuals_endogenous"


@pytest.mark.xdist_group(name="fast")
@pytest.mark.parametrize("a", [1.0, 10.0, 20.0])
def test_exogenous_residuals(a):
    params = base_params(a=a)
    eq = solve_exogenous(params)
    report = residuals_exogenous(params, eq.coeffs)
    assert report.passed
    assert len(report.rows) == 9
    # the finite-difference cross-check agrees to its own truncation error
    assert max(row.fd_residual for row in report.rows) < 1e-3


@pytest.mark.xdist_group(name="fast")
def test_wrong_parameters_fail_residuals():
    params = base_params()
    eq = solve(params)
    wrong = params.replace(sigma_Yp=5.0)
    report = residuals_endogenous(wrong, eq.coeffs, strict=False)
    assert not report.passed

    with pytest.raises(ResidualExceedsTolerance) as info:
        residuals_endogenous(wrong, eq.coeffs)
    err = info.value
    assert is_check_failure(err)
    assert err.check == "residuals_endogenous"
    assert err.residual > err.tolerance
    assert err.exit_code == 2
    assert err.equation in str(err)


@pytest.mark.xdist_group(name="fast")
@pytest.mark.parametrize(
    ("solver", "residuals"),
    [(solve, residuals_endogenous), (solve_exogenous, residuals_exogenous)],
)
def test_degenerate_residuals_are_rounding_error(solver, residuals):
    params = degenerate_params()
    report = residuals(params, solver(params).coeffs, tolerance=1e-10)
    assert report.passed
    assert report.worst.max_residual < 1e-10


@pytest.mark.xdist_group(name="fast")
@pytest.mark.parametrize(
    ("solver", "residuals"),
    [(solve, residuals_endogenous), (solve_exogenous, residuals_exogenous)],
)
def test_tighter_tolerance_shrinks_residuals(solver, residuals):
    params = base_params()
    coarse = residuals(params, solver(params, 1e-6).coeffs, tolerance=1.0, strict=False)
    fine = residuals(params, solver(params, 1e-8).coeffs, tolerance=1.0, strict=False)

    compared = 0
    for row in coarse.rows:
        if row.max_residual < 1e-12:
            continue  # closed-form coefficient, already at rounding level
        assert fine[row.equation].max_residual <= row.max_residual / 10, row.equation
        compared += 1
    assert compared > 0


@pytest.mark.xdist_group(name="fast")
def test_g33_derivative_at_midpoint():
    params = base_params()
    coeffs = solve_exogenous(params).coeffs
    g33 = coeffs.g33(0.5)
    expected = 2 * params.a * params.sigma_Yp**2 * g33**2 - coeffs.g23(0.5)
    assert abs(coeffs.derivative("g33", 0.5) - expected) < 1e-6


@pytest.mark.xdist_group(name="fast")
def test_grid_must_not_be_tiny():
    params = base_params()
    eq = solve_exogenous(params)
    with pytest.raises(ValueError, match="at least 11 points"):
        residuals_exogenous(params, eq.coeffs, grid_size=5)


@pytest.mark.xdist_group(name="fast")
def test_pointwise_optimizers():
    params = base_params()
    eq = solve(params)
    report = check_pointwise_optimizers(params, eq.coeffs)
    assert report.passed
    assert len(report.rows) == 2


@pytest.mark.xdist_group(name="fast")
def test_clearing_both_models():
    params = base_params()
    assert check_clearing(params, solve(params).coeffs) < 1e-12
    assert check_clearing(params, solve_exogenous(params).coeffs) < 1e-12


@pytest.mark.xdist_group(name="fast")
def test_clearing_violation_is_raised():
    row = IdentityRow(identity="I*theta_j + theta_N = Sigma", deviation=1e-9, tolerance=1e-12)
    report = IdentityReport(check="clearing", rows=(row,))
    with pytest.raises(ClearingViolation) as info:
        report.raise_for_failures()
    assert info.value.check == "clearing"
    assert info.value.deviation == 1e-9


@pytest.mark.xdist_group(name="fast")
@pytest.mark.parametrize("solver", [solve, solve_exogenous])
def test_positivity_bounds(solver):
    params = base_params()
    eq = solver(params)
    report = check_positivity_bounds(eq.core, params)
    assert report.passed
    assert report["z1 > 0"].value > 0
    assert report["z1 < C1 s^2"].value < 1.0
    assert report["z2 < C2 s^3"].value < 1.0
    assert report["z1(s)/s^2 -> C1"].value < 0.01


@pytest.mark.xdist_group(name="fast")
@pytest.mark.parametrize("solver", [solve, solve_exogenous])
def test_degenerate_bounds_are_attained(solver):
    params = degenerate_params()
    report = check_positivity_bounds(solver(params).core, params)
    assert report.passed
    assert [row.bound for row in report.rows][:2] == ["z1 = C1 s^2", "z2 = C2 s^3"]


@pytest.mark.xdist_group(name="fast")
def test_bound_violation_is_raised():
    # a core solved for a = 20 leaves the bounds that hold for a = 1
    params = base_params()
    core = solve(params.replace(a=20.0)).core
    report = check_positivity_bounds(core, params, strict=False)
    assert isinstance(report, BoundReport)
    assert not report.passed
    with pytest.raises(BoundViolation) as info:
        report.raise_for_failures()
    assert info.value.check == "bounds_endogenous"


@pytest.mark.xdist_group(name="fast")
@pytest.mark.parametrize("solver", [solve, solve_exogenous])
def test_proportionalities(solver):
    params = base_params()
    eq = solver(params)
    report = check_proportionalities(params, eq.coeffs)
    assert report.passed
    assert report.check == f"proportionalities_{eq.coeffs.model}"


@pytest.mark.xdist_group(name="fast")
@pytest.mark.parametrize("solver", [solve, solve_exogenous])
def test_welfare_decoupling(solver):
    params = base_params()
    eq = solver(params)
    report = check_welfare_decoupling(params, eq.coeffs)
    assert report.passed
    assert report["mu linear"].deviation < 1e-14


@pytest.mark.xdist_group(name="fast")
def test_identity_violation_is_raised():
    row = IdentityRow(identity="g3 = -Sigma*g23", deviation=1.0, tolerance=1e-10)
    report = IdentityReport(check="proportionalities_endogenous", rows=(row,))
    assert not report.passed
    with pytest.raises(IdentityViolation) as info:
        report.raise_for_failures()
    assert info.value.identity == "g3 = -Sigma*g23"


@pytest.mark.xdist_group(name="fast")
def test_exogenous_limit():
    report = check_exogenous_limit(base_params())
    assert report.kappas == (1e2, 1e3, 1e4)
    assert report.converges
    assert list(report.beta_errors) == sorted(report.beta_errors, reverse=True)
    assert report.beta_errors[-1] < 1e-3


@pytest.mark.xdist_group(name="fast")
def test_verify_all():
    report = verify_all(base_params())
    assert report.passed
    report.raise_for_failures()

    frame = report.to_frame()
    assert list(frame.columns) == ["check", "item", "value", "argmax_t", "tolerance", "passed"]
    assert frame["passed"].all()
    assert set(frame["check"]) >= {
        "residuals_endogenous",
        "residuals_exogenous",
        "pointwise_optimizers",
        "clearing",
        "bounds_endogenous",
        "bounds_exogenous",
    }
    assert len(frame[frame["check"] == "residuals_endogenous"]) == 15


@pytest.mark.xdist_group(name="fast")
def test_verify_single_model():
    report = verify_all(base_params(), models=[Model.EXOGENOUS])
    assert [r.model for r in report.residuals] == [Model.EXOGENOUS]
    assert all(i.check != "pointwise_optimizers" for i in report.identities)


@pytest.mark.xdist_group(name="fast")
@settings(max_examples=10, deadline=None)
@given(
    a=st.sampled_from([1.0, 5.0, 20.0]),
    sigma_Yp=st.floats(min_value=1.0, max_value=20.0),
    kappa=st.floats(min_value=0.1, max_value=50.0),
    I=st.integers(min_value=1, max_value=20),
)
def test_bounds_hold_for_random_parameters(a, sigma_Yp, kappa, I):
    params = base_params(a=a, sigma_Yp=sigma_Yp, kappa=kappa, I=I)
    for solver in (solve, solve_exogenous):
        report = check_positivity_bounds(solver(params).core, params, strict=False)
        failed = [row.bound for row in report.rows if not row.passed]
        assert not failed, failed
