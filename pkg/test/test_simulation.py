import math

from radner_tracker.coefficients import Model
from radner_tracker.endogenous import solve, tracker_strategy
from radner_tracker.error import ExponentSaturationWarning, InvalidMeasure
from radner_tracker.exogenous import solve_exogenous
from radner_tracker.simulation import (
    PATH_COLUMNS,
    McEstimate,
    Measure,
    Objective,
    SimGrid,
    dump_paths,
    investor_objective,
    martingale_check,
    objective_gap,
    sample_batches,
    sample_paths,
    tracker_objective,
    wealth_path,
)
from test.util import base_params

import numpy as np
import pandas as pd
import pytest


@pytest.fixture(scope="module")
def endogenous():
    return solve(base_params())


@pytest.fixture(scope="module")
def exogenous():
    return solve_exogenous(base_params())


def _stack(params, coeffs, grid, n_paths, seed, measure=Measure.P, **kwargs):
    batches = list(sample_batches(params, coeffs, grid, n_paths, seed, measure, **kwargs))
    return {
        name: np.concatenate([getattr(b, name) for b in batches])
        for name in ("D", "Yp", "Y", "S", "theta_inv", "theta_tracker", "X_inv", "V_inv")
    }


def _assert_covariance(x, y, target):
    # sample covariance as a mean of centred products
    products = (x - x.mean()) * (y - y.mean())
    stderr = products.std(ddof=1) / math.sqrt(products.size)
    assert abs(products.mean() - target) < 3 * stderr


@pytest.mark.xdist_group(name="slow")
def test_exact_increment_law(exogenous):
    params = exogenous.params
    paths = _stack(params, exogenous.coeffs, SimGrid(n_steps=16), 20_000, seed=7)
    D1, Yp1, Y1 = paths["D"][:, -1], paths["Yp"][:, -1], paths["Y"][:, -1]  # noqa: N806

    # (Y′₁, Y₁) has covariance (σ², σ²/2; σ²/2, σ²/3) for any number of steps
    sy2 = params.sigma_Yp**2
    _assert_covariance(Yp1, Yp1, sy2)
    _assert_covariance(Yp1, Y1, sy2 / 2)
    _assert_covariance(Y1, Y1, sy2 / 3)
    _assert_covariance(D1, D1, params.sigma_D**2)
    _assert_covariance(D1, Yp1, 0.0)


@pytest.mark.xdist_group(name="fast")
def test_initial_state_and_maturity(endogenous):
    params = base_params(Y0=0.5, Yp0=-1.0, D0=2.0)
    eq = solve(params)
    paths = _stack(params, eq.coeffs, SimGrid(n_steps=32), 64, seed=1)
    assert (paths["D"][:, 0] == 2.0).all()
    assert (paths["Y"][:, 0] == 0.5).all()
    assert (paths["Yp"][:, 0] == -1.0).all()
    # all price coefficients vanish at maturity
    assert np.allclose(paths["S"][:, -1], paths["D"][:, -1], rtol=0, atol=1e-12)


@pytest.mark.xdist_group(name="fast")
@pytest.mark.parametrize("measure", [Measure.P, Measure.Q_HAT])
def test_market_clears_along_paths(endogenous, measure):
    params = endogenous.params
    paths = _stack(params, endogenous.coeffs, SimGrid(n_steps=32), 64, seed=3, measure=measure)
    total = params.I * paths["theta_inv"] + paths["theta_tracker"]
    assert np.max(np.abs(total - params.Sigma)) < 1e-10


@pytest.mark.xdist_group(name="fast")
def test_same_seed_same_paths(endogenous):
    params, coeffs, grid = endogenous.params, endogenous.coeffs, SimGrid(n_steps=16)
    a = _stack(params, coeffs, grid, 100, seed=11)
    b = _stack(params, coeffs, grid, 100, seed=11)
    c = _stack(params, coeffs, grid, 100, seed=12)
    for name in a:
        assert np.array_equal(a[name], b[name]), name
    assert not np.array_equal(a["D"], c["D"])


@pytest.mark.xdist_group(name="fast")
@pytest.mark.parametrize("measure", [Measure.P, Measure.Q_HAT])
def test_batching_does_not_change_paths(endogenous, measure):
    params, coeffs, grid = endogenous.params, endogenous.coeffs, SimGrid(n_steps=16)
    whole = _stack(params, coeffs, grid, 50, seed=5, measure=measure)
    split = _stack(params, coeffs, grid, 50, seed=5, measure=measure, batch_size=7)
    for name in whole:
        assert np.array_equal(whole[name], split[name]), name

    # a path only depends on its own index
    tail = list(sample_paths(params, coeffs, grid, 50, seed=5, measure=measure))[-1]
    assert tail.path_id == 49
    assert np.array_equal(tail.Y, whole["Y"][-1])


@pytest.mark.xdist_group(name="slow")
def test_worker_processes_do_not_change_results(endogenous):
    pytest.importorskip("joblib")
    params, coeffs, grid = endogenous.params, endogenous.coeffs, SimGrid(n_steps=16)
    serial = _stack(params, coeffs, grid, 1100, seed=2, n_jobs=1)
    parallel = _stack(params, coeffs, grid, 1100, seed=2, n_jobs=2)
    for name in serial:
        assert np.array_equal(serial[name], parallel[name]), name

    rule = lambda t, Y, Yp: tracker_strategy(params, coeffs, t, Y, Yp)  # noqa: E731
    one = tracker_objective(params, coeffs, grid, 1100, 2, rule, n_jobs=1)
    two = tracker_objective(params, coeffs, grid, 1100, 2, rule, n_jobs=2)
    assert (one.mean, one.stderr) == (two.mean, two.stderr)


@pytest.mark.xdist_group(name="fast")
def test_wealth_path(endogenous):
    params = endogenous.params
    bundle = next(sample_paths(params, endogenous.coeffs, SimGrid(n_steps=32), 1, seed=4))

    buy_and_hold = wealth_path(bundle, np.ones_like(bundle.S))
    assert np.allclose(buy_and_hold, bundle.S, rtol=0, atol=1e-12)
    assert (wealth_path(bundle, np.zeros_like(bundle.S)) == 0).all()
    assert wealth_path(bundle, np.zeros_like(bundle.S), initial_holding=2.0)[-1] == pytest.approx(
        2.0 * bundle.S[0]
    )

    again = wealth_path(bundle, bundle.theta_inv, initial_holding=params.theta0[0])
    assert np.array_equal(again, bundle.X_inv)

    with pytest.raises(ValueError, match="expected 33 holdings"):
        wealth_path(bundle, np.ones(5))


@pytest.fixture(scope="module")
def endogenous_report(endogenous):
    return martingale_check(
        endogenous.params, endogenous.coeffs, SimGrid(n_steps=1024), 20_000, seed=2024
    )


@pytest.mark.xdist_group(name="slow")
def test_endogenous_martingales(endogenous_report):
    report = endogenous_report
    assert report.model is Model.ENDOGENOUS
    assert [row.name for row in report.rows] == [
        "investor value under P",
        "investor wealth under Q-hat",
        "tracker value under P",
    ]
    assert report.max_abs_z < 3
    assert report["investor value under P"].target < 0
    frame = report.to_frame()
    assert list(frame.columns) == ["name", "mean", "target", "stderr", "z", "n_paths"]
    assert (frame["n_paths"] == 20_000).all()


@pytest.mark.xdist_group(name="slow")
def test_exogenous_martingale(exogenous):
    report = martingale_check(
        exogenous.params, exogenous.coeffs, SimGrid(n_steps=1024), 20_000, seed=2024
    )
    assert report.model is Model.EXOGENOUS
    assert [row.name for row in report.rows] == ["investor value under P"]
    assert report.max_abs_z < 3


@pytest.mark.xdist_group(name="slow")
def test_finer_grid_keeps_estimate(endogenous, endogenous_report):
    finer = martingale_check(
        endogenous.params, endogenous.coeffs, SimGrid(n_steps=2048), 20_000, seed=2024
    )
    name = "investor value under P"
    coarse, fine = endogenous_report[name], finer[name]
    pooled = math.hypot(coarse.stderr, fine.stderr)
    assert abs(fine.mean - coarse.mean) < 2 * pooled


@pytest.mark.xdist_group(name="slow")
def test_dividend_has_no_drift_under_q_hat(endogenous):
    params, grid = endogenous.params, SimGrid(n_steps=1024)
    drift = params.a * params.sigma_D**2 * grid.dt

    # D̂₁ − D̂₀ per path, with dD̂ = dD + aσ_D²θ̂_j dt
    totals = np.concatenate(
        [
            (np.diff(b.D, axis=1) + drift * b.theta_inv[:, :-1]).sum(axis=1)
            for b in sample_batches(
                params, endogenous.coeffs, grid, 4096, seed=31, measure=Measure.Q_HAT
            )
        ]
    )
    stderr = totals.std(ddof=1) / math.sqrt(totals.size)
    assert abs(totals.mean()) < 3 * stderr


@pytest.mark.xdist_group(name="slow")
@pytest.mark.parametrize("eps", [-0.1, 0.1])
@pytest.mark.parametrize("shape", ["constant", "linear"])
def test_perturbed_tracker_loses(endogenous, eps, shape):
    # with Y₀ = Y′₀ = 0 the expected loss of adding εh(t) is κε²Σh(tᵢ)²Δ
    params, coeffs = endogenous.params, endogenous.coeffs
    grid = SimGrid(n_steps=64)

    def h(t: float) -> float:
        return 1.0 if shape == "constant" else t

    def optimal(t, Y, Yp):  # noqa: N803
        return tracker_strategy(params, coeffs, t, Y, Yp)

    def perturbed(t, Y, Yp):  # noqa: N803
        return optimal(t, Y, Yp) + eps * h(t)

    gap = objective_gap(params, coeffs, grid, 20_000, 99, perturbed, optimal)
    assert gap.name == "tracker objective gap"
    assert math.isnan(gap.target)

    expected = -params.kappa * eps**2 * grid.dt * sum(h(t) ** 2 for t in grid.times[:-1])
    assert gap.mean < 0
    assert abs(gap.mean - expected) < 3 * gap.stderr


@pytest.mark.xdist_group(name="fast")
def test_pure_tracking_has_no_penalty(endogenous):
    params, coeffs, grid = endogenous.params, endogenous.coeffs, SimGrid(n_steps=32)
    est = tracker_objective(params, coeffs, grid, 300, 6, lambda t, Y, Yp: Y)

    terminal = [
        wealth_path(b, b.Y, initial_holding=params.theta_tracker0)[-1]
        for b in sample_paths(params, coeffs, grid, 300, seed=6)
    ]
    assert est.mean == pytest.approx(np.mean(terminal), rel=1e-12, abs=1e-12)


@pytest.mark.xdist_group(name="slow")
def test_objectives(endogenous):
    params, coeffs, grid = endogenous.params, endogenous.coeffs, SimGrid(n_steps=32)

    def optimal(t, Y, Yp):  # noqa: N803
        return tracker_strategy(params, coeffs, t, Y, Yp)

    est = tracker_objective(params, coeffs, grid, 256, 8, optimal)
    assert est.name == "tracker objective"
    assert est.n_paths == 256
    assert math.isfinite(est.mean)

    same = objective_gap(params, coeffs, grid, 256, 8, optimal, optimal)
    assert same.mean == 0.0
    assert same.stderr == 0.0

    inv = investor_objective(params, coeffs, grid, 256, 8, lambda t, Y, Yp: 0.1)
    assert inv.name == "investor objective"
    assert inv.mean < 0

    utility_gap = objective_gap(
        params, coeffs, grid, 256, 8, optimal, optimal, Objective.INVESTOR
    )
    assert utility_gap.name == "investor objective gap"

    with pytest.raises(ValueError, match="non-finite"):
        tracker_objective(params, coeffs, grid, 16, 8, lambda t, Y, Yp: np.nan)


@pytest.mark.xdist_group(name="fast")
def test_saturated_utility_warns(endogenous):
    params, coeffs, grid = endogenous.params, endogenous.coeffs, SimGrid(n_steps=8)
    with pytest.warns(ExponentSaturationWarning, match="saturated"):
        est = investor_objective(params, coeffs, grid, 64, 8, lambda t, Y, Yp: 1e6)
    assert math.isfinite(est.mean)
    assert est.mean < 0
    assert est.stderr == math.inf


@pytest.mark.xdist_group(name="fast")
def test_invalid_arguments(endogenous, exogenous):
    grid = SimGrid(n_steps=8)
    with pytest.raises(InvalidMeasure) as info:
        next(sample_batches(exogenous.params, exogenous.coeffs, grid, 1, 0, Measure.Q_HAT))
    assert "Q-hat" in str(info.value)
    assert info.value.exit_code == 1

    with pytest.raises(ValueError, match="at least one path"):
        next(sample_batches(endogenous.params, endogenous.coeffs, grid, 0, 0))
    with pytest.raises(ValueError, match="not built for these parameters"):
        next(sample_batches(base_params(kappa=1.0), endogenous.coeffs, grid, 1, 0))

    for n_steps in (0, -3, True, 2.5):
        with pytest.raises(ValueError, match="positive number of steps"):
            SimGrid(n_steps=n_steps)


@pytest.mark.xdist_group(name="fast")
def test_z_score_edge_cases():
    exact = McEstimate(name="x", mean=1.0, stderr=0.0, target=1.0, n_paths=4)
    assert exact.z == 0.0
    off = McEstimate(name="x", mean=2.0, stderr=0.0, target=1.0, n_paths=4)
    assert off.z == math.inf


@pytest.mark.xdist_group(name="fast")
def test_dump_paths(endogenous, tmp_path):
    grid = SimGrid(n_steps=8)
    bundles = list(sample_paths(endogenous.params, endogenous.coeffs, grid, 3, seed=0))
    path = dump_paths(bundles, tmp_path / "paths.csv", comment="config: dump")
    assert path.read_text().splitlines()[0] == "# config: dump"

    frame = pd.read_csv(path, comment="#")
    assert list(frame.columns) == list(PATH_COLUMNS)
    assert len(frame) == 3 * 9
    assert list(frame["path_id"].unique()) == [0, 1, 2]
    assert frame["t"].iloc[-1] == 1.0
    assert frame["S"].iloc[0] == pytest.approx(bundles[0].S[0], rel=1e-15)

    empty = pd.read_csv(dump_paths([], tmp_path / "empty.csv"))
    assert list(empty.columns) == list(PATH_COLUMNS)
