"""
Monte Carlo paths of the economy.

Under ``P``, the dividend ``D`` and the noise velocity ``Y′`` are Brownian motions
and ``Y`` is the integral of ``Y′``. Per step, ``(ΔY′, Δ∫Y′)`` is drawn from its exact
joint Gaussian law, so ``Y`` carries no discretization bias. Under ``Q̂``, the drift
adjustments of the investors' pricing measure are added with holdings evaluated at
the left node.

Every path ``i`` draws from its own counter-based stream of ``(seed, i)``. Paths are
processed in fixed batches, and batch results are reduced in batch order, so results
do not depend on ``n_jobs``. Comparing strategies at a fixed seed uses common random
numbers.

Parallel runs require the ``joblib`` extra.
"""

import logging
import math
import warnings
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Final, TypeVar

from radner_tracker._emit import write_csv
from radner_tracker._random import path_generator
from radner_tracker.coefficients import Coefficients, Model
from radner_tracker.endogenous import (
    EXPONENT_LIMIT,
    EndogenousCoefficients,
    investor_strategy,
    investor_value,
    stock_price,
    tracker_strategy,
    tracker_value,
)
from radner_tracker.error import ExponentSaturationWarning, InvalidMeasure
from radner_tracker.exogenous import investor_strategy_exogenous, noise_trader_holdings
from radner_tracker.params import ModelParams

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray


__docformat__ = "google"
__all__ = (
    "DEFAULT_PATHS",
    "DEFAULT_STEPS",
    "BATCH_SIZE",
    "PATH_COLUMNS",
    "Measure",
    "Objective",
    "SimGrid",
    "PathBundle",
    "PathBatch",
    "McEstimate",
    "MartingaleReport",
    "StrategyRule",
    "sample_batches",
    "sample_paths",
    "wealth_path",
    "martingale_check",
    "tracker_objective",
    "investor_objective",
    "objective_gap",
    "dump_paths",
)


DEFAULT_STEPS: Final = 1024
"""Default number of time steps on ``[0, 1]``."""

DEFAULT_PATHS: Final = 100_000
"""Default number of paths."""

BATCH_SIZE: Final = 512
"""Paths per unit of work."""

PATH_COLUMNS: Final = (
    "path_id",
    "t",
    "D",
    "Yp",
    "Y",
    "S",
    "theta_inv",
    "theta_tracker",
    "X_inv",
    "V_inv",
)
"""Columns of path dumps."""

StrategyRule = Callable[[float, NDArray[np.float64], NDArray[np.float64]], ArrayLike]
"""Holdings as a function of ``(t, Y, Y′)``, vectorized over paths."""

_LOGGER = logging.getLogger(__name__)

_T = TypeVar("_T")


class Measure(Enum):
    """Probability measures paths can be sampled under."""

    P = "P"
    """The physical measure."""

    Q_HAT = "Q-hat"
    """The investors' pricing measure, under which prices are martingales."""

    def __str__(self) -> str:
        return self.value


class Objective(Enum):
    """Objectives strategies can be scored with."""

    TRACKER = "tracker"
    """``X₁ − ∫κ(θ − Y)²dt``, to be maximized by the noise tracker."""

    INVESTOR = "investor"
    """``−exp(−aX₁)``, to be maximized by an investor."""


@dataclass(kw_only=True, frozen=True, slots=True)
class SimGrid:
    """
    A uniform time grid ``0 = t₀ < … < t_n = 1``.

    Attributes:
        n_steps: Number of steps ``n``.
    """

    n_steps: int = DEFAULT_STEPS

    def __post_init__(self) -> None:
        if isinstance(self.n_steps, bool) or not isinstance(self.n_steps, int) or self.n_steps < 1:
            msg = f"expected a positive number of steps, got {self.n_steps!r}"
            raise ValueError(msg)

    @property
    def dt(self) -> float:
        """The step ``Δ = 1/n``."""
        return 1.0 / self.n_steps

    @property
    def times(self) -> NDArray[np.float64]:
        """All ``n + 1`` grid nodes."""
        return np.linspace(0.0, 1.0, self.n_steps + 1)


@dataclass(kw_only=True, frozen=True, slots=True, eq=False)
class PathBundle:
    """
    One simulated path; every array holds one value per grid node.

    Attributes:
        path_id: Index of the path, which determines its random stream.
        grid: The time grid.
        measure: The measure the path was sampled under.
        D: Dividend level.
        Yp: Noise velocity ``Y′``.
        Y: Noise level.
        S: Stock price.
        theta_inv: Equilibrium holdings of investor ``j = 0``.
        theta_tracker: Equilibrium holdings of the noise tracker, or of the
                       exogenous noise trader.
        X_inv: Wealth of investor ``j = 0``.
        X_tracker: Wealth of the noise tracker or noise trader.
        V_inv: Value process ``V̂`` of investor ``j = 0``.
    """

    path_id: int
    grid: SimGrid
    measure: Measure
    D: NDArray[np.float64]
    Yp: NDArray[np.float64]
    Y: NDArray[np.float64]
    S: NDArray[np.float64]
    theta_inv: NDArray[np.float64]
    theta_tracker: NDArray[np.float64]
    X_inv: NDArray[np.float64]
    X_tracker: NDArray[np.float64]
    V_inv: NDArray[np.float64]


@dataclass(kw_only=True, frozen=True, slots=True, eq=False)
class PathBatch:
    """
    Consecutive paths; every array has shape ``(n_paths, n_steps + 1)``.

    See ``PathBundle`` for the meaning of each array.

    Attributes:
        first_path: Index of the first path in this batch.
    """

    first_path: int
    grid: SimGrid
    measure: Measure
    D: NDArray[np.float64]
    Yp: NDArray[np.float64]
    Y: NDArray[np.float64]
    S: NDArray[np.float64]
    theta_inv: NDArray[np.float64]
    theta_tracker: NDArray[np.float64]
    X_inv: NDArray[np.float64]
    X_tracker: NDArray[np.float64]
    V_inv: NDArray[np.float64]

    @property
    def n_paths(self) -> int:
        """Number of paths in this batch."""
        return self.D.shape[0]

    def bundles(self) -> Iterator[PathBundle]:
        """Views of the individual paths."""
        for row in range(self.n_paths):
            yield PathBundle(
                path_id=self.first_path + row,
                grid=self.grid,
                measure=self.measure,
                D=self.D[row],
                Yp=self.Yp[row],
                Y=self.Y[row],
                S=self.S[row],
                theta_inv=self.theta_inv[row],
                theta_tracker=self.theta_tracker[row],
                X_inv=self.X_inv[row],
                X_tracker=self.X_tracker[row],
                V_inv=self.V_inv[row],
            )


@dataclass(kw_only=True, frozen=True, slots=True)
class McEstimate:
    """
    A Monte Carlo mean compared with its theoretical value.

    Attributes:
        name: What is estimated.
        mean: The sample mean.
        stderr: Standard error of ``mean``.
        target: The theoretical value, or ``nan`` if there is none.
        n_paths: Number of paths.
    """

    name: str
    mean: float
    stderr: float
    target: float
    n_paths: int

    @property
    def z(self) -> float:
        """``(mean − target) / stderr``."""
        diff = self.mean - self.target
        if self.stderr == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / self.stderr


@dataclass(kw_only=True, frozen=True, slots=True)
class MartingaleReport:
    """
    Monte Carlo checks of the martingale properties of an equilibrium.

    Attributes:
        model: The model that was simulated.
        grid: The time grid.
        seed: The root seed.
        rows: One estimate per checked identity.
    """

    model: Model
    grid: SimGrid
    seed: int
    rows: tuple[McEstimate, ...]

    @property
    def max_abs_z(self) -> float:
        """The largest ``|z|`` of all rows."""
        return max(abs(row.z) for row in self.rows)

    def passed(self, threshold: float = 3.0) -> bool:
        """``True`` if every ``|z|`` is below ``threshold``."""
        return self.max_abs_z < threshold

    def __getitem__(self, name: str) -> McEstimate:
        return next(row for row in self.rows if row.name == name)

    def to_frame(self) -> pd.DataFrame:
        """One row per estimate: ``name, mean, target, stderr, z, n_paths``."""
        return pd.DataFrame(
            [
                {
                    "name": row.name,
                    "mean": row.mean,
                    "target": row.target,
                    "stderr": row.stderr,
                    "z": row.z,
                    "n_paths": row.n_paths,
                }
                for row in self.rows
            ],
            columns=["name", "mean", "target", "stderr", "z", "n_paths"],
        )


@dataclass(kw_only=True, slots=True)
class _Moments:
    """Sums of ``x − shift`` and ``(x − shift)²``, combinable across batches."""

    shift: float
    n: int = 0
    total: float = 0.0
    total_sq: float = 0.0

    def add(self, samples: NDArray[np.float64]) -> None:
        d = samples - self.shift
        self.n += d.size
        self.total += float(d.sum())
        self.total_sq += float((d * d).sum())

    def merge(self, other: "_Moments") -> None:
        self.n += other.n
        self.total += other.total
        self.total_sq += other.total_sq

    def estimate(self, name: str, target: float) -> McEstimate:
        mean_shifted = self.total / self.n
        var = math.inf
        if self.n > 1:
            # saturated utilities can overflow the second moment
            var = (self.total_sq - self.n * mean_shifted * mean_shifted) / (self.n - 1)
        stderr = math.sqrt(max(0.0, var) / self.n) if math.isfinite(var) else math.inf
        return McEstimate(
            name=name,
            mean=self.shift + mean_shifted,
            stderr=stderr,
            target=target,
            n_paths=self.n,
        )


@dataclass(kw_only=True, frozen=True, slots=True)
class _AffineRule:
    """Holdings ``c(t) + y(t)·Y + yp(t)·Y′`` tabulated on grid nodes."""

    const: NDArray[np.float64]
    y: NDArray[np.float64]
    yp: NDArray[np.float64]

    @classmethod
    def tabulate(
        cls, rule: Callable[[NDArray[np.float64], float, float], ArrayLike], ts: NDArray[np.float64]
    ) -> "_AffineRule":
        const = np.broadcast_to(np.asarray(rule(ts, 0.0, 0.0), dtype=np.float64), ts.shape)
        y = np.broadcast_to(np.asarray(rule(ts, 1.0, 0.0), dtype=np.float64), ts.shape) - const
        yp = np.broadcast_to(np.asarray(rule(ts, 0.0, 1.0), dtype=np.float64), ts.shape) - const
        return cls(const=const.copy(), y=y, yp=yp)

    def at(
        self,
        i: int,
        Y: NDArray[np.float64],  # noqa: N803
        Yp: NDArray[np.float64],  # noqa: N803
    ) -> NDArray[np.float64]:
        return self.const[i] + self.y[i] * Y + self.yp[i] * Yp

    def on_grid(
        self,
        Y: NDArray[np.float64],  # noqa: N803
        Yp: NDArray[np.float64],  # noqa: N803
    ) -> NDArray[np.float64]:
        return self.const + self.y * Y + self.yp * Yp


@dataclass(kw_only=True, frozen=True, slots=True, eq=False)
class _Plan:
    """Everything a batch worker needs, tabulated once per run."""

    params: ModelParams
    coeffs: Coefficients
    grid: SimGrid
    seed: int
    measure: Measure
    investor: _AffineRule
    tracker: _AffineRule
    drift_terms: dict[str, NDArray[np.float64]] = field(default_factory=dict)


def sample_batches(
    params: ModelParams,
    coeffs: Coefficients,
    grid: SimGrid,
    n_paths: int,
    seed: int,
    measure: Measure = Measure.P,
    *,
    batch_size: int = BATCH_SIZE,
    n_jobs: int = 1,
    logger: logging.Logger = _LOGGER,
) -> Iterator[PathBatch]:
    """
    Simulate paths in batches of consecutive path indices.

    Args:
        params: Model parameters, including the initial state.
        coeffs: Coefficients of either model.
        grid: The time grid.
        n_paths: Number of paths, at least 1.
        seed: Root seed of all path streams.
        measure: ``P``, or ``Q̂`` for endogenous coefficients.
        batch_size: Paths per batch.
        n_jobs: Number of worker processes.
        logger: Receives one debug message per batch.

    Raises:
        InvalidMeasure: if ``Q̂`` is requested with exogenous coefficients
        ValueError: if ``n_paths`` or ``batch_size`` is not positive
        ImportError: if ``n_jobs != 1`` and the ``joblib`` extra is missing
    """
    plan = _plan(params, coeffs, grid, seed, measure)
    ranges = _ranges(n_paths, batch_size)
    for batch in _map(_simulate_batch, [(plan, start, stop) for start, stop in ranges], n_jobs):
        logger.debug(f"simulated paths {batch.first_path}..{batch.first_path + batch.n_paths - 1}")
        yield batch


def sample_paths(
    params: ModelParams,
    coeffs: Coefficients,
    grid: SimGrid,
    n_paths: int,
    seed: int,
    measure: Measure = Measure.P,
    *,
    n_jobs: int = 1,
    logger: logging.Logger = _LOGGER,
) -> Iterator[PathBundle]:
    """
    Simulate individual paths; see ``sample_batches()``.

    The same seed always produces identical paths.
    """
    batches = sample_batches(
        params, coeffs, grid, n_paths, seed, measure, n_jobs=n_jobs, logger=logger
    )
    for batch in batches:
        yield from batch.bundles()


def wealth_path(
    bundle: PathBundle,
    strategy: ArrayLike,
    initial_holding: float | None = None,
) -> NDArray[np.float64]:
    """
    Self-financing wealth of holding ``strategy`` along a path.

    ``X₀ = θ_{0−}·S₀`` and ``X_{i+1} = X_i + θ_i·(S_{i+1} − S_i)``.

    Args:
        bundle: The path.
        strategy: Holdings per grid node.
        initial_holding: Holdings ``θ_{0−}`` before ``t = 0``; defaults to ``strategy[0]``.

    Raises:
        ValueError: if ``strategy`` does not have one value per grid node
    """
    theta = np.asarray(strategy, dtype=np.float64)
    if theta.shape != bundle.S.shape:
        msg = f"expected {bundle.S.size} holdings, got shape {theta.shape}"
        raise ValueError(msg)
    theta0 = theta[0] if initial_holding is None else initial_holding
    return _wealth(theta, bundle.S, theta0)


def martingale_check(
    params: ModelParams,
    coeffs: Coefficients,
    grid: SimGrid,
    n_paths: int,
    seed: int,
    *,
    n_jobs: int = 1,
    logger: logging.Logger = _LOGGER,
) -> MartingaleReport:
    """
    Check the martingale properties behind optimality by simulation.

    Reports, each with standard error and z-score:
     - ``E[−exp(−aX̂₁)]`` under ``P`` against the investor value at ``t = 0``
     - ``E[X̂₁]`` under ``Q̂`` against ``X̂₀`` (endogenous only)
     - ``E[X^N₁ − ∫κ(θ̂_N − Y)²dt]`` under ``P`` against the tracker value at ``t = 0``
       (endogenous only)

    Acceptance thresholds are left to the caller.
    """
    t0 = 0.0
    S0 = float(stock_price(coeffs, t0, params.D0, params.Y0, params.Yp0))  # noqa: N806
    x_inv0 = params.theta0[0] * S0  # type: ignore[index]
    v0 = float(investor_value(params, coeffs, t0, x_inv0, params.Y0, params.Yp0))

    rows = []
    plan = _plan(params, coeffs, grid, seed, Measure.P)
    shifts = {"investor value": v0}
    if isinstance(coeffs, EndogenousCoefficients):
        x_tr0 = params.theta_tracker0 * S0
        f0 = float(tracker_value(params, coeffs, t0, x_tr0, params.Y0, params.Yp0))
        shifts["tracker value"] = f0

    moments = _reduce(
        _map(
            _value_moments,
            [(plan, start, stop, shifts) for start, stop in _ranges(n_paths, BATCH_SIZE)],
            n_jobs,
        ),
        shifts,
    )
    rows.append(moments["investor value"].estimate("investor value under P", v0))

    if isinstance(coeffs, EndogenousCoefficients):
        q_plan = _plan(params, coeffs, grid, seed, Measure.Q_HAT)
        q_shift = {"investor wealth": x_inv0}
        q_moments = _reduce(
            _map(
                _wealth_moments,
                [(q_plan, start, stop, q_shift) for start, stop in _ranges(n_paths, BATCH_SIZE)],
                n_jobs,
            ),
            q_shift,
        )
        rows.append(q_moments["investor wealth"].estimate("investor wealth under Q-hat", x_inv0))
        f0 = shifts["tracker value"]
        rows.append(moments["tracker value"].estimate("tracker value under P", f0))

    report = MartingaleReport(model=coeffs.model, grid=grid, seed=seed, rows=tuple(rows))
    for row in report.rows:
        logger.info(
            f"{row.name}: mean {row.mean:.9g} vs {row.target:.9g}"
            f" (stderr {row.stderr:.3e}, z {row.z:+.2f})"
        )
    return report


def tracker_objective(
    params: ModelParams,
    coeffs: Coefficients,
    grid: SimGrid,
    n_paths: int,
    seed: int,
    strategy_rule: StrategyRule,
    *,
    n_jobs: int = 1,
) -> McEstimate:
    """
    Estimate ``E[X₁ − ∫₀¹κ(θ_t − Y_t)²dt]`` under ``P`` for a holding rule.

    Wealth starts at ``θ_{N,0−}·S₀``; the penalty is a left-point sum on the grid.

    Raises:
        ValueError: if the rule produces non-finite holdings
    """
    return _objective(
        params, coeffs, grid, n_paths, seed, (strategy_rule,), Objective.TRACKER, n_jobs
    )


def investor_objective(
    params: ModelParams,
    coeffs: Coefficients,
    grid: SimGrid,
    n_paths: int,
    seed: int,
    strategy_rule: StrategyRule,
    *,
    n_jobs: int = 1,
) -> McEstimate:
    """
    Estimate ``E[−exp(−aX₁)]`` under ``P`` for a holding rule.

    Wealth starts at ``θ_{j,0−}·S₀`` with ``j = 0``.

    Raises:
        ValueError: if the rule produces non-finite holdings
    """
    return _objective(
        params, coeffs, grid, n_paths, seed, (strategy_rule,), Objective.INVESTOR, n_jobs
    )


def objective_gap(
    params: ModelParams,
    coeffs: Coefficients,
    grid: SimGrid,
    n_paths: int,
    seed: int,
    strategy_rule: StrategyRule,
    baseline_rule: StrategyRule,
    objective: Objective = Objective.TRACKER,
    *,
    n_jobs: int = 1,
) -> McEstimate:
    """
    Estimate the objective of ``strategy_rule`` minus that of ``baseline_rule``.

    Both rules are scored on the same paths, so the standard error reflects only
    the difference between them.

    Raises:
        ValueError: if a rule produces non-finite holdings
    """
    return _objective(
        params, coeffs, grid, n_paths, seed, (strategy_rule, baseline_rule), objective, n_jobs
    )


def dump_paths(bundles: Iterable[PathBundle], path: Path, *, comment: str | None = None) -> Path:
    """
    Write paths as CSV with one row per path and grid node.

    Columns are ``path_id, t, D, Yp, Y, S, theta_inv, theta_tracker, X_inv, V_inv``.
    """
    frames = [
        pd.DataFrame(
            {
                "path_id": np.full(b.S.size, b.path_id),
                "t": b.grid.times,
                "D": b.D,
                "Yp": b.Yp,
                "Y": b.Y,
                "S": b.S,
                "theta_inv": b.theta_inv,
                "theta_tracker": b.theta_tracker,
                "X_inv": b.X_inv,
                "V_inv": b.V_inv,
            }
        )
        for b in bundles
    ]
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=PATH_COLUMNS)
    return write_csv(frame, path, comment=comment)


def _plan(
    params: ModelParams,
    coeffs: Coefficients,
    grid: SimGrid,
    seed: int,
    measure: Measure,
) -> _Plan:
    if coeffs.params != params:
        msg = "coefficients were not built for these parameters"
        raise ValueError(msg)
    ts = grid.times

    if isinstance(coeffs, EndogenousCoefficients):
        investor = _AffineRule.tabulate(
            lambda t, y, yp: investor_strategy(params, coeffs, t, y, yp), ts
        )
        tracker = _AffineRule.tabulate(
            lambda t, y, yp: tracker_strategy(params, coeffs, t, y, yp), ts
        )
    else:
        if measure is Measure.Q_HAT:
            raise InvalidMeasure(measure=str(measure), model=str(coeffs.model))
        investor = _AffineRule.tabulate(
            lambda t, y, _: investor_strategy_exogenous(params, t, np.full_like(t, y)), ts
        )
        tracker = _AffineRule.tabulate(
            lambda t, y, _: np.full_like(t, noise_trader_holdings(y)), ts
        )

    drift_terms = {}
    if measure is Measure.Q_HAT:
        drift_terms = {
            name: np.asarray(coeffs.value(name, ts)) for name in ("beta", "g3", "g23", "g33")
        }

    return _Plan(
        params=params,
        coeffs=coeffs,
        grid=grid,
        seed=seed,
        measure=measure,
        investor=investor,
        tracker=tracker,
        drift_terms=drift_terms,
    )


def _ranges(n_paths: int, batch_size: int) -> list[tuple[int, int]]:
    if n_paths < 1:
        msg = f"expected at least one path, got {n_paths}"
        raise ValueError(msg)
    if batch_size < 1:
        msg = f"expected a positive batch size, got {batch_size}"
        raise ValueError(msg)
    return [(start, min(start + batch_size, n_paths)) for start in range(0, n_paths, batch_size)]


def _map(fn: Callable[..., _T], args: Sequence[tuple[Any, ...]], n_jobs: int) -> Iterator[_T]:
    """Apply ``fn`` to every argument tuple, in order, optionally in worker processes."""
    if n_jobs == 1:
        for arg in args:
            yield fn(*arg)
        return

    import joblib  # multiprocessing

    with joblib.parallel_backend(backend="loky", n_jobs=n_jobs):
        yield from joblib.Parallel(return_as="generator")(joblib.delayed(fn)(*arg) for arg in args)


def _normals(seed: int, start: int, stop: int, n_steps: int) -> NDArray[np.float64]:
    """Standard normals of shape ``(3, n_paths, n_steps)`` from the per-path streams."""
    draws = np.stack(
        [path_generator(seed, index).standard_normal((3, n_steps)) for index in range(start, stop)]
    )
    return np.moveaxis(draws, 1, 0)


def _drivers(
    plan: _Plan, start: int, stop: int
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Per-step increments ``(ΔD, ΔY′, Δ∫Y′)`` without drift adjustments."""
    p, dt = plan.params, plan.grid.dt
    z_d, z_w, z_i = _normals(plan.seed, start, stop, plan.grid.n_steps)
    d_dividend = p.sigma_D * math.sqrt(dt) * z_d
    d_velocity = p.sigma_Yp * math.sqrt(dt) * z_w
    # ∫(W_u − W_{t_i})du over one step: variance Δ³/3, covariance with ΔW of Δ²/2
    d_integral = p.sigma_Yp * dt**1.5 * (z_w / 2 + z_i / (2 * math.sqrt(3)))
    return d_dividend, d_velocity, d_integral


def _state_paths(
    plan: _Plan, start: int, stop: int
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """``(D, Y′, Y)`` on all grid nodes."""
    p, dt, n = plan.params, plan.grid.dt, plan.grid.n_steps
    d_dividend, d_velocity, d_integral = _drivers(plan, start, stop)
    n_paths = stop - start

    D = np.empty((n_paths, n + 1))  # noqa: N806
    Yp = np.empty((n_paths, n + 1))  # noqa: N806
    Y = np.empty((n_paths, n + 1))  # noqa: N806
    D[:, 0], Yp[:, 0], Y[:, 0] = p.D0, p.Yp0, p.Y0

    if plan.measure is Measure.P:
        D[:, 1:] = p.D0 + np.cumsum(d_dividend, axis=1)
        Yp[:, 1:] = p.Yp0 + np.cumsum(d_velocity, axis=1)
        Y[:, 1:] = p.Y0 + np.cumsum(Yp[:, :-1] * dt + d_integral, axis=1)
        return D, Yp, Y

    a, sd2, sy2 = p.a, p.sigma_D**2, p.sigma_Yp**2
    beta, g3 = plan.drift_terms["beta"], plan.drift_terms["g3"]
    g23, g33 = plan.drift_terms["g23"], plan.drift_terms["g33"]
    for i in range(n):
        theta = plan.investor.at(i, Y[:, i], Yp[:, i])
        drift = -a * sy2 * (beta[i] * theta + g3[i] + g23[i] * Y[:, i] + 2 * g33[i] * Yp[:, i])
        D[:, i + 1] = D[:, i] - a * sd2 * theta * dt + d_dividend[:, i]
        Yp[:, i + 1] = Yp[:, i] + drift * dt + d_velocity[:, i]
        Y[:, i + 1] = Y[:, i] + Yp[:, i] * dt + drift * dt**2 / 2 + d_integral[:, i]
    return D, Yp, Y


def _wealth(
    theta: NDArray[np.float64], S: NDArray[np.float64], theta0: ArrayLike  # noqa: N803
) -> NDArray[np.float64]:
    """Left-point wealth sums along the last axis."""
    X = np.empty_like(S)  # noqa: N806
    X[..., 0] = np.asarray(theta0) * S[..., 0]
    X[..., 1:] = X[..., :1] + np.cumsum(theta[..., :-1] * np.diff(S, axis=-1), axis=-1)
    return X


def _simulate_batch(plan: _Plan, start: int, stop: int) -> PathBatch:
    p, ts = plan.params, plan.grid.times
    D, Yp, Y = _state_paths(plan, start, stop)  # noqa: N806
    S = np.asarray(stock_price(plan.coeffs, ts, D, Y, Yp))  # noqa: N806
    theta_inv = plan.investor.on_grid(Y, Yp)
    theta_tracker = plan.tracker.on_grid(Y, Yp)
    X_inv = _wealth(theta_inv, S, p.theta0[0])  # type: ignore[index]  # noqa: N806
    X_tracker = _wealth(theta_tracker, S, p.theta_tracker0)  # noqa: N806
    V_inv = np.asarray(investor_value(p, plan.coeffs, ts, X_inv, Y, Yp))  # noqa: N806
    return PathBatch(
        first_path=start,
        grid=plan.grid,
        measure=plan.measure,
        D=D,
        Yp=Yp,
        Y=Y,
        S=S,
        theta_inv=theta_inv,
        theta_tracker=theta_tracker,
        X_inv=X_inv,
        X_tracker=X_tracker,
        V_inv=V_inv,
    )


def _terminal_utility(a: float, X1: NDArray[np.float64]) -> NDArray[np.float64]:  # noqa: N803
    exponent = -a * X1
    if (np.abs(exponent) > EXPONENT_LIMIT).any():
        warnings.warn(
            f"terminal utility exponent saturated at ±{EXPONENT_LIMIT:g}",
            ExponentSaturationWarning,
            stacklevel=2,
        )
        exponent = np.clip(exponent, -EXPONENT_LIMIT, EXPONENT_LIMIT)
    return -np.exp(exponent)


def _value_moments(
    plan: _Plan, start: int, stop: int, shifts: dict[str, float]
) -> dict[str, _Moments]:
    """Terminal investor utility and tracker objective under ``P``, as moment sums."""
    D, Yp, Y = _state_paths(plan, start, stop)  # noqa: N806
    p, ts = plan.params, plan.grid.times
    S = np.asarray(stock_price(plan.coeffs, ts, D, Y, Yp))  # noqa: N806
    theta_inv = plan.investor.on_grid(Y, Yp)
    X_inv = _wealth(theta_inv, S, p.theta0[0])  # type: ignore[index]  # noqa: N806

    out = {"investor value": _Moments(shift=shifts["investor value"])}
    out["investor value"].add(_terminal_utility(p.a, X_inv[:, -1]))
    if "tracker value" in shifts:
        theta_tracker = plan.tracker.on_grid(Y, Yp)
        X_tracker = _wealth(theta_tracker, S, p.theta_tracker0)  # noqa: N806
        penalty = p.kappa * plan.grid.dt * ((theta_tracker - Y)[:, :-1] ** 2).sum(axis=1)
        out["tracker value"] = _Moments(shift=shifts["tracker value"])
        out["tracker value"].add(X_tracker[:, -1] - penalty)
    return out


def _wealth_moments(
    plan: _Plan, start: int, stop: int, shifts: dict[str, float]
) -> dict[str, _Moments]:
    """Terminal investor wealth, as moment sums."""
    batch = _simulate_batch(plan, start, stop)
    out = {"investor wealth": _Moments(shift=shifts["investor wealth"])}
    out["investor wealth"].add(batch.X_inv[:, -1])
    return out


def _reduce(parts: Iterable[dict[str, _Moments]], shifts: dict[str, float]) -> dict[str, _Moments]:
    total = {name: _Moments(shift=shift) for name, shift in shifts.items()}
    for part in parts:
        for name, moments in part.items():
            total[name].merge(moments)
    return total


def _holdings(
    rule: StrategyRule,
    ts: NDArray[np.float64],
    Y: NDArray[np.float64],  # noqa: N803
    Yp: NDArray[np.float64],  # noqa: N803
) -> NDArray[np.float64]:
    """Evaluate a user rule node by node, checking that holdings are finite."""
    theta = np.empty_like(Y)
    for i, t in enumerate(ts):
        theta[:, i] = np.broadcast_to(np.asarray(rule(float(t), Y[:, i], Yp[:, i])), Y[:, i].shape)
    if not np.isfinite(theta).all():
        msg = "strategy rule produced non-finite holdings"
        raise ValueError(msg)
    return theta


def _objective_samples(
    plan: _Plan,
    start: int,
    stop: int,
    rules: tuple[StrategyRule, ...],
    objective: Objective,
) -> dict[str, _Moments]:
    D, Yp, Y = _state_paths(plan, start, stop)  # noqa: N806
    p, ts = plan.params, plan.grid.times
    S = np.asarray(stock_price(plan.coeffs, ts, D, Y, Yp))  # noqa: N806

    scores = []
    for rule in rules:
        theta = _holdings(rule, ts, Y, Yp)
        if objective is Objective.TRACKER:
            X = _wealth(theta, S, p.theta_tracker0)  # noqa: N806
            penalty = p.kappa * plan.grid.dt * ((theta - Y)[:, :-1] ** 2).sum(axis=1)
            scores.append(X[:, -1] - penalty)
        else:
            X = _wealth(theta, S, p.theta0[0])  # type: ignore[index]  # noqa: N806
            scores.append(_terminal_utility(p.a, X[:, -1]))

    samples = scores[0] if len(scores) == 1 else scores[0] - scores[1]
    moments = _Moments(shift=0.0)
    moments.add(samples)
    return {"objective": moments}


def _objective(
    params: ModelParams,
    coeffs: Coefficients,
    grid: SimGrid,
    n_paths: int,
    seed: int,
    rules: tuple[StrategyRule, ...],
    objective: Objective,
    n_jobs: int,
) -> McEstimate:
    plan = _plan(params, coeffs, grid, seed, Measure.P)
    moments = _reduce(
        _map(
            _objective_samples,
            [(plan, start, stop, rules, objective) for start, stop in _ranges(n_paths, BATCH_SIZE)],
            n_jobs,
        ),
        {"objective": 0.0},
    )
    name = f"{objective.value} objective" + (" gap" if len(rules) > 1 else "")
    return moments["objective"].estimate(name, math.nan)
