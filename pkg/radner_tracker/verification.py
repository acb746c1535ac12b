"""
Proof by computation.

Every ODE and algebraic identity the equilibria must satisfy is evaluated on the
constructed coefficients. Derivatives of integrated functions come from the
analytic derivative of the dense interpolant; central finite differences are
reported alongside as a secondary cross-check only.

Checks return reports. With ``strict=True`` (the default), a failing report is
raised as the matching ``CheckFailure``.
"""

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Final, TypeVar

from radner_tracker._random import sample_generator
from radner_tracker.coefficients import Coefficients, CoreSolution, Model
from radner_tracker.endogenous import (
    EndogenousCoefficients,
    investor_strategy,
    solve,
    tracker_strategy,
)
from radner_tracker.error import (
    BoundViolation,
    ClearingViolation,
    IdentityViolation,
    ResidualExceedsTolerance,
)
from radner_tracker.exogenous import investor_strategy_exogenous, solve_exogenous
from radner_tracker.ode import DEFAULT_TOL
from radner_tracker.params import ModelParams

import numpy as np
import pandas as pd
from numpy.typing import NDArray


__docformat__ = "google"
__all__ = (
    "CLEARING_TOL",
    "DECOUPLING_TOL",
    "IDENTITY_TOL",
    "PROPORTIONALITY_TOL",
    "RESIDUAL_TOL",
    "TERMINAL_TOL",
    "BoundReport",
    "BoundRow",
    "ExogenousLimitReport",
    "IdentityReport",
    "IdentityRow",
    "ResidualReport",
    "ResidualRow",
    "VerificationReport",
    "check_clearing",
    "check_exogenous_limit",
    "check_pointwise_optimizers",
    "check_positivity_bounds",
    "check_proportionalities",
    "check_welfare_decoupling",
    "residuals_endogenous",
    "residuals_exogenous",
    "verify_all",
)


RESIDUAL_TOL: Final = 1e-6
"""Admissible sup-norm ODE residual."""

TERMINAL_TOL: Final = 1e-8
"""Admissible deviation from the terminal conditions."""

IDENTITY_TOL: Final = 1e-6
"""Admissible deviation between pointwise maximizers and closed-form strategies."""

CLEARING_TOL: Final = 1e-12
"""Admissible deviation from market clearing."""

DECOUPLING_TOL: Final = 1e-8
"""Admissible deviation from the decoupled welfare equations."""

PROPORTIONALITY_TOL: Final = 1e-10
"""Admissible deviation from the proportionalities between ``g₃``, ``g₂₃`` and ``β``."""

DEGENERATE_TOL: Final = 1e-10
"""Admissible deviation from closed forms when ``σ_{Y′} = 0``."""

RESIDUAL_GRID_END: Final = 1.0 - 1e-6
"""Residual grids stop short of ``t = 1``; terminal values are checked separately."""

FD_STEP: Final = 1e-6
"""Step of the central finite-difference cross-check."""

TAYLOR_POINT: Final = 1e-3
"""Forward time at which small-``s`` asymptotics of the core are checked."""

TAYLOR_REL_TOL: Final = 0.01
"""Admissible relative deviation from the small-``s`` asymptotics."""

_BOUND_ROUNDING = 8 * np.finfo(np.float64).eps

_LOGGER = logging.getLogger(__name__)

_REPORT_COLUMNS = ("check", "item", "value", "argmax_t", "tolerance", "passed")

_R = TypeVar("_R", "ResidualReport", "IdentityReport", "BoundReport")


@dataclass(kw_only=True, frozen=True, slots=True)
class ResidualRow:
    """
    Residual of one ODE on a time grid.

    Attributes:
        equation: Name of the function whose ODE is checked.
        max_residual: ``max |LHS′ − RHS|`` over the grid.
        argmax_t: Where that maximum is attained.
        terminal_value: ``|f(1)|``, which must vanish.
        fd_residual: The same residual with a central finite-difference derivative.
        tolerance: Admissible ``max_residual``.
    """

    equation: str
    max_residual: float
    argmax_t: float
    terminal_value: float
    fd_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        """``True`` if both the residual and the terminal value are within tolerance."""
        return self.max_residual < self.tolerance and self.terminal_value <= TERMINAL_TOL


@dataclass(kw_only=True, frozen=True, slots=True)
class ResidualReport:
    """
    Residuals of a model's full ODE system.

    Attributes:
        model: The checked model.
        grid_size: Number of grid points.
        rows: One row per equation.
        note: Remarks on how equations were read.
    """

    model: Model
    grid_size: int
    rows: tuple[ResidualRow, ...]
    note: str = ""

    @property
    def check(self) -> str:
        """Name of this check."""
        return f"residuals_{self.model}"

    @property
    def passed(self) -> bool:
        """``True`` if every equation is satisfied."""
        return all(row.passed for row in self.rows)

    @property
    def worst(self) -> ResidualRow:
        """The row with the largest residual relative to its tolerance."""
        return max(self.rows, key=lambda row: row.max_residual / row.tolerance)

    def __getitem__(self, equation: str) -> ResidualRow:
        return next(row for row in self.rows if row.equation == equation)

    def raise_for_failures(self) -> None:
        """
        Raise if any equation is not satisfied.

        Raises:
            ResidualExceedsTolerance: naming the worst failing equation
        """
        failing = [row for row in self.rows if not row.passed]
        if not failing:
            return
        row = max(failing, key=lambda row: row.max_residual / row.tolerance)
        if row.max_residual < row.tolerance:  # only the terminal condition failed
            raise ResidualExceedsTolerance(
                check=self.check,
                equation=f"{row.equation}(1)",
                t=1.0,
                residual=row.terminal_value,
                tolerance=TERMINAL_TOL,
            )
        raise ResidualExceedsTolerance(
            check=self.check,
            equation=row.equation,
            t=row.argmax_t,
            residual=row.max_residual,
            tolerance=row.tolerance,
        )


@dataclass(kw_only=True, frozen=True, slots=True)
class IdentityRow:
    """
    Largest deviation between two computations of the same quantity.

    Attributes:
        identity: Description of the identity.
        deviation: The largest observed deviation.
        tolerance: Admissible deviation.
    """

    identity: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        """``True`` if the deviation is within tolerance."""
        return self.deviation <= self.tolerance


@dataclass(kw_only=True, frozen=True, slots=True)
class IdentityReport:
    """
    Deviations of a group of identities.

    Attributes:
        check: Name of this check.
        rows: One row per identity.
    """

    check: str
    rows: tuple[IdentityRow, ...]

    @property
    def passed(self) -> bool:
        """``True`` if every identity holds."""
        return all(row.passed for row in self.rows)

    def __getitem__(self, identity: str) -> IdentityRow:
        return next(row for row in self.rows if row.identity == identity)

    def raise_for_failures(self) -> None:
        """
        Raise if any identity does not hold.

        Raises:
            ClearingViolation: if this is a clearing check
            IdentityViolation: otherwise
        """
        for row in self.rows:
            if row.passed:
                continue
            if self.check == "clearing":
                raise ClearingViolation(
                    check=self.check, deviation=row.deviation, tolerance=row.tolerance
                )
            raise IdentityViolation(
                check=self.check,
                identity=row.identity,
                deviation=row.deviation,
                tolerance=row.tolerance,
            )


@dataclass(kw_only=True, frozen=True, slots=True)
class BoundRow:
    """
    One a priori bound of a core solution.

    Attributes:
        bound: Description of the bound.
        value: The worst value relative to the bound (see ``bound``).
        limit: The bound for ``value``.
        s: Where ``value`` is attained.
        passed: Whether the bound holds.
    """

    bound: str
    value: float
    limit: float
    s: float
    passed: bool


@dataclass(kw_only=True, frozen=True, slots=True)
class BoundReport:
    """
    Positivity, bounds and small-``s`` asymptotics of a core solution.

    Attributes:
        model: The checked model.
        rows: One row per bound.
    """

    model: Model
    rows: tuple[BoundRow, ...]

    @property
    def check(self) -> str:
        """Name of this check."""
        return f"bounds_{self.model}"

    @property
    def passed(self) -> bool:
        """``True`` if every bound holds."""
        return all(row.passed for row in self.rows)

    def __getitem__(self, bound: str) -> BoundRow:
        return next(row for row in self.rows if row.bound == bound)

    def raise_for_failures(self) -> None:
        """
        Raise if any bound is violated.

        Raises:
            BoundViolation: for the first violated bound
        """
        for row in self.rows:
            if not row.passed:
                raise BoundViolation(
                    check=self.check, bound=row.bound, s=row.s, value=row.value, limit=row.limit
                )


@dataclass(kw_only=True, frozen=True, slots=True)
class ExogenousLimitReport:
    """
    Distance of the endogenous ``β(0)`` and ``g₃₃(0)`` to the exogenous ones for growing ``κ``.

    Attributes:
        kappas: The tracking penalties, increasing.
        beta_errors: ``|β^en(0) − β^ex(0)|`` per ``κ``.
        g33_errors: ``|g₃₃^en(0) − g₃₃^ex(0)|`` per ``κ``.
    """

    kappas: tuple[float, ...]
    beta_errors: tuple[float, ...]
    g33_errors: tuple[float, ...]

    @property
    def converges(self) -> bool:
        """``True`` if both errors at the largest ``κ`` are below those at the smallest."""
        return (
            self.beta_errors[-1] < self.beta_errors[0] and self.g33_errors[-1] < self.g33_errors[0]
        )


@dataclass(kw_only=True, frozen=True, slots=True)
class VerificationReport:
    """
    The outcome of every check for one parameter set.

    Attributes:
        residuals: ODE residual reports, one per model.
        identities: Identity reports (optimizers, clearing, decoupling).
        bounds: Core bound reports, one per model.
    """

    residuals: tuple[ResidualReport, ...]
    identities: tuple[IdentityReport, ...]
    bounds: tuple[BoundReport, ...]

    @property
    def passed(self) -> bool:
        """``True`` if every check passed."""
        return all(r.passed for r in (*self.residuals, *self.identities, *self.bounds))

    def raise_for_failures(self) -> None:
        """
        Raise the first failure, residuals first.

        Raises:
            CheckFailure: the matching subclass for the first failing check
        """
        for report in (*self.residuals, *self.identities, *self.bounds):
            report.raise_for_failures()

    def to_frame(self) -> pd.DataFrame:
        """One row per checked item: ``check, item, value, argmax_t, tolerance, passed``."""
        rows: list[dict[str, object]] = []
        for res in self.residuals:
            rows.extend(
                {
                    "check": res.check,
                    "item": row.equation,
                    "value": row.max_residual,
                    "argmax_t": row.argmax_t,
                    "tolerance": row.tolerance,
                    "passed": row.passed,
                }
                for row in res.rows
            )
        for ident in self.identities:
            rows.extend(
                {
                    "check": ident.check,
                    "item": row.identity,
                    "value": row.deviation,
                    "argmax_t": np.nan,
                    "tolerance": row.tolerance,
                    "passed": row.passed,
                }
                for row in ident.rows
            )
        for bound in self.bounds:
            rows.extend(
                {
                    "check": bound.check,
                    "item": row.bound,
                    "value": row.value,
                    "argmax_t": 1.0 - row.s,
                    "tolerance": row.limit,
                    "passed": row.passed,
                }
                for row in bound.rows
            )
        return pd.DataFrame(rows, columns=list(_REPORT_COLUMNS))


def residuals_endogenous(
    params: ModelParams,
    coeffs: EndogenousCoefficients,
    grid_size: int = 1001,
    *,
    tolerance: float = RESIDUAL_TOL,
    strict: bool = True,
) -> ResidualReport:
    """
    Substitute the endogenous coefficients into all fifteen ODEs.

    The ``f₂₂′`` equation is evaluated with ``M`` read as ``I``.

    Args:
        params: Model parameters.
        coeffs: Coefficients built for ``params``.
        grid_size: Number of points of the uniform grid on ``[0, 1 − 10⁻⁶]``, at least 11.
        tolerance: Admissible sup-norm residual.
        strict: Raise if any equation fails.

    Raises:
        ResidualExceedsTolerance: if ``strict`` and an equation is not satisfied
    """
    ts = _grid(grid_size)
    rhs = _endogenous_rhs(params, coeffs.table(ts))
    report = ResidualReport(
        model=Model.ENDOGENOUS,
        grid_size=grid_size,
        rows=tuple(_residual_rows(coeffs, ts, rhs, tolerance)),
        note="f22 equation evaluated with M := I",
    )
    return _finish(report, strict)


def residuals_exogenous(
    params: ModelParams,
    coeffs: Coefficients,
    grid_size: int = 1001,
    *,
    tolerance: float = RESIDUAL_TOL,
    strict: bool = True,
) -> ResidualReport:
    """
    Substitute the exogenous coefficients into all nine ODEs.

    Args:
        params: Model parameters.
        coeffs: Exogenous coefficients built for ``params``.
        grid_size: Number of points of the uniform grid on ``[0, 1 − 10⁻⁶]``, at least 11.
        tolerance: Admissible sup-norm residual.
        strict: Raise if any equation fails.

    Raises:
        ResidualExceedsTolerance: if ``strict`` and an equation is not satisfied
    """
    ts = _grid(grid_size)
    rhs = _exogenous_rhs(params, coeffs.table(ts))
    report = ResidualReport(
        model=Model.EXOGENOUS,
        grid_size=grid_size,
        rows=tuple(_residual_rows(coeffs, ts, rhs, tolerance)),
    )
    return _finish(report, strict)


def check_pointwise_optimizers(
    params: ModelParams,
    coeffs: EndogenousCoefficients,
    n_samples: int = 10_000,
    seed: int = 42,
    *,
    tolerance: float = IDENTITY_TOL,
    strict: bool = True,
) -> IdentityReport:
    """
    Compare the maximizers of the ``dt`` terms of the value processes with the strategies.

    States are drawn with ``t`` uniform on ``[0, 1 − 10⁻³]`` and ``Y, Y′`` standard
    normal scaled by 3. ``μ′`` and ``α′`` are analytic, ``β′`` is the interpolant derivative.

    Raises:
        IdentityViolation: if ``strict`` and a deviation exceeds ``tolerance``
    """
    t, Y, Yp = _random_states(n_samples, seed)  # noqa: N806
    a, kappa = params.a, params.kappa
    sd2, sy2 = params.sigma_D**2, params.sigma_Yp**2

    d_mu = coeffs.derivative("mu", t)
    d_alpha = coeffs.derivative("alpha", t)
    d_beta = coeffs.derivative("beta", t)
    alpha, beta = coeffs.alpha(t), coeffs.beta(t)
    g3, g23, g33 = coeffs.g3(t), coeffs.g23(t), coeffs.g33(t)

    investor_max = (
        d_mu
        - a * sy2 * beta * (g23 * Y + g3)
        + d_alpha * Y
        + (alpha - 2 * a * sy2 * g33 * beta + d_beta) * Yp
    ) / (a * (sd2 + sy2 * beta**2))
    tracker_max = (2 * kappa * Y + d_alpha * Y + (alpha + d_beta) * Yp + d_mu) / (2 * kappa)

    investor_dev = np.abs(investor_max - investor_strategy(params, coeffs, t, Y, Yp))
    tracker_dev = np.abs(tracker_max - tracker_strategy(params, coeffs, t, Y, Yp))

    report = IdentityReport(
        check="pointwise_optimizers",
        rows=(
            IdentityRow(
                identity="investor maximizer = investor_strategy",
                deviation=float(investor_dev.max()),
                tolerance=tolerance,
            ),
            IdentityRow(
                identity="tracker maximizer = tracker_strategy",
                deviation=float(tracker_dev.max()),
                tolerance=tolerance,
            ),
        ),
    )
    return _finish(report, strict)


def check_clearing(
    params: ModelParams,
    coeffs: Coefficients,
    n_samples: int = 10_000,
    seed: int = 42,
    *,
    tolerance: float = CLEARING_TOL,
    strict: bool = True,
) -> float:
    """
    Largest ``|I·θ̂_j + θ̂_N − Σ|`` over random states.

    For exogenous coefficients, the noise trader's holdings ``Y`` take the place of ``θ̂_N``.

    Raises:
        ClearingViolation: if ``strict`` and the deviation exceeds ``tolerance``
    """
    report = _clearing_report(params, coeffs, n_samples, seed, tolerance)
    _finish(report, strict)
    return report.rows[0].deviation


def check_positivity_bounds(
    core: CoreSolution,
    params: ModelParams,
    *,
    strict: bool = True,
) -> BoundReport:
    """
    Check ``0 < z₁(s) < C₁s²`` and ``0 < z₂(s) < C₂s³`` on a 1001-point grid of ``(0, 1]``.

    With ``σ_{Y′} = 0`` the bounds are attained, so equality within ``10⁻¹⁰`` is
    checked instead. Also checks ``z₁(s)/s² → C₁`` and ``z₂(s)/s³ → C₂`` at
    ``s = 10⁻³`` within 1%, where ``2C₁ = z₁″(0)`` and ``6C₂ = z₂‴(0)``.

    Raises:
        BoundViolation: if ``strict`` and a bound is violated
    """
    c1, c2 = _core_bounds(params, core.model)
    s = np.linspace(0.0, 1.0, 1001)[1:]
    z1, z2 = core.z1(s), core.z2(s)
    b1, b2 = c1 * s**2, c2 * s**3

    rows = []
    if params.sigma_Yp == 0:
        for name, z, b in (("z1 = C1 s^2", z1, b1), ("z2 = C2 s^3", z2, b2)):
            dev = np.abs(z - b)
            i = int(np.argmax(dev))
            rows.append(
                BoundRow(
                    bound=name,
                    value=float(dev[i]),
                    limit=DEGENERATE_TOL,
                    s=float(s[i]),
                    passed=bool(dev[i] <= DEGENERATE_TOL),
                )
            )
    else:
        for name, z in (("z1 > 0", z1), ("z2 > 0", z2)):
            i = int(np.argmin(z))
            rows.append(
                BoundRow(
                    bound=name, value=float(z[i]), limit=0.0, s=float(s[i]), passed=bool(z[i] > 0)
                )
            )
        for name, z, b in (("z1 < C1 s^2", z1, b1), ("z2 < C2 s^3", z2, b2)):
            ratio = z / b
            i = int(np.argmax(ratio))
            rows.append(
                BoundRow(
                    bound=name,
                    value=float(ratio[i]),
                    limit=1.0,
                    s=float(s[i]),
                    passed=bool(ratio[i] < 1.0 + _BOUND_ROUNDING),
                )
            )

    h = TAYLOR_POINT
    for name, scaled, coefficient in (
        ("z1(s)/s^2 -> C1", float(core.z1(h)) / h**2, c1),
        ("z2(s)/s^3 -> C2", float(core.z2(h)) / h**3, c2),
    ):
        rel = abs(scaled / coefficient - 1.0)
        rows.append(
            BoundRow(bound=name, value=rel, limit=TAYLOR_REL_TOL, s=h, passed=rel <= TAYLOR_REL_TOL)
        )

    return _finish(BoundReport(model=core.model, rows=tuple(rows)), strict)


def check_proportionalities(
    params: ModelParams,
    coeffs: Coefficients,
    grid_size: int = 1001,
    *,
    tolerance: float = PROPORTIONALITY_TOL,
    strict: bool = True,
) -> IdentityReport:
    """
    Check ``g₃ = −Σ·g₂₃`` and ``g₂₃ = γβ`` on a uniform grid.

    ``γ = 2κ/(2Iκ+aσ_D²)`` in the endogenous model and ``1/I`` in the exogenous one.

    Raises:
        IdentityViolation: if ``strict`` and a deviation exceeds ``tolerance``
    """
    if coeffs.model is Model.EXOGENOUS:
        gamma = 1 / params.I
    else:
        gamma = 2 * params.kappa / params.endogenous_scale
    ts = _grid(grid_size)
    g23 = coeffs.g23(ts)
    g3_dev = np.abs(coeffs.g3(ts) + params.Sigma * g23)
    g23_dev = np.abs(g23 - gamma * coeffs.beta(ts))

    report = IdentityReport(
        check=f"proportionalities_{coeffs.model}",
        rows=(
            IdentityRow(
                identity="g3 = -Sigma*g23", deviation=float(g3_dev.max()), tolerance=tolerance
            ),
            IdentityRow(
                identity="g23 = gamma*beta", deviation=float(g23_dev.max()), tolerance=tolerance
            ),
        ),
    )
    return _finish(report, strict)


def check_exogenous_limit(
    params: ModelParams,
    kappas: Sequence[float] = (1e2, 1e3, 1e4),
    tol: float = DEFAULT_TOL,
) -> ExogenousLimitReport:
    """
    Distances of the endogenous ``β(0)``, ``g₃₃(0)`` to the exogenous ones as ``κ`` grows.

    The exogenous model is the limit of the endogenous one for ``κ → ∞``.
    """
    ex = solve_exogenous(params, tol).coeffs
    beta_ex, g33_ex = ex.beta(0.0), ex.g33(0.0)
    beta_errors, g33_errors = [], []
    for kappa in kappas:
        en = solve(params.replace(kappa=float(kappa)), tol).coeffs
        beta_errors.append(abs(en.beta(0.0) - beta_ex))
        g33_errors.append(abs(en.g33(0.0) - g33_ex))
        _LOGGER.debug(f"κ={kappa:g}: β error {beta_errors[-1]:.3e}, g33 error {g33_errors[-1]:.3e}")
    return ExogenousLimitReport(
        kappas=tuple(float(k) for k in kappas),
        beta_errors=tuple(beta_errors),
        g33_errors=tuple(g33_errors),
    )


def check_welfare_decoupling(
    params: ModelParams,
    coeffs: Coefficients,
    grid_size: int = 1001,
    *,
    tolerance: float = DECOUPLING_TOL,
    strict: bool = True,
) -> IdentityReport:
    """
    Check the decoupled equations for ``g₁′`` and ``μ`` behind the welfare difference.

    Exogenous: ``g₁′ = −aΣ²σ_D²/(2I²) − σ_{Y′}²g₃₃`` and ``μ = (aΣσ_D²/I)(t−1)``.
    Endogenous: ``g₁′ = −2aκ²Σ²σ_D²/(2Iκ+aσ_D²)² − σ_{Y′}²g₃₃`` and
    ``μ = (2aκΣσ_D²/(2Iκ+aσ_D²))(t−1)``.

    Raises:
        IdentityViolation: if ``strict`` and a deviation exceeds ``tolerance``
    """
    a, I, Sigma = params.a, params.I, params.Sigma  # noqa: N806
    sd2, sy2 = params.sigma_D**2, params.sigma_Yp**2
    if coeffs.model is Model.EXOGENOUS:
        slope = a * Sigma**2 * sd2 / (2 * I**2)
        mu_rate = a * Sigma * sd2 / I
    else:
        c = params.endogenous_scale
        slope = 2 * a * params.kappa**2 * Sigma**2 * sd2 / c**2
        mu_rate = 2 * a * params.kappa * Sigma * sd2 / c

    ts = _grid(grid_size)
    g1_dev = np.abs(coeffs.derivative("g1", ts) - (-slope - sy2 * coeffs.g33(ts)))
    mu_dev = np.abs(coeffs.mu(ts) - mu_rate * (ts - 1.0))

    report = IdentityReport(
        check=f"welfare_decoupling_{coeffs.model}",
        rows=(
            IdentityRow(
                identity="g1' decoupled", deviation=float(g1_dev.max()), tolerance=tolerance
            ),
            IdentityRow(identity="mu linear", deviation=float(mu_dev.max()), tolerance=tolerance),
        ),
    )
    return _finish(report, strict)


def verify_all(
    params: ModelParams,
    tol: float = DEFAULT_TOL,
    grid_size: int = 1001,
    n_samples: int = 10_000,
    seed: int = 42,
    *,
    models: Iterable[Model] = (Model.ENDOGENOUS, Model.EXOGENOUS),
    logger: logging.Logger = _LOGGER,
) -> VerificationReport:
    """
    Run every check for the given models without raising.

    Use ``VerificationReport.raise_for_failures()`` to turn failures into exceptions.
    """
    residuals, identities, bounds = [], [], []
    for model in models:
        if model is Model.ENDOGENOUS:
            en = solve(params, tol, logger=logger)
            residuals.append(residuals_endogenous(params, en.coeffs, grid_size, strict=False))
            identities.append(
                check_pointwise_optimizers(params, en.coeffs, n_samples, seed, strict=False)
            )
            identities.append(
                _clearing_report(params, en.coeffs, n_samples, seed, CLEARING_TOL)
            )
            identities.append(check_proportionalities(params, en.coeffs, grid_size, strict=False))
            identities.append(check_welfare_decoupling(params, en.coeffs, grid_size, strict=False))
            bounds.append(check_positivity_bounds(en.core, params, strict=False))
        else:
            ex = solve_exogenous(params, tol, logger=logger)
            residuals.append(residuals_exogenous(params, ex.coeffs, grid_size, strict=False))
            identities.append(
                _clearing_report(params, ex.coeffs, n_samples, seed, CLEARING_TOL)
            )
            identities.append(check_proportionalities(params, ex.coeffs, grid_size, strict=False))
            identities.append(check_welfare_decoupling(params, ex.coeffs, grid_size, strict=False))
            bounds.append(check_positivity_bounds(ex.core, params, strict=False))

    report = VerificationReport(
        residuals=tuple(residuals), identities=tuple(identities), bounds=tuple(bounds)
    )
    logger.info(f"verification {'passed' if report.passed else 'failed'}")
    return report


def _finish(report: _R, strict: bool) -> _R:  # noqa: FBT001
    if strict:
        report.raise_for_failures()
    return report


def _grid(grid_size: int) -> NDArray[np.float64]:
    if grid_size < 11:  # noqa: PLR2004
        msg = f"expected a grid of at least 11 points, got {grid_size}"
        raise ValueError(msg)
    return np.linspace(0.0, RESIDUAL_GRID_END, grid_size)


def _random_states(
    n_samples: int, seed: int
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    if n_samples < 1:
        msg = f"expected at least one sample, got {n_samples}"
        raise ValueError(msg)
    rng = sample_generator(seed)
    t = rng.uniform(0.0, 1.0 - 1e-3, n_samples)
    Y = 3.0 * rng.standard_normal(n_samples)  # noqa: N806
    Yp = 3.0 * rng.standard_normal(n_samples)  # noqa: N806
    return t, Y, Yp


def _clearing_report(
    params: ModelParams,
    coeffs: Coefficients,
    n_samples: int,
    seed: int,
    tolerance: float,
) -> IdentityReport:
    t, Y, Yp = _random_states(n_samples, seed)  # noqa: N806
    if isinstance(coeffs, EndogenousCoefficients):
        investors = params.I * investor_strategy(params, coeffs, t, Y, Yp)
        other = tracker_strategy(params, coeffs, t, Y, Yp)
    else:
        investors = params.I * investor_strategy_exogenous(params, t, Y)
        other = Y
    deviation = float(np.abs(investors + other - params.Sigma).max())
    return IdentityReport(
        check="clearing",
        rows=(
            IdentityRow(
                identity=f"I*theta_j + theta_N = Sigma ({coeffs.model})",
                deviation=deviation,
                tolerance=tolerance,
            ),
        ),
    )


def _core_bounds(params: ModelParams, model: Model) -> tuple[float, float]:
    """``(C₁, C₂)`` with ``z₁ < C₁s²`` and ``z₂ < C₂s³``."""
    a, I, sd2 = params.a, params.I, params.sigma_D**2  # noqa: N806
    if model is Model.EXOGENOUS:
        return a * sd2 / (2 * I), a * sd2 / (6 * I**2)
    c = params.endogenous_scale
    kappa = params.kappa
    return a * kappa * sd2 / c, 2 * a * kappa**2 * sd2 / (3 * c**2)


def _residual_rows(
    coeffs: Coefficients,
    ts: NDArray[np.float64],
    rhs: dict[str, NDArray[np.float64]],
    tolerance: float,
) -> Iterable[ResidualRow]:
    t_hi = np.minimum(ts + FD_STEP, 1.0)
    t_lo = np.maximum(ts - FD_STEP, 0.0)
    for name, expected in rhs.items():
        residual = np.abs(coeffs.derivative(name, ts) - expected)
        fd = (coeffs.value(name, t_hi) - coeffs.value(name, t_lo)) / (t_hi - t_lo)
        i = int(np.argmax(residual))
        yield ResidualRow(
            equation=name,
            max_residual=float(residual[i]),
            argmax_t=float(ts[i]),
            terminal_value=abs(coeffs.value(name, 1.0)),
            fd_residual=float(np.abs(fd - expected).max()),
            tolerance=tolerance,
        )


def _endogenous_rhs(
    params: ModelParams, v: dict[str, NDArray[np.float64]]
) -> dict[str, NDArray[np.float64]]:
    """The right-hand sides of the endogenous ODE system, evaluated on coefficient values."""
    a, I, kappa, Sigma = params.a, params.I, params.kappa, params.Sigma  # noqa: N806
    sd2, sy2 = params.sigma_D**2, params.sigma_Yp**2
    M = I  # noqa: N806
    beta, g3, g23, g33 = v["beta"], v["g3"], v["g23"], v["g33"]

    den = a * sd2 + a * sy2 * beta**2 + 2 * I * kappa
    den2 = den**2
    p = a * sy2 * beta**2 * (a * sd2 + 4 * I * kappa) + (a * sd2 + 2 * I * kappa) ** 2
    var = sd2 + sy2 * beta**2
    supply = sy2 * beta * (I * g3 + Sigma * beta) + Sigma * sd2

    return {
        "alpha": -2 * a * kappa * (sy2 * beta * (beta - I * g23) + sd2) / den,
        "beta": 4 * a * I * sy2 * g33 * beta * kappa / den - v["alpha"],
        "mu": 2 * a * kappa * supply / den,
        "g1": a * sy2 * g3**2 * p / (2 * den2)
        + 2 * a * Sigma * kappa * (a * sy2 * g3 * beta - kappa * Sigma) * var / den2
        - sy2 * g33,
        "g2": a * sy2 * g23 * (g3 * p + 2 * a * Sigma * beta * kappa * var) / den2
        - 2 * a * kappa * var * (a * sy2 * g3 * beta - 2 * Sigma * kappa) / den2,
        "g3": 2 * a * sy2 * g33 * (g3 * p + 2 * a * Sigma * beta * kappa * var) / den2 - v["g2"],
        "g22": a * sy2 * g23**2 * p / (2 * den2)
        - 2 * a * kappa * (a * sy2 * g23 * beta + kappa) * var / den2,
        "g23": 2 * a * sy2 * g33 * (g23 * p - 2 * a * kappa * beta * var) / den2 - 2 * v["g22"],
        "g33": 2 * a * sy2 * g33**2 * p / den2 - g23,
        "f1": -kappa * (a * sy2 * beta * (I * g3 + Sigma * beta) + a * Sigma * sd2) ** 2 / den2
        - sy2 * v["f33"],
        "f2": -2 * a * I * kappa * (a * sy2 * g23 * beta + 2 * kappa) * supply / den2,
        "f3": -4 * a**2 * I * sy2 * g33 * beta * kappa * supply / den2 - v["f2"],
        "f22": a
        * kappa
        * (sy2 * beta * (beta - I * g23) + sd2)
        * (a * sy2 * beta * (M * g23 + beta) + a * sd2 + 4 * I * kappa)
        / den2,
        "f23": -4 * a * I**2 * sy2 * g33 * beta * kappa * (a * sy2 * g23 * beta + 2 * kappa) / den2
        - 2 * v["f22"],
        "f33": -4 * a**2 * I**2 * sy2**2 * g33**2 * beta**2 * kappa / den2 - v["f23"],
    }


def _exogenous_rhs(
    params: ModelParams, v: dict[str, NDArray[np.float64]]
) -> dict[str, NDArray[np.float64]]:
    """The right-hand sides of the exogenous ODE system, evaluated on coefficient values."""
    a, I, Sigma = params.a, params.I, params.Sigma  # noqa: N806
    sd2, sy2 = params.sigma_D**2, params.sigma_Yp**2
    beta, g3, g23, g33 = v["beta"], v["g3"], v["g23"], v["g33"]
    var = sd2 + sy2 * beta**2

    return {
        "alpha": -a * (sy2 * beta * (beta - I * g23) + sd2) / I,
        "beta": 2 * a * sy2 * g33 * beta - v["alpha"],
        "mu": a * (sy2 * beta * (I * g3 + Sigma * beta) + Sigma * sd2) / I,
        "g1": (a * I**2 * sy2 * g3**2 - a * Sigma**2 * var - 2 * I**2 * sy2 * g33) / (2 * I**2),
        "g2": a * (I**2 * sy2 * g23 * g3 + Sigma * var) / I**2,
        "g3": 2 * a * sy2 * g3 * g33 - v["g2"],
        "g22": -a * (sy2 * (beta**2 - I**2 * g23**2) + sd2) / (2 * I**2),
        "g23": 2 * a * sy2 * g23 * g33 - 2 * v["g22"],
        "g33": 2 * a * sy2 * g33**2 - g23,
    }
