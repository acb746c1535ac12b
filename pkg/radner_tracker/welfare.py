"""
Aggregate welfare of both equilibria.

Aggregate welfare is the sum of the investors' certainty equivalents at ``t = 0``,

    S₀(Σ − Y₀) + I·(g₁ + g₂Y₀ + g₃Y′₀ + g₂₂Y₀² + g₂₃Y₀Y′₀ + g₃₃Y′₀²)(0).

For ``Y₀ = Y′₀ = 0`` the difference between the endogenous and the exogenous model
has the closed form

    a³Σ²σ_D⁶ / (2I(aσ_D² + 2κI)²) + Iσ_{Y′}² ∫₀¹(g₃₃^en − g₃₃^ex)du,

whose first term grows with the stock supply ``Σ`` while the second does not
depend on it. The endogenous model therefore wins exactly when ``Σ`` exceeds a
threshold ``Σ*``.

Sweeps over one parameter and several risk aversions tabulate the difference;
``plot_sweep()`` charts such a table and requires the ``plot`` extra.
"""

import io
import logging
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Final

from radner_tracker._emit import write_csv, write_text
from radner_tracker.coefficients import Coefficients, Model
from radner_tracker.endogenous import (
    EndogenousCoefficients,
    solve,
    solve_core,
    stock_price,
    tracker_value,
)
from radner_tracker.error import EquilibriumError, HypothesisViolation
from radner_tracker.exogenous import solve_core_exogenous, solve_exogenous
from radner_tracker.ode import DEFAULT_TOL
from radner_tracker.params import ModelParams

import numpy as np
import pandas as pd


__docformat__ = "google"
__all__ = (
    "A_VALUES",
    "SWEEP_AXES",
    "SWEEP_COLUMNS",
    "SWEEP_PANELS",
    "WelfareReport",
    "aggregate_welfare",
    "plot_sweep",
    "read_sweep_csv",
    "sigma_threshold",
    "sweep",
    "tracker_welfare",
    "welfare_difference",
    "write_sweep_csv",
)


SWEEP_AXES: Final = ("sigma_Yp", "sigma_D", "kappa", "I")
"""Parameters a sweep can vary."""

A_VALUES: Final = (1.0, 10.0, 20.0)
"""Default risk aversions of a sweep, one line each."""

SWEEP_PANELS: Final[dict[str, tuple[float, ...]]] = {
    "sigma_Yp": (0.0, 1.0, 2.5, 5.0, 7.5, 10.0, 15.0, 20.0),
    "sigma_D": (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0),
    "kappa": (0.5, 1.0, 2.5, 5.0, 10.0, 25.0, 50.0),
    "I": (1, 2, 5, 10, 20, 50),
}
"""Default values per sweep axis; other parameters come from ``ModelParams.sweep_base()``."""

SWEEP_COLUMNS: Final = (
    "axis",
    "axis_value",
    "a",
    "diff_direct",
    "diff_formula",
    "g33_gap_integral",
    "sigma_threshold",
)
"""Columns of sweep CSV files."""

_LOGGER = logging.getLogger(__name__)


@dataclass(kw_only=True, frozen=True, slots=True)
class WelfareReport:
    """
    Aggregate welfare of both models and their difference.

    Attributes:
        ce_sum_endogenous: Aggregate welfare with the noise tracker.
        ce_sum_exogenous: Aggregate welfare with the noise trader.
        difference_direct: ``Σ(μ^en(0) − μ^ex(0)) + I(g₁^en(0) − g₁^ex(0))``.
        difference_formula: The closed-form difference, or ``None`` unless ``Y₀ = Y′₀ = 0``.
        g33_integral_gap: ``∫₀¹(g₃₃^en − g₃₃^ex)du``.
        sigma_threshold: ``Σ*``, above which the endogenous model has higher welfare.
        first_term: ``a³Σ²σ_D⁶ / (2I(aσ_D² + 2κI)²)``.
    """

    ce_sum_endogenous: float
    ce_sum_exogenous: float
    difference_direct: float
    difference_formula: float | None
    g33_integral_gap: float
    sigma_threshold: float
    first_term: float

    @property
    def ce_difference(self) -> float:
        """Endogenous minus exogenous aggregate welfare."""
        return self.ce_sum_endogenous - self.ce_sum_exogenous

    def to_frame(self) -> pd.DataFrame:
        """A single-row table of all fields."""
        row = asdict(self)
        if row["difference_formula"] is None:
            row["difference_formula"] = math.nan
        row["ce_difference"] = self.ce_difference
        return pd.DataFrame([row])


def aggregate_welfare(
    params: ModelParams,
    coeffs: Coefficients,
    model: Model | None = None,
) -> float:
    """
    The sum of the investors' certainty equivalents at ``t = 0``.

    ``S₀`` is the equilibrium price at ``D₀``, which shifts both models equally.

    Raises:
        ValueError: if ``model`` is given and ``coeffs`` belong to the other model
    """
    if model is not None and coeffs.model is not model:
        msg = f"expected coefficients of the {model} model, got {coeffs.model}"
        raise ValueError(msg)
    Y0, Yp0 = params.Y0, params.Yp0  # noqa: N806
    S0 = float(stock_price(coeffs, 0.0, params.D0, Y0, Yp0))  # noqa: N806
    g = {name: float(coeffs.value(name, 0.0)) for name in ("g1", "g2", "g3", "g22", "g23", "g33")}
    per_investor = (
        g["g1"]
        + g["g2"] * Y0
        + g["g3"] * Yp0
        + g["g22"] * Y0**2
        + g["g23"] * Y0 * Yp0
        + g["g33"] * Yp0**2
    )
    return S0 * (params.Sigma - Y0) + params.I * per_investor


def tracker_welfare(params: ModelParams, coeffs: EndogenousCoefficients) -> float:
    """
    The noise tracker's value at ``t = 0``, with wealth ``θ_{N,0−}·S₀``.

    Raises:
        ValueError: if ``coeffs`` are not endogenous
    """
    if not isinstance(coeffs, EndogenousCoefficients):
        msg = "the noise tracker only exists in the endogenous model"
        raise ValueError(msg)  # noqa: TRY004
    S0 = float(stock_price(coeffs, 0.0, params.D0, params.Y0, params.Yp0))  # noqa: N806
    x0 = params.theta_tracker0 * S0
    return float(tracker_value(params, coeffs, 0.0, x0, params.Y0, params.Yp0))


def welfare_difference(
    params: ModelParams,
    tol: float = DEFAULT_TOL,
    *,
    require_formula: bool = False,
    logger: logging.Logger = _LOGGER,
) -> WelfareReport:
    """
    Compare the aggregate welfare of both models.

    The direct difference is always computed. The closed form is computed only
    when ``Y₀ = Y′₀ = 0``, where both agree.

    Args:
        params: Model parameters.
        tol: Integration tolerance of both core IVPs.
        require_formula: Fail instead of omitting the closed form.
        logger: Receives a summary.

    Raises:
        HypothesisViolation: if ``require_formula`` and ``Y₀`` or ``Y′₀`` is nonzero
    """
    formula_applies = params.Y0 == 0 and params.Yp0 == 0
    if require_formula and not formula_applies:
        raise HypothesisViolation(
            hypothesis="Y0 = Yp0 = 0 for the closed-form welfare difference",
            detail=f"Y0={params.Y0:g} and Yp0={params.Yp0:g}",
        )

    en = solve(params, tol, logger=logger)
    ex = solve_exogenous(params, tol, logger=logger)

    gap = en.core.g33_integral() - ex.core.g33_integral()
    first = _first_term(params)
    direct = params.Sigma * (en.coeffs.mu(0.0) - ex.coeffs.mu(0.0)) + params.I * (
        en.coeffs.g1(0.0) - ex.coeffs.g1(0.0)
    )
    formula = first + params.I * params.sigma_Yp**2 * gap if formula_applies else None

    report = WelfareReport(
        ce_sum_endogenous=aggregate_welfare(params, en.coeffs),
        ce_sum_exogenous=aggregate_welfare(params, ex.coeffs),
        difference_direct=float(direct),
        difference_formula=formula,
        g33_integral_gap=gap,
        sigma_threshold=_threshold(params, gap),
        first_term=first,
    )
    logger.info(
        f"welfare difference {report.difference_direct:.12g}"
        f" (formula {report.difference_formula}, Σ*={report.sigma_threshold:.9g})"
    )
    return report


def sigma_threshold(params: ModelParams, tol: float = DEFAULT_TOL) -> float:
    """
    The stock supply ``Σ*`` above which the endogenous model has higher welfare.

    ``Σ*² = max(0, −2I²σ_{Y′}²(aσ_D² + 2κI)² ∫₀¹(g₃₃^en − g₃₃^ex)du / (a³σ_D⁶))``,
    which does not depend on ``Σ``.
    """
    gap = solve_core(params, tol).g33_integral() - solve_core_exogenous(params, tol).g33_integral()
    return _threshold(params, gap)


def sweep(
    base: ModelParams,
    axis: str,
    values: Sequence[float] | None = None,
    a_values: Sequence[float] = A_VALUES,
    tol: float = DEFAULT_TOL,
    *,
    n_jobs: int = 1,
    logger: logging.Logger = _LOGGER,
) -> pd.DataFrame:
    """
    Tabulate the welfare difference over one parameter and several risk aversions.

    Cells are computed independently; a failing cell is recorded in the ``error``
    column instead of aborting the sweep. Rows are ordered by ``a``, then by axis value.

    Args:
        base: Parameters shared by all cells.
        axis: One of ``SWEEP_AXES``.
        values: Values of ``axis``; defaults to ``SWEEP_PANELS[axis]``.
        a_values: Risk aversions.
        tol: Integration tolerance.
        n_jobs: Number of worker processes.
        logger: Receives per-cell failures.

    Returns:
        The columns of ``SWEEP_COLUMNS`` plus ``error``.

    Raises:
        ValueError: if ``axis`` is unknown or there are no cells
        HypothesisViolation: if ``base`` has nonzero ``Y0`` or ``Yp0``
        ImportError: if ``n_jobs != 1`` and the ``joblib`` extra is missing
    """
    if axis not in SWEEP_AXES:
        msg = f"expected one of {', '.join(SWEEP_AXES)}, got {axis!r}"
        raise ValueError(msg)
    if base.Y0 != 0 or base.Yp0 != 0:
        raise HypothesisViolation(
            hypothesis="Y0 = Yp0 = 0 for welfare sweeps",
            detail=f"Y0={base.Y0:g} and Yp0={base.Yp0:g}",
        )
    values = SWEEP_PANELS[axis] if values is None else tuple(values)
    if not values or not a_values:
        msg = "expected at least one axis value and one risk aversion"
        raise ValueError(msg)

    cells = [(base, axis, value, float(a), tol) for a in a_values for value in values]
    if n_jobs == 1:
        rows = [_sweep_cell(*cell) for cell in cells]
    else:
        import joblib  # multiprocessing

        with joblib.parallel_backend(backend="loky", n_jobs=n_jobs):
            rows = joblib.Parallel()(joblib.delayed(_sweep_cell)(*cell) for cell in cells)

    for row in rows:
        if row["error"]:
            logger.warning(f"sweep cell {axis}={row['axis_value']}, a={row['a']:g}: {row['error']}")
    logger.info(f"swept {len(rows)} cells over {axis}")
    return pd.DataFrame(rows, columns=[*SWEEP_COLUMNS, "error"])


def write_sweep_csv(table: pd.DataFrame, path: Path, *, comment: str | None = None) -> Path:
    """
    Write a sweep table with the columns of ``SWEEP_COLUMNS``.

    Failed cells keep their row with empty values, and their errors follow the
    table as ``# `` comment lines.
    """
    trailer = [
        f"error: {row.axis}={row.axis_value:g}, a={row.a:g}: {row.error}"
        for row in table.itertuples()
        if getattr(row, "error", "")
    ]
    return write_csv(table.loc[:, list(SWEEP_COLUMNS)], path, comment=comment, trailer=trailer)


def read_sweep_csv(path: Path) -> pd.DataFrame:
    """Read a table written by ``write_sweep_csv()``, ignoring comment lines."""
    return pd.read_csv(path, comment="#")


def plot_sweep(table: pd.DataFrame, path: Path, *, comment: str | None = None) -> Path:
    """
    Chart a sweep table as SVG, one line per risk aversion.

    Only ``axis``, ``axis_value``, ``a`` and ``diff_direct`` are read, so a table read
    back from CSV gives the same chart. The output contains no timestamps.

    Raises:
        ImportError: if the ``plot`` extra is missing
    """
    import matplotlib as mpl  # optional

    mpl.use("Agg")
    import matplotlib.pyplot as plt

    axes_names = sorted(set(table["axis"]))
    with mpl.rc_context({"svg.hashsalt": "radner-tracker", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        try:
            for a, group in table.groupby("a", sort=True):
                group = group.sort_values("axis_value")  # noqa: PLW2901
                ax.plot(group["axis_value"], group["diff_direct"], marker="o", label=f"a = {a:g}")
            ax.axhline(0.0, color="0.6", linewidth=0.8)
            ax.set_xlabel(", ".join(axes_names))
            ax.set_ylabel("welfare difference")
            ax.legend()
            buf = io.StringIO()
            fig.savefig(buf, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)

    svg = buf.getvalue()
    if svg.startswith("<?xml"):
        svg = svg.split("\n", 1)[1]
    if comment is not None:
        svg = f"<!-- {comment.replace('--', '- -')} -->\n{svg}"
    return write_text(path, svg)


def _first_term(params: ModelParams) -> float:
    a, I, Sigma, sd2 = params.a, params.I, params.Sigma, params.sigma_D**2  # noqa: N806
    return a**3 * Sigma**2 * sd2**3 / (2 * I * params.endogenous_scale**2)


def _threshold(params: ModelParams, gap: float) -> float:
    a, I, sd2 = params.a, params.I, params.sigma_D**2  # noqa: N806
    rhs = -2 * I**2 * params.sigma_Yp**2 * params.endogenous_scale**2 * gap / (a**3 * sd2**3)
    return math.sqrt(max(0.0, rhs))


def _sweep_cell(
    base: ModelParams, axis: str, value: float, a: float, tol: float
) -> dict[str, Any]:
    if axis == "I" and float(value).is_integer():
        value = int(value)
    row: dict[str, Any] = {"axis": axis, "axis_value": value, "a": a}
    try:
        report = welfare_difference(base.replace(a=a, **{axis: value}), tol)
    except EquilibriumError as err:
        nan = np.nan
        row.update(
            diff_direct=nan,
            diff_formula=nan,
            g33_gap_integral=nan,
            sigma_threshold=nan,
            error=str(err).replace("\n", " "),
        )
        return row
    row.update(
        diff_direct=report.difference_direct,
        diff_formula=(
            math.nan if report.difference_formula is None else report.difference_formula
        ),
        g33_gap_integral=report.g33_integral_gap,
        sigma_threshold=report.sigma_threshold,
        error="",
    )
    return row
