"""
The equilibrium with an endogenous noise tracker.

The core IVP in ``s = 1 − t`` is solved together with six quadrature states,
from which all fifteen coefficient functions follow in closed form:

| state    | role                                               |
|----------|----------------------------------------------------|
| ``z1``   | ``β`` after time reversal                          |
| ``z2``   | ``g₃₃`` after time reversal                        |
| ``q33``  | integral of ``z₂``                                 |
| ``q3``   | integral of the ``f₃`` integrand                   |
| ``q23``  | integral of the ``f₂₃`` integrand                  |
| ``r23``  | integral of ``q23``                                |
| ``q33b`` | integral of the second ``f₃₃`` integrand           |
| ``f33i`` | integral of ``f₃₃``, so that ``f₁`` is a lookup    |
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Final

from radner_tracker.coefficients import Coefficients, CoreSolution, Model, Term
from radner_tracker.error import ExponentSaturationWarning
from radner_tracker.ode import DEFAULT_TOL, IvpSpec, integrate
from radner_tracker.params import ModelParams

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray


__docformat__ = "google"
__all__ = (
    "ENDOGENOUS_FUNCTIONS",
    "EXPONENT_LIMIT",
    "F22_M_READING",
    "EndogenousCoefficients",
    "EndogenousEquilibrium",
    "build_coefficients",
    "coefficient_table",
    "core_max_step",
    "investor_strategy",
    "investor_value",
    "solve",
    "solve_core",
    "stock_drift",
    "stock_price",
    "tracker_strategy",
    "tracker_value",
)


ENDOGENOUS_FUNCTIONS: Final = (
    "alpha", "beta", "mu",
    "g1", "g2", "g3", "g22", "g23", "g33",
    "f1", "f2", "f3", "f22", "f23", "f33",
)  # fmt: skip
"""Coefficient functions of the endogenous model, in report order."""

EXPONENT_LIMIT: Final = 700.0
"""Exponents of the investor value function are saturated at this magnitude."""

F22_M_READING: Final = "I"
"""The symbol ``M`` in the printed ``f₂₂′`` equation is read as the investor count ``I``."""

_COMPONENTS = ("z1", "z2", "q33", "q3", "q23", "r23", "q33b", "f33i")

_LOGGER = logging.getLogger(__name__)


def core_max_step(tol: float) -> float:
    """
    Largest step for core IVPs solved at the given tolerance.

    The error of the interpolant derivative scales with the fourth power of the
    step, so capping steps at ``tol^¼`` keeps ODE residuals proportional to ``tol``.
    """
    return min(0.125, tol**0.25)


def solve_core(
    params: ModelParams,
    tol: float = DEFAULT_TOL,
    *,
    logger: logging.Logger = _LOGGER,
) -> CoreSolution:
    """
    Solve the endogenous core IVP with its quadrature states.

    Args:
        params: Model parameters.
        tol: Relative and absolute integration tolerance.
        logger: Logger for integration statistics.

    Returns:
        The dense core solution on ``s ∈ [0, 1]``.

    Raises:
        IntegrationError: if the integrator fails, which valid parameters rule out
    """
    a, I, kappa, Sigma = params.a, params.I, params.kappa, params.Sigma  # noqa: N806
    sd2 = params.sigma_D**2
    sy2 = params.sigma_Yp**2
    c = params.endogenous_scale
    alpha0 = 2 * a * kappa * sd2 / c
    gamma = 2 * kappa / c
    c22 = _c22(params)
    k3 = 4 * a**2 * I * kappa * Sigma * sd2 * sy2 / c
    k23 = 8 * a * I**2 * kappa**2 * sy2 / c
    k33 = 4 * a**2 * I**2 * kappa * sy2**2

    def rhs(s: float, y: NDArray[np.float64]) -> NDArray[np.float64]:
        z1, z2, _, _, q23, r23, q33b, _ = y
        den = c + a * sy2 * z1**2
        dz1 = alpha0 * s - 4 * a * kappa * I * sy2 * z1 * z2 / den
        dz2 = gamma * z1 - 2 * a * sy2 * (c**2 + a * sy2 * z1**2 * (a * sd2 + 4 * kappa * I)) * (
            z2**2
        ) / den**2
        f33 = c22 * s**3 / 3 + r23 + q33b
        return np.array(
            (
                dz1,
                dz2,
                z2,
                k3 * z2 * z1 / den,
                k23 * z2 * z1 / den,
                q23,
                k33 * z2**2 * z1**2 / den**2,
                f33,
            )
        )

    spec = IvpSpec(
        rhs=rhs,
        y0=(0.0,) * len(_COMPONENTS),
        t_span=(0.0, 1.0),
        rel_tol=tol,
        abs_tol=tol,
        max_step=core_max_step(tol),
        component_names=_COMPONENTS,
    )
    solution = integrate(spec, logger=logger)
    logger.info(
        f"solved endogenous core in {len(solution.knots) - 1} steps:"
        f" z1(1)={solution.states[0, -1]:.12g}, z2(1)={solution.states[1, -1]:.12g}"
    )
    return CoreSolution(model=Model.ENDOGENOUS, params=params, solution=solution, tol=tol)


@dataclass(kw_only=True, frozen=True, slots=True, eq=False)
class EndogenousCoefficients(Coefficients):
    """
    The fifteen coefficient functions of the endogenous equilibrium.

    Prices are ``S = D + μ + αY + βY′``, investors' value functions are
    ``−exp(−a(x + g₁ + g₂Y + g₃Y′ + g₂₂Y² + g₂₃YY′ + g₃₃Y′²))`` and the
    tracker's value function is ``x + f₁ + f₂Y + f₃Y′ + f₂₂Y² + f₂₃YY′ + f₃₃Y′²``.
    """

    def f1(self, t: ArrayLike) -> float | NDArray[np.float64]:
        """``f₁(t)``."""
        return self.value("f1", t)

    def f2(self, t: ArrayLike) -> float | NDArray[np.float64]:
        """``f₂(t)``."""
        return self.value("f2", t)

    def f3(self, t: ArrayLike) -> float | NDArray[np.float64]:
        """``f₃(t)``."""
        return self.value("f3", t)

    def f22(self, t: ArrayLike) -> float | NDArray[np.float64]:
        """``f₂₂(t)``."""
        return self.value("f22", t)

    def f23(self, t: ArrayLike) -> float | NDArray[np.float64]:
        """``f₂₃(t)``."""
        return self.value("f23", t)

    def f33(self, t: ArrayLike) -> float | NDArray[np.float64]:
        """``f₃₃(t)``."""
        return self.value("f33", t)


def build_coefficients(params: ModelParams, core: CoreSolution) -> EndogenousCoefficients:
    """
    Build all coefficient functions from a solved core.

    Functions with pure closed forms are polynomials in ``s``; the others combine
    ``z₁``, ``z₂`` and the quadrature states.

    Raises:
        ValueError: if ``core`` was not solved for the endogenous model with ``params``
    """
    if core.model is not Model.ENDOGENOUS or core.params != params:
        msg = "core was not solved for these parameters of the endogenous model"
        raise ValueError(msg)

    a, I, kappa, Sigma = params.a, params.I, params.kappa, params.Sigma  # noqa: N806
    sd2 = params.sigma_D**2
    sy2 = params.sigma_Yp**2
    c = params.endogenous_scale
    alpha0 = 2 * a * kappa * sd2 / c
    gamma = 2 * kappa / c
    g22 = 2 * a * kappa**2 * sd2 / c**2
    f2 = 4 * a * I * kappa**2 * sd2 * Sigma / c**2
    f1 = a**2 * kappa * sd2**2 * Sigma**2 / c**2
    c22 = _c22(params)

    terms = {
        "alpha": Term(poly=(0.0, alpha0)),
        "beta": Term(weights={"z1": 1.0}),
        "mu": Term(poly=(0.0, -Sigma * alpha0)),
        "g1": Term(poly=(0.0, Sigma**2 * g22), weights={"q33": sy2}),
        "g2": Term(poly=(0.0, -2 * Sigma * g22)),
        "g3": Term(weights={"z1": -Sigma * gamma}),
        "g22": Term(poly=(0.0, g22)),
        "g23": Term(weights={"z1": gamma}),
        "g33": Term(weights={"z2": 1.0}),
        "f1": Term(poly=(0.0, f1), weights={"f33i": sy2}),
        "f2": Term(poly=(0.0, f2)),
        "f3": Term(poly=(0.0, 0.0, f2 / 2), weights={"q3": 1.0}),
        "f22": Term(poly=(0.0, c22)),
        "f23": Term(poly=(0.0, 0.0, c22), weights={"q23": 1.0}),
        "f33": Term(poly=(0.0, 0.0, 0.0, c22 / 3), weights={"r23": 1.0, "q33b": 1.0}),
    }
    return EndogenousCoefficients(core=core, terms=terms)


@dataclass(kw_only=True, frozen=True, slots=True, eq=False)
class EndogenousEquilibrium:
    """
    A solved endogenous equilibrium.

    Attributes:
        params: Model parameters.
        core: The solved core IVP.
        coeffs: The coefficient functions.
    """

    params: ModelParams
    core: CoreSolution
    coeffs: EndogenousCoefficients


def solve(
    params: ModelParams,
    tol: float = DEFAULT_TOL,
    *,
    logger: logging.Logger = _LOGGER,
) -> EndogenousEquilibrium:
    """Solve the core IVP and build all coefficient functions."""
    core = solve_core(params, tol, logger=logger)
    coeffs = build_coefficients(params, core)
    return EndogenousEquilibrium(params=params, core=core, coeffs=coeffs)


def stock_price(
    coeffs: Coefficients,
    t: ArrayLike,
    D: ArrayLike,  # noqa: N803
    Y: ArrayLike,  # noqa: N803
    Yp: ArrayLike,  # noqa: N803
) -> float | NDArray[np.float64]:
    """
    The equilibrium stock price ``D + μ(t) + α(t)Y + β(t)Y′``.

    The affine form is the same in both models, so this accepts either model's
    coefficients.

    Raises:
        OutOfDomain: if ``t`` is outside of ``[0, 1]``
    """
    price = D + coeffs.mu(t) + coeffs.alpha(t) * Y + coeffs.beta(t) * Yp  # type: ignore[operator]
    return _combine(price)


def stock_drift(
    coeffs: Coefficients,
    t: ArrayLike,
    Y: ArrayLike,  # noqa: N803
    Yp: ArrayLike,  # noqa: N803
) -> float | NDArray[np.float64]:
    """
    The ``dt`` part of ``dS`` under ``P``: ``μ′(t) + α′(t)Y + (α(t) + β′(t))Y′``.

    Raises:
        OutOfDomain: if ``t`` is outside of ``[0, 1]``
    """
    d_mu = coeffs.derivative("mu", t)
    d_alpha = coeffs.derivative("alpha", t)
    d_beta = coeffs.derivative("beta", t)
    return _combine(d_mu + d_alpha * Y + (coeffs.alpha(t) + d_beta) * Yp)  # type: ignore[operator]


def investor_strategy(
    params: ModelParams,
    coeffs: EndogenousCoefficients,
    t: ArrayLike,
    Y: ArrayLike,  # noqa: N803
    Yp: ArrayLike,  # noqa: N803
) -> float | NDArray[np.float64]:
    """
    Optimal holdings of each investor.

    ``2κ(Σ−Y)/(2Iκ+aσ_D²) − 2aσ_{Y′}²β(t)g₃₃(t)Y′ / (aσ_D² + aσ_{Y′}²β(t)² + 2Iκ)``

    Raises:
        OutOfDomain: if ``t`` is outside of ``[0, 1]``
    """
    c = params.endogenous_scale
    level = 2 * params.kappa * (params.Sigma - np.asarray(Y)) / c
    return _combine(level - _noise_loading(params, coeffs, t) * Yp)


def tracker_strategy(
    params: ModelParams,
    coeffs: EndogenousCoefficients,
    t: ArrayLike,
    Y: ArrayLike,  # noqa: N803
    Yp: ArrayLike,  # noqa: N803
) -> float | NDArray[np.float64]:
    """
    Optimal holdings of the noise tracker.

    ``(2IκY + aσ_D²Σ)/(2Iκ+aσ_D²) + 2aIσ_{Y′}²β(t)g₃₃(t)Y′ / (aσ_D² + aσ_{Y′}²β(t)² + 2Iκ)``

    Raises:
        OutOfDomain: if ``t`` is outside of ``[0, 1]``
    """
    c = params.endogenous_scale
    level = (
        2 * params.I * params.kappa * np.asarray(Y) + params.a * params.sigma_D**2 * params.Sigma
    ) / c
    return _combine(level + params.I * _noise_loading(params, coeffs, t) * Yp)


def investor_value(
    params: ModelParams,
    coeffs: Coefficients,
    t: ArrayLike,
    x: ArrayLike,
    Y: ArrayLike,  # noqa: N803
    Yp: ArrayLike,  # noqa: N803
) -> float | NDArray[np.float64]:
    """
    An investor's value function.

    ``−exp(−a(x + g₁ + g₂Y + g₃Y′ + g₂₂Y² + g₂₃YY′ + g₃₃Y′²))``, which is always
    strictly negative. The investor value function has the same form in both
    models, so this accepts either model's coefficients.

    Exponents beyond ``EXPONENT_LIMIT`` in magnitude are saturated with an
    ``ExponentSaturationWarning``; the result is never NaN.

    Raises:
        OutOfDomain: if ``t`` is outside of ``[0, 1]``
    """
    exponent = -params.a * (np.asarray(x) + _quadratic_form(coeffs, "g", t, Y, Yp))
    if (np.abs(exponent) > EXPONENT_LIMIT).any():
        warnings.warn(
            f"investor value exponent saturated at ±{EXPONENT_LIMIT:g}",
            ExponentSaturationWarning,
            stacklevel=2,
        )
        exponent = np.clip(exponent, -EXPONENT_LIMIT, EXPONENT_LIMIT)
    return _combine(-np.exp(exponent))


def tracker_value(
    params: ModelParams,  # noqa: ARG001
    coeffs: EndogenousCoefficients,
    t: ArrayLike,
    x: ArrayLike,
    Y: ArrayLike,  # noqa: N803
    Yp: ArrayLike,  # noqa: N803
) -> float | NDArray[np.float64]:
    """
    The noise tracker's value function ``x + f₁ + f₂Y + f₃Y′ + f₂₂Y² + f₂₃YY′ + f₃₃Y′²``.

    Raises:
        OutOfDomain: if ``t`` is outside of ``[0, 1]``
    """
    return _combine(np.asarray(x) + _quadratic_form(coeffs, "f", t, Y, Yp))


def coefficient_table(coeffs: Coefficients, n_points: int = 1001) -> pd.DataFrame:
    """
    All coefficient functions on a uniform grid of ``[0, 1]``.

    Returns:
        A frame with a ``t`` column followed by one column per function.
    """
    if n_points < 2:  # noqa: PLR2004
        msg = f"expected at least 2 points, got {n_points}"
        raise ValueError(msg)
    ts = np.linspace(0.0, 1.0, n_points)
    return pd.DataFrame({"t": ts, **coeffs.table(ts)})


def _noise_loading(
    params: ModelParams, coeffs: Coefficients, t: ArrayLike
) -> float | NDArray[np.float64]:
    """``2aσ_{Y′}²β(t)g₃₃(t) / (aσ_D² + aσ_{Y′}²β(t)² + 2Iκ)``."""
    a, sy2 = params.a, params.sigma_Yp**2
    beta = coeffs.beta(t)
    return 2 * a * sy2 * beta * coeffs.g33(t) / (params.endogenous_scale + a * sy2 * beta**2)


def _quadratic_form(
    coeffs: Coefficients,
    prefix: str,
    t: ArrayLike,
    Y: ArrayLike,  # noqa: N803
    Yp: ArrayLike,  # noqa: N803
) -> NDArray[np.float64]:
    Y, Yp = np.asarray(Y), np.asarray(Yp)  # noqa: N806
    v = {name: coeffs.value(f"{prefix}{name}", t) for name in ("1", "2", "3", "22", "23", "33")}
    return np.asarray(
        v["1"] + v["2"] * Y + v["3"] * Yp + v["22"] * Y**2 + v["23"] * Y * Yp + v["33"] * Yp**2
    )


def _c22(params: ModelParams) -> float:
    """``4I²κ³/(2Iκ+aσ_D²)² − κ``, the slope of ``f₂₂`` in ``s``."""
    return 4 * params.I**2 * params.kappa**3 / params.endogenous_scale**2 - params.kappa


def _combine(value: ArrayLike) -> float | NDArray[np.float64]:
    arr = np.asarray(value, dtype=np.float64)
    return float(arr) if arr.ndim == 0 else arr

