"""
The baseline equilibrium with an exogenous noise trader.

The noise trader holds ``Y`` by fiat, so there is no tracking penalty and no
tracker value function. Prices keep the affine form ``S = D + μ + αY + βY′``;
use ``radner_tracker.endogenous.stock_price`` and
``radner_tracker.endogenous.investor_value`` with ``ExogenousCoefficients``.
"""

import logging
from dataclasses import dataclass
from typing import Final

from radner_tracker.coefficients import Coefficients, CoreSolution, Model, Term
from radner_tracker.endogenous import core_max_step
from radner_tracker.ode import DEFAULT_TOL, IvpSpec, integrate
from radner_tracker.params import ModelParams

import numpy as np
from numpy.typing import ArrayLike, NDArray


__docformat__ = "google"
__all__ = (
    "EXOGENOUS_FUNCTIONS",
    "ExogenousCoefficients",
    "ExogenousEquilibrium",
    "build_coefficients_exogenous",
    "investor_strategy_exogenous",
    "noise_trader_holdings",
    "solve_core_exogenous",
    "solve_exogenous",
)


EXOGENOUS_FUNCTIONS: Final = ("alpha", "beta", "mu", "g1", "g2", "g3", "g22", "g23", "g33")
"""Coefficient functions of the exogenous model, in report order."""

_COMPONENTS = ("z1", "z2", "q33")

_LOGGER = logging.getLogger(__name__)


def solve_core_exogenous(
    params: ModelParams,
    tol: float = DEFAULT_TOL,
    *,
    logger: logging.Logger = _LOGGER,
) -> CoreSolution:
    """
    Solve the exogenous core IVP, carrying ``∫z₂`` as a quadrature state.

    ``kappa`` is ignored.

    Raises:
        IntegrationError: if the integrator fails, which valid parameters rule out
    """
    a, I = params.a, params.I  # noqa: N806
    sd2 = params.sigma_D**2
    sy2 = params.sigma_Yp**2

    def rhs(s: float, y: NDArray[np.float64]) -> NDArray[np.float64]:
        z1, z2, _ = y
        return np.array(
            (
                a * sd2 / I * s - 2 * a * sy2 * z1 * z2,
                z1 / I - 2 * a * sy2 * z2**2,
                z2,
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
        f"solved exogenous core in {len(solution.knots) - 1} steps:"
        f" z1(1)={solution.states[0, -1]:.12g}, z2(1)={solution.states[1, -1]:.12g}"
    )
    return CoreSolution(model=Model.EXOGENOUS, params=params, solution=solution, tol=tol)


@dataclass(kw_only=True, frozen=True, slots=True, eq=False)
class ExogenousCoefficients(Coefficients):
    """The nine coefficient functions of the exogenous equilibrium."""


def build_coefficients_exogenous(
    params: ModelParams, core: CoreSolution
) -> ExogenousCoefficients:
    """
    Build the exogenous coefficient functions from a solved core.

    Raises:
        ValueError: if ``core`` was not solved for the exogenous model with ``params``
    """
    if core.model is not Model.EXOGENOUS or core.params != params:
        msg = "core was not solved for these parameters of the exogenous model"
        raise ValueError(msg)

    a, I, Sigma = params.a, params.I, params.Sigma  # noqa: N806
    sd2 = params.sigma_D**2
    alpha0 = a * sd2 / I
    g22 = a * sd2 / (2 * I**2)

    terms = {
        "alpha": Term(poly=(0.0, alpha0)),
        "beta": Term(weights={"z1": 1.0}),
        "mu": Term(poly=(0.0, -Sigma * alpha0)),
        "g1": Term(poly=(0.0, Sigma**2 * g22), weights={"q33": params.sigma_Yp**2}),
        "g2": Term(poly=(0.0, -2 * Sigma * g22)),
        "g3": Term(weights={"z1": -Sigma / I}),
        "g22": Term(poly=(0.0, g22)),
        "g23": Term(weights={"z1": 1 / I}),
        "g33": Term(weights={"z2": 1.0}),
    }
    return ExogenousCoefficients(core=core, terms=terms)


@dataclass(kw_only=True, frozen=True, slots=True, eq=False)
class ExogenousEquilibrium:
    """
    A solved exogenous equilibrium.

    Attributes:
        params: Model parameters.
        core: The solved core IVP.
        coeffs: The coefficient functions.
    """

    params: ModelParams
    core: CoreSolution
    coeffs: ExogenousCoefficients


def solve_exogenous(
    params: ModelParams,
    tol: float = DEFAULT_TOL,
    *,
    logger: logging.Logger = _LOGGER,
) -> ExogenousEquilibrium:
    """Solve the core IVP and build all coefficient functions."""
    core = solve_core_exogenous(params, tol, logger=logger)
    coeffs = build_coefficients_exogenous(params, core)
    return ExogenousEquilibrium(params=params, core=core, coeffs=coeffs)


def investor_strategy_exogenous(
    params: ModelParams,
    t: ArrayLike,  # noqa: ARG001
    Y: ArrayLike,  # noqa: N803
) -> float | NDArray[np.float64]:
    """Optimal holdings ``(Σ − Y)/I`` of each investor, independent of ``t`` and ``Y′``."""
    holdings = (params.Sigma - np.asarray(Y, dtype=np.float64)) / params.I
    return float(holdings) if holdings.ndim == 0 else holdings


def noise_trader_holdings(Y: ArrayLike) -> float | NDArray[np.float64]:  # noqa: N803
    """The exogenous noise trader holds ``Y``."""
    holdings = np.asarray(Y, dtype=np.float64)
    return float(holdings) if holdings.ndim == 0 else holdings

