"""
Oracles shared by the tests.

The core ODE systems are restated here from scratch and integrated with a fixed-step
classical Runge–Kutta scheme in plain floats, so that the adaptive solver is checked
against an independent implementation.
"""

from collections.abc import Callable
from fractions import Fraction

from radner_tracker.params import ModelParams

import numpy as np
from scipy.integrate import cumulative_simpson


RK4_STEPS = 20_000

CoreRhs = Callable[[float, float, float], tuple[float, float]]


def base_params(**changes) -> ModelParams:
    """The common welfare parameters with some fields changed."""
    return ModelParams.sweep_base(**changes)


def degenerate_params(**changes) -> ModelParams:
    """Base parameters without noise velocity, where the cores are polynomials."""
    return ModelParams.sweep_base(sigma_Yp=0.0, **changes)


def endogenous_core_rhs(params: ModelParams) -> CoreRhs:
    a, I, kappa = params.a, params.I, params.kappa
    sd2, sy2 = params.sigma_D**2, params.sigma_Yp**2
    c = 2 * I * kappa + a * sd2

    def rhs(s: float, z1: float, z2: float) -> tuple[float, float]:
        den = a * sd2 + a * sy2 * z1 * z1 + 2 * kappa * I
        dz1 = 2 * a * kappa * sd2 / c * s - 4 * a * kappa * I * sy2 * z1 * z2 / den
        dz2 = 2 * kappa * z1 / c - 2 * a * sy2 * (
            c * c + a * sy2 * z1 * z1 * (a * sd2 + 4 * kappa * I)
        ) * z2 * z2 / (den * den)
        return dz1, dz2

    return rhs


def exogenous_core_rhs(params: ModelParams) -> CoreRhs:
    a, I = params.a, params.I
    sd2, sy2 = params.sigma_D**2, params.sigma_Yp**2

    def rhs(s: float, z1: float, z2: float) -> tuple[float, float]:
        return a * sd2 / I * s - 2 * a * sy2 * z1 * z2, z1 / I - 2 * a * sy2 * z2 * z2

    return rhs


def rk4_core(rhs: CoreRhs, n_steps: int = RK4_STEPS) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(s, z1, z2)`` on ``n_steps + 1`` uniform nodes of ``[0, 1]``, starting at zero."""
    h = 1.0 / n_steps
    z1, z2 = 0.0, 0.0
    out1, out2 = [z1], [z2]
    for i in range(n_steps):
        s = i * h
        k1 = rhs(s, z1, z2)
        k2 = rhs(s + h / 2, z1 + h / 2 * k1[0], z2 + h / 2 * k1[1])
        k3 = rhs(s + h / 2, z1 + h / 2 * k2[0], z2 + h / 2 * k2[1])
        k4 = rhs(s + h, z1 + h * k3[0], z2 + h * k3[1])
        z1 += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        z2 += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        out1.append(z1)
        out2.append(z2)
    return np.linspace(0.0, 1.0, n_steps + 1), np.array(out1), np.array(out2)


def integral_of(s: np.ndarray, values: np.ndarray) -> float:
    """``∫₀¹`` of a function sampled on a uniform grid of ``[0, 1]``."""
    return float(cumulative_simpson(values, x=s, initial=0.0)[-1])


def first_welfare_term(params: ModelParams) -> Fraction:
    """``a³Σ²σ_D⁶ / (2I(aσ_D² + 2κI)²)`` in exact arithmetic."""
    a, sigma, sd = (Fraction(v) for v in (params.a, params.Sigma, params.sigma_D))
    kappa, I = Fraction(params.kappa), Fraction(params.I)
    c = a * sd**2 + 2 * kappa * I
    return a**3 * sigma**2 * sd**6 / (2 * I * c**2)

