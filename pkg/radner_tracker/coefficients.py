"""
Coefficient functions shared by both equilibria.

Every coefficient function ``f`` of either model has the form

    f(t) = p(s) + Σₖ wₖ · yₖ(s),    s = 1 − t,

with a polynomial ``p`` and a weighted sum of core IVP components ``yₖ``
(``z₁``, ``z₂`` or one of the quadrature states). Its derivative is taken
analytically for ``p`` and from the interpolant derivative for the ``yₖ``.
"""

from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import overload

from radner_tracker.error import OutOfDomain
from radner_tracker.ode import DOMAIN_SLACK, DenseSolution
from radner_tracker.params import ModelParams

import numpy as np
from numpy.polynomial import polynomial as npp
from numpy.typing import ArrayLike, NDArray


__docformat__ = "google"
__all__ = (
    "Model",
    "CoreSolution",
    "Coefficients",
    "Term",
)


class Model(Enum):
    """The two equilibria."""

    ENDOGENOUS = "endogenous"
    """Investors trade with an endogenous noise tracker."""

    EXOGENOUS = "exogenous"
    """Investors trade with an exogenous noise trader who holds ``Y``."""

    def __str__(self) -> str:
        return self.value


@dataclass(kw_only=True, frozen=True, slots=True, eq=False)
class CoreSolution:
    """
    Dense solution of a core IVP in forward time ``s = 1 − t``.

    Components ``z1`` and ``z2`` come first; any further components are
    quadrature states integrated alongside them.

    Attributes:
        model: The model whose core IVP was solved.
        params: The parameters it was solved for.
        solution: The dense solution over ``s ∈ [0, 1]``.
        tol: The relative and absolute tolerance it was solved with.
    """

    model: Model
    params: ModelParams
    solution: DenseSolution
    tol: float

    def z1(self, s: ArrayLike) -> NDArray[np.float64]:
        """``z₁(s)``."""
        return self.component("z1", s)

    def z2(self, s: ArrayLike) -> NDArray[np.float64]:
        """``z₂(s)``."""
        return self.component("z2", s)

    def component(self, name: str, s: ArrayLike) -> NDArray[np.float64]:
        """Value of the named component at ``s``."""
        return self.solution.eval(s)[self.solution.index(name)]

    def component_derivative(self, name: str, s: ArrayLike) -> NDArray[np.float64]:
        """Interpolant derivative of the named component at ``s``."""
        return self.solution.derivative(s)[self.solution.index(name)]

    def g33_integral(self) -> float:
        """``∫₀¹ g₃₃(u) du``, read off the quadrature state at ``s = 1``."""
        return float(self.component("q33", 1.0))


@dataclass(kw_only=True, frozen=True, slots=True)
class Term:
    """
    The representation ``p(s) + Σₖ wₖ yₖ(s)`` of one coefficient function.

    Attributes:
        poly: Coefficients of ``p`` in increasing powers of ``s``.
        weights: Weight per core component name.
    """

    poly: tuple[float, ...] = ()
    weights: Mapping[str, float] = field(default_factory=dict)


@dataclass(kw_only=True, frozen=True, slots=True, eq=False)
class Coefficients:
    """
    The coefficient functions of one equilibrium, evaluable on ``t ∈ [0, 1]``.

    Every function accepts a time or an array of times and returns a float or
    an array respectively.

    Attributes:
        core: The core solution the functions are built from.
        terms: The representation of each function, in report order.
    """

    core: CoreSolution
    terms: Mapping[str, Term]

    @property
    def model(self) -> Model:
        """The model these coefficients belong to."""
        return self.core.model

    @property
    def params(self) -> ModelParams:
        """The parameters these coefficients were built for."""
        return self.core.params

    @property
    def names(self) -> tuple[str, ...]:
        """Names of all coefficient functions."""
        return tuple(self.terms)

    @overload
    def value(self, name: str, t: float) -> float: ...

    @overload
    def value(self, name: str, t: NDArray[np.float64]) -> NDArray[np.float64]: ...

    def value(self, name: str, t: ArrayLike) -> float | NDArray[np.float64]:
        """
        Evaluate a coefficient function.

        Raises:
            OutOfDomain: if ``t`` is outside of ``[0, 1]``
        """
        ts, scalar = _times(t)
        s = 1.0 - ts
        term = self.terms[name]
        out = npp.polyval(s, term.poly) if term.poly else np.zeros_like(s)
        if term.weights:
            states = self.core.solution.eval(s)
            for component, weight in term.weights.items():
                out = out + weight * states[self.core.solution.index(component)]
        return float(out[0]) if scalar else out

    @overload
    def derivative(self, name: str, t: float) -> float: ...

    @overload
    def derivative(self, name: str, t: NDArray[np.float64]) -> NDArray[np.float64]: ...

    def derivative(self, name: str, t: ArrayLike) -> float | NDArray[np.float64]:
        """
        Evaluate the time derivative of a coefficient function.

        Polynomial parts are differentiated analytically, core components through
        their interpolant.

        Raises:
            OutOfDomain: if ``t`` is outside of ``[0, 1]``
        """
        ts, scalar = _times(t)
        s = 1.0 - ts
        term = self.terms[name]
        ds = npp.polyval(s, npp.polyder(term.poly)) if len(term.poly) > 1 else np.zeros_like(s)
        if term.weights:
            rates = self.core.solution.derivative(s)
            for component, weight in term.weights.items():
                ds = ds + weight * rates[self.core.solution.index(component)]
        out = -ds  # d/dt = -d/ds
        return float(out[0]) if scalar else out

    def table(self, ts: NDArray[np.float64]) -> dict[str, NDArray[np.float64]]:
        """All coefficient functions evaluated on the given times."""
        return {name: np.asarray(self.value(name, ts)) for name in self.names}

    def alpha(self, t: ArrayLike) -> float | NDArray[np.float64]:
        """``α(t)``, the price loading on ``Y``."""
        return self.value("alpha", t)

    def beta(self, t: ArrayLike) -> float | NDArray[np.float64]:
        """``β(t)``, the price loading on ``Y′``."""
        return self.value("beta", t)

    def mu(self, t: ArrayLike) -> float | NDArray[np.float64]:
        """``μ(t)``, the deterministic price component."""
        return self.value("mu", t)

    def g1(self, t: ArrayLike) -> float | NDArray[np.float64]:
        """``g₁(t)``."""
        return self.value("g1", t)

    def g2(self, t: ArrayLike) -> float | NDArray[np.float64]:
        """``g₂(t)``."""
        return self.value("g2", t)

    def g3(self, t: ArrayLike) -> float | NDArray[np.float64]:
        """``g₃(t)``."""
        return self.value("g3", t)

    def g22(self, t: ArrayLike) -> float | NDArray[np.float64]:
        """``g₂₂(t)``."""
        return self.value("g22", t)

    def g23(self, t: ArrayLike) -> float | NDArray[np.float64]:
        """``g₂₃(t)``."""
        return self.value("g23", t)

    def g33(self, t: ArrayLike) -> float | NDArray[np.float64]:
        """``g₃₃(t)``."""
        return self.value("g33", t)


def _times(t: ArrayLike) -> tuple[NDArray[np.float64], bool]:
    ts = np.asarray(t, dtype=np.float64)
    scalar = ts.ndim == 0
    ts = np.atleast_1d(ts).ravel()
    outside = (ts < -DOMAIN_SLACK) | (ts > 1.0 + DOMAIN_SLACK) | ~np.isfinite(ts)
    if outside.any():
        raise OutOfDomain(t=float(ts[outside][0]), domain=(0.0, 1.0))
    return np.clip(ts, 0.0, 1.0), scalar
