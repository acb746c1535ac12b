"""
Initial value problems with dense output.

The integrator is the Dormand–Prince 5(4) pair of ``scipy.integrate.solve_ivp``.
Its quartic continuous extension is captured per step, so that solutions can be
evaluated *and differentiated* anywhere in their time span. Integrals of the
solution are obtained by appending quadrature states to the system, whose
derivative is the integrand.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import TypeAlias

from radner_tracker.error import NonFiniteRhs, OutOfDomain, StepSizeUnderflow

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import solve_ivp


__docformat__ = "google"
__all__ = (
    "DEFAULT_TOL",
    "DOMAIN_SLACK",
    "MIN_STEP_FRACTION",
    "DenseSolution",
    "IvpSpec",
    "Rhs",
    "integrate",
)


DEFAULT_TOL = 1e-10
"""Default relative and absolute tolerance."""

DOMAIN_SLACK = 1e-12
"""Times at most this far outside of a solution's span are clamped to its endpoints."""

MIN_STEP_FRACTION = 1e-12
"""Steps shorter than this fraction of the span are treated as a singularity."""

_LOGGER = logging.getLogger(__name__)

Rhs: TypeAlias = Callable[[float, NDArray[np.float64]], ArrayLike]
"""A right-hand side ``(t, y) -> y'``."""


@dataclass(kw_only=True, frozen=True, slots=True)
class IvpSpec:
    """
    An initial value problem ``y' = rhs(t, y)``, ``y(t0) = y0``.

    Attributes:
        rhs: A deterministic right-hand side.
        y0: The initial state.
        t_span: The integration interval ``(t0, t1)`` with ``t0 < t1``.
        rel_tol: Relative tolerance of the local error.
        abs_tol: Absolute tolerance of the local error.
        max_step: The largest step the integrator may take.
        component_names: Optional labels of the state components.
    """

    rhs: Rhs
    y0: tuple[float, ...]
    t_span: tuple[float, float]
    rel_tol: float = DEFAULT_TOL
    abs_tol: float = DEFAULT_TOL
    max_step: float = math.inf
    component_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.y0:
            msg = "initial state must have at least one component"
            raise ValueError(msg)
        t0, t1 = self.t_span
        if not t0 < t1:
            msg = f"expected t_span start < end, got {self.t_span!r}"
            raise ValueError(msg)
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            msg = "tolerances must be positive"
            raise ValueError(msg)
        if not self.max_step > 0:
            msg = "max_step must be positive"
            raise ValueError(msg)
        if self.component_names and len(self.component_names) != len(self.y0):
            msg = f"expected {len(self.y0)} component names, got {len(self.component_names)}"
            raise ValueError(msg)

    @property
    def dimension(self) -> int:
        """Number of state components."""
        return len(self.y0)


@dataclass(kw_only=True, frozen=True, slots=True, eq=False)
class DenseSolution:
    """
    A piecewise polynomial solution of an initial value problem.

    On ``[knots[i], knots[i+1]]`` with ``h = knots[i+1] - knots[i]`` and
    ``x = (t - knots[i]) / h``, the state is
    ``states[:, i] + h * coefficients[i] @ [x, x², …, xᵏ]``.

    Attributes:
        knots: Strictly increasing step boundaries, covering the span.
        states: The accepted states, one column per knot.
        coefficients: Per-interval polynomial coefficients of shape
                      ``(len(knots) - 1, dimension, order)``.
        component_names: Labels of the state components, possibly empty.
    """

    knots: NDArray[np.float64]
    states: NDArray[np.float64]
    coefficients: NDArray[np.float64]
    component_names: tuple[str, ...] = field(default=())

    @property
    def dimension(self) -> int:
        """Number of state components."""
        return int(self.states.shape[0])

    @property
    def t_span(self) -> tuple[float, float]:
        """The time interval this solution covers."""
        return float(self.knots[0]), float(self.knots[-1])

    def index(self, name: str) -> int:
        """Index of the component with the given label."""
        try:
            return self.component_names.index(name)
        except ValueError:
            msg = f"no component named {name!r}"
            raise KeyError(msg) from None

    def eval(self, t: ArrayLike) -> NDArray[np.float64]:
        """
        Evaluate the solution.

        Args:
            t: A time or an array of times.

        Returns:
            The state, of shape ``(dimension,)`` for a scalar time and
            ``(dimension, len(t))`` otherwise. At knots, the stored state is
            returned exactly.

        Raises:
            OutOfDomain: if a time is outside of the span by more than ``DOMAIN_SLACK``.
        """
        ts, scalar = self._times(t)
        idx, x, h = self._locate(ts)

        powers = x[np.newaxis, :] ** np.arange(1, self.order + 1)[:, np.newaxis]
        y = self.states[:, idx] + h * np.einsum("mdk,km->dm", self.coefficients[idx], powers)

        hit = np.searchsorted(self.knots, ts)
        on_knot = self.knots[np.minimum(hit, len(self.knots) - 1)] == ts
        y[:, on_knot] = self.states[:, hit[on_knot]]

        return y[:, 0] if scalar else y

    def derivative(self, t: ArrayLike) -> NDArray[np.float64]:
        """
        Evaluate the time derivative of the interpolant.

        At a knot, the interval to its right is used, except at the final knot.

        Args:
            t: A time or an array of times.

        Returns:
            The derivative, shaped like the result of ``eval``.

        Raises:
            OutOfDomain: if a time is outside of the span by more than ``DOMAIN_SLACK``.
        """
        ts, scalar = self._times(t)
        idx, x, _ = self._locate(ts)

        k = np.arange(1, self.order + 1)[:, np.newaxis]
        powers = k * x[np.newaxis, :] ** (k - 1)
        dy = np.einsum("mdk,km->dm", self.coefficients[idx], powers)

        return dy[:, 0] if scalar else dy

    @property
    def order(self) -> int:
        """Degree of the interpolating polynomials."""
        return int(self.coefficients.shape[2])

    def _times(self, t: ArrayLike) -> tuple[NDArray[np.float64], bool]:
        ts = np.asarray(t, dtype=np.float64)
        scalar = ts.ndim == 0
        ts = np.atleast_1d(ts).ravel()

        lo, hi = self.t_span
        outside = (ts < lo - DOMAIN_SLACK) | (ts > hi + DOMAIN_SLACK) | ~np.isfinite(ts)
        if outside.any():
            raise OutOfDomain(t=float(ts[outside][0]), domain=(lo, hi))

        return np.clip(ts, lo, hi), scalar

    def _locate(
        self, ts: NDArray[np.float64]
    ) -> tuple[NDArray[np.intp], NDArray[np.float64], NDArray[np.float64]]:
        n_intervals = len(self.knots) - 1
        idx = np.clip(np.searchsorted(self.knots, ts, side="right") - 1, 0, n_intervals - 1)
        h = self.knots[idx + 1] - self.knots[idx]
        x = (ts - self.knots[idx]) / h
        return idx, x, h


def integrate(spec: IvpSpec, *, logger: logging.Logger = _LOGGER) -> DenseSolution:
    """
    Integrate an initial value problem over its whole span.

    Args:
        spec: The problem to solve.
        logger: Logger for integration statistics.

    Returns:
        A dense solution whose every step satisfies the local error tolerance.

    Raises:
        NonFiniteRhs: if the right-hand side returns NaN or infinity.
        StepSizeUnderflow: if a step falls below ``MIN_STEP_FRACTION`` of the span,
                           or the integrator gives up on its step size.
    """
    t0, t1 = spec.t_span
    min_step = MIN_STEP_FRACTION * (t1 - t0)

    def rhs(t: float, y: NDArray[np.float64]) -> NDArray[np.float64]:
        dy = np.asarray(spec.rhs(t, y), dtype=np.float64)
        if not np.isfinite(dy).all():
            raise NonFiniteRhs(t=float(t), state=tuple(float(v) for v in y))
        return dy

    result = solve_ivp(
        rhs,
        t_span=(t0, t1),
        y0=np.asarray(spec.y0, dtype=np.float64),
        method="RK45",
        dense_output=True,
        rtol=spec.rel_tol,
        atol=spec.abs_tol,
        max_step=spec.max_step,
    )

    if result.status == -1:
        t_fail = float(result.t[-1])
        logger.debug(f"integrator gave up at t={t_fail}: {result.message}")
        raise StepSizeUnderflow(t=t_fail, step=0.0, min_step=min_step)

    knots = np.asarray(result.t, dtype=np.float64)
    steps = np.diff(knots)
    # the final step is clipped to hit t1 and may be arbitrarily short
    if len(steps) > 1 and steps[:-1].min() < min_step:
        i = int(np.argmin(steps[:-1]))
        raise StepSizeUnderflow(t=float(knots[i]), step=float(steps[i]), min_step=min_step)

    coefficients = np.stack([interp.Q for interp in result.sol.interpolants])

    logger.debug(
        f"integrated {spec.dimension} components over [{t0}, {t1}]"
        f" in {len(steps)} steps ({result.nfev} evaluations)"
    )

    return DenseSolution(
        knots=knots,
        states=np.asarray(result.y, dtype=np.float64),
        coefficients=coefficients,
        component_names=spec.component_names,
    )
