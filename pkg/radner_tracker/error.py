"""
Error types.

```
                                (EquilibriumError)
                                        ╷
      ┌───────────────────┬─────────────┼───────────────┬──────────────────┐
      ╵                   ╵             ╵               ╵                  ╵
(IntegrationError)    OutOfDomain  (ParameterError)  (CheckFailure)   InvalidMeasure
      ╷                                 ╷               ╷
      ├── StepSizeUnderflow             ├── ConfigInvalid         ├── ResidualExceedsTolerance
      └── NonFiniteRhs                  └── HypothesisViolation   ├── IdentityViolation
                                                                  ├── ClearingViolation
                                                                  └── BoundViolation
```
"""

from dataclasses import dataclass
from typing import TypeGuard


__docformat__ = "google"
__all__ = (
    "EquilibriumError",
    "IntegrationError",
    "StepSizeUnderflow",
    "NonFiniteRhs",
    "OutOfDomain",
    "ParameterError",
    "ConfigInvalid",
    "HypothesisViolation",
    "CheckFailure",
    "ResidualExceedsTolerance",
    "IdentityViolation",
    "ClearingViolation",
    "BoundViolation",
    "InvalidMeasure",
    "ExponentSaturationWarning",
    "is_check_failure",
    "is_integration_err",
    "is_parameter_err",
)


EXIT_VALIDATION = 1
"""Exit code for invalid configurations and violated hypotheses."""

EXIT_CHECK = 2
"""Exit code for failed tolerance checks and numerical failures."""


class EquilibriumError(Exception):
    """Base exception for failures while solving, verifying or comparing equilibria."""

    @property
    def exit_code(self) -> int:
        """The process exit code the command line uses for this error."""
        return EXIT_CHECK


@dataclass(kw_only=True)
class IntegrationError(EquilibriumError):
    """
    The integrator could not produce a solution.

    Attributes:
        t: the time at which integration failed
    """

    t: float

    def __str__(self) -> str:
        return f"integration failed at t={self.t:.17g}"


@dataclass(kw_only=True)
class StepSizeUnderflow(IntegrationError):
    """
    The adaptive step size collapsed, which signals a singularity of the vector field.

    Attributes:
        t: the time at which the step size collapsed
        step: the smallest step taken, or ``0`` if the integrator gave up
        min_step: the smallest admissible step
    """

    step: float
    min_step: float

    def __str__(self) -> str:
        return (
            f"step size {self.step:.3g} fell below {self.min_step:.3g} at t={self.t:.17g}"
        )


@dataclass(kw_only=True)
class NonFiniteRhs(IntegrationError):
    """
    The right-hand side returned NaN or infinity.

    Attributes:
        t: the time of the offending evaluation
        state: the state that was passed to the right-hand side
    """

    state: tuple[float, ...]

    def __str__(self) -> str:
        return f"right-hand side is not finite at t={self.t:.17g}, y={list(self.state)!r}"


@dataclass(kw_only=True)
class OutOfDomain(EquilibriumError):
    """
    A dense function was evaluated outside of its domain.

    Attributes:
        t: the requested time
        domain: the closed interval the function is defined on
    """

    t: float
    domain: tuple[float, float]

    @property
    def exit_code(self) -> int:
        """The process exit code the command line uses for this error."""
        return EXIT_VALIDATION

    def __str__(self) -> str:
        lo, hi = self.domain
        return f"t={self.t:.17g} is outside of [{lo:.17g}, {hi:.17g}]"


class ParameterError(EquilibriumError):
    """Base exception for parameters that cannot be used for a computation."""

    @property
    def exit_code(self) -> int:
        """The process exit code the command line uses for this error."""
        return EXIT_VALIDATION


@dataclass(kw_only=True)
class ConfigInvalid(ParameterError):
    """
    One or more invariants of the model parameters or the run configuration are violated.

    Attributes:
        violations: every violated invariant, in the order they were checked
    """

    violations: list[str]

    def __str__(self) -> str:
        listing = "; ".join(self.violations)
        return f"invalid configuration ({len(self.violations)} violations): {listing}"


@dataclass(kw_only=True)
class HypothesisViolation(ParameterError):
    """
    A result was requested whose hypotheses do not hold for the given parameters.

    Attributes:
        hypothesis: the hypothesis that is required
        detail: what about the parameters violates it
    """

    hypothesis: str
    detail: str

    def __str__(self) -> str:
        return f"requires {self.hypothesis}, but {self.detail}"


@dataclass(kw_only=True)
class CheckFailure(EquilibriumError):
    """
    Base exception for a numerical check that exceeded its tolerance.

    Attributes:
        check: the name of the failing check
    """

    check: str

    def __str__(self) -> str:
        return f"check '{self.check}' failed"


@dataclass(kw_only=True)
class ResidualExceedsTolerance(CheckFailure):
    """
    An ODE is not satisfied by the constructed coefficients.

    Attributes:
        equation: the worst equation
        t: where its residual is largest
        residual: the sup-norm residual
        tolerance: the admissible residual
    """

    equation: str
    t: float
    residual: float
    tolerance: float

    def __str__(self) -> str:
        return (
            f"check '{self.check}': residual of {self.equation} is {self.residual:.3e}"
            f" at t={self.t:.6f} (tolerance {self.tolerance:.1e})"
        )


@dataclass(kw_only=True)
class IdentityViolation(CheckFailure):
    """
    Two computations of the same quantity disagree.

    Attributes:
        identity: the identity that does not hold
        deviation: the largest observed deviation
        tolerance: the admissible deviation
    """

    identity: str
    deviation: float
    tolerance: float

    def __str__(self) -> str:
        return (
            f"check '{self.check}': {self.identity} deviates by {self.deviation:.3e}"
            f" (tolerance {self.tolerance:.1e})"
        )


@dataclass(kw_only=True)
class ClearingViolation(CheckFailure):
    """
    Equilibrium holdings do not add up to the stock supply.

    Attributes:
        deviation: the largest observed ``|I·θ_j + θ_N − Σ|``
        tolerance: the admissible deviation
    """

    deviation: float
    tolerance: float

    def __str__(self) -> str:
        return (
            f"check '{self.check}': market does not clear, deviation {self.deviation:.3e}"
            f" (tolerance {self.tolerance:.1e})"
        )


@dataclass(kw_only=True)
class BoundViolation(CheckFailure):
    """
    A core solution leaves its a priori bounds.

    Attributes:
        bound: a description of the violated bound
        s: the forward time where it is violated
        value: the offending value
        limit: the bound at ``s``
    """

    bound: str
    s: float
    value: float
    limit: float

    def __str__(self) -> str:
        return (
            f"check '{self.check}': {self.bound} violated at s={self.s:.6f}"
            f" (value {self.value:.17g}, bound {self.limit:.17g})"
        )


@dataclass(kw_only=True)
class InvalidMeasure(EquilibriumError):
    """
    Paths were requested under a measure the given coefficients do not define.

    Attributes:
        measure: the requested measure
        model: the model the coefficients belong to
    """

    measure: str
    model: str

    @property
    def exit_code(self) -> int:
        """The process exit code the command line uses for this error."""
        return EXIT_VALIDATION

    def __str__(self) -> str:
        return f"measure {self.measure} is not available for the {self.model} model"


class ExponentSaturationWarning(RuntimeWarning):
    """An exponential value function was saturated to avoid overflow."""


def is_integration_err(err: EquilibriumError | None) -> TypeGuard[IntegrationError]:
    """``True`` if this is an ``IntegrationError``."""
    return isinstance(err, IntegrationError)


def is_parameter_err(err: EquilibriumError | None) -> TypeGuard[ParameterError]:
    """``True`` if this is a ``ParameterError``."""
    return isinstance(err, ParameterError)


def is_check_failure(err: EquilibriumError | None) -> TypeGuard[CheckFailure]:
    """``True`` if this is a ``CheckFailure``."""
    return isinstance(err, CheckFailure)
