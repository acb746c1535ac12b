"""Exogenous parameters of the economy."""

import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Final

from radner_tracker.error import ConfigInvalid


__docformat__ = "google"
__all__ = (
    "CLEARING_SLACK",
    "ModelParams",
)


CLEARING_SLACK: Final[float] = 1e-12
"""Admissible ``|Σθ_{j,0−} + Y₀ − Σ|`` for initial holdings."""

_SCALARS_DETERMINING_THETA0 = frozenset({"I", "Sigma", "Y0"})


@dataclass(kw_only=True, frozen=True, slots=True)
class ModelParams:
    """
    All exogenous scalars of the economy.

    Both models share these parameters; the exogenous model ignores ``kappa``.
    Construction fails with ``ConfigInvalid`` listing *every* violated invariant.

    Attributes:
        I: Number of utility-maximizing investors.
        a: Common absolute risk aversion.
        sigma_D: Dividend volatility ``σ_D``.
        sigma_Yp: Volatility ``σ_{Y′}`` of the noise velocity ``Y′``.
        kappa: Tracking penalty ``κ`` of the noise tracker.
        Sigma: Stock supply ``Σ``.
        Y0: Initial noise level ``Y₀``.
        Yp0: Initial noise velocity ``Y′₀``.
        D0: Initial dividend level ``D₀``; it shifts prices in both models equally.
        theta0: Initial holdings ``θ_{j,0−}`` of the ``I`` investors. Defaults to
                ``(Σ − Y₀)/I`` each, so that the noise tracker starts at ``Y₀``.
    """

    I: int  # noqa: E741
    a: float
    sigma_D: float
    sigma_Yp: float
    kappa: float
    Sigma: float
    Y0: float = 0.0
    Yp0: float = 0.0
    D0: float = 0.0
    theta0: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.theta0 is None and _is_count(self.I) and _is_real(self.Sigma, self.Y0):
            share = (self.Sigma - self.Y0) / self.I
            object.__setattr__(self, "theta0", (share,) * self.I)
        elif self.theta0 is not None:
            object.__setattr__(self, "theta0", tuple(self.theta0))

        self.validate()

    def validate(self) -> None:
        """
        Check every invariant.

        Raises:
            ConfigInvalid: listing every violated invariant
        """
        if violations := self.violations():
            raise ConfigInvalid(violations=violations)

    def violations(self) -> list[str]:
        """Every violated invariant, as human-readable strings."""
        found = []

        if not _is_count(self.I):
            found.append(f"I must be a positive integer, got {self.I!r}")
        for name in ("a", "sigma_D", "kappa"):
            value = getattr(self, name)
            if not (_is_real(value) and value > 0):
                found.append(f"{name} must be positive, got {value!r}")
        for name in ("sigma_Yp", "Sigma"):
            value = getattr(self, name)
            if not (_is_real(value) and value >= 0):
                found.append(f"{name} must be nonnegative, got {value!r}")
        for name in ("Y0", "Yp0", "D0"):
            value = getattr(self, name)
            if not _is_real(value):
                found.append(f"{name} must be a finite real, got {value!r}")

        theta0 = self.theta0 or ()
        if _is_count(self.I) and len(theta0) != self.I:
            found.append(f"theta0 must list I={self.I} holdings, got {len(theta0)}")
        if not all(_is_real(v) for v in theta0):
            found.append("theta0 must contain finite reals")
        elif _is_real(self.Sigma, self.Y0):
            gap = math.fsum((*theta0, self.Y0, -self.Sigma))
            if abs(gap) > CLEARING_SLACK:
                found.append(f"initial holdings plus Y0 must equal Sigma, off by {gap:.3e}")

        return found

    @classmethod
    def sweep_base(cls, a: float = 1.0, **changes: Any) -> "ModelParams":  # noqa: ANN401
        """
        The common parameters of the welfare sweeps.

        ``I=10, σ_D=1, σ_{Y′}=10, κ=5, Σ=1, Y₀=Y′₀=0`` and ``θ_{j,0−}=Σ/I``.
        """
        base = cls(I=10, a=a, sigma_D=1.0, sigma_Yp=10.0, kappa=5.0, Sigma=1.0)
        return base.replace(**changes) if changes else base

    def replace(self, **changes: Any) -> "ModelParams":  # noqa: ANN401
        """
        Copy these parameters with some fields changed.

        Initial holdings are re-derived when ``I``, ``Sigma`` or ``Y0`` change and
        ``theta0`` is not given explicitly.
        """
        if "theta0" not in changes and _SCALARS_DETERMINING_THETA0 & changes.keys():
            changes["theta0"] = None
        return dataclasses.replace(self, **changes)

    @property
    def theta_tracker0(self) -> float:
        """Initial holdings of the noise tracker, which clear the market at ``t=0−``."""
        return self.Sigma - math.fsum(self.theta0 or ())

    @property
    def endogenous_scale(self) -> float:
        """``2Iκ + aσ_D²``, the denominator of the endogenous closed forms."""
        return 2 * self.I * self.kappa + self.a * self.sigma_D**2


def _is_count(value: object) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and value > 0


def _is_real(*values: object) -> bool:
    return all(
        isinstance(v, int | float) and not isinstance(v, bool) and math.isfinite(v)
        for v in values
    )
