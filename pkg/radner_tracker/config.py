"""
Run configuration of the command line.

A configuration file is flat TOML. Its keys are the fields of ``RunConfig`` and of
``ModelParams``, all at top level:

```toml
model = "both"
tol = 1e-10
n_paths = 100000
seed = 42
emit = ["csv", "report"]

a = 1.0
sigma_Yp = 10.0
kappa = 5.0
```

Model parameters not given default to ``ModelParams.sweep_base()``. Command-line
flags override file values. The output directory defaults to ``$RADNER_TRACKER_OUT``,
or ``./out`` if that is not set.
"""

import math
import os
import tomllib
from collections.abc import Mapping
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Final

from radner_tracker.error import ConfigInvalid
from radner_tracker.ode import DEFAULT_TOL
from radner_tracker.params import ModelParams
from radner_tracker.simulation import DEFAULT_PATHS, DEFAULT_STEPS
from radner_tracker.welfare import A_VALUES, SWEEP_AXES


__docformat__ = "google"
__all__ = (
    "EMIT_KINDS",
    "MODEL_CHOICES",
    "OUT_ENV_VAR",
    "RunConfig",
    "load_config",
    "parse_value",
)


OUT_ENV_VAR: Final = "RADNER_TRACKER_OUT"
"""Environment variable holding the default output directory."""

MODEL_CHOICES: Final = ("endogenous", "exogenous", "both")
"""Values of ``RunConfig.model``."""

EMIT_KINDS: Final = ("csv", "svg", "report", "paths")
"""Values of ``RunConfig.emit``: data files, sweep charts, summaries on stdout, path dumps."""

_MAX_SEED = 2**64


def _default_output_dir() -> Path:
    return Path(os.environ.get(OUT_ENV_VAR) or "out")


@dataclass(kw_only=True, frozen=True, slots=True)
class RunConfig:
    """
    Everything a command needs.

    Attributes:
        model: ``endogenous``, ``exogenous`` or ``both``.
        params: Model parameters.
        tol: Integration tolerance.
        grid_size: Points of coefficient tables and residual grids.
        n_paths: Monte Carlo paths.
        n_steps: Monte Carlo time steps.
        seed: Root seed, a 64-bit unsigned integer.
        output_dir: Where files are written.
        emit: Kinds of output, see ``EMIT_KINDS``.
        axis: Sweep axis.
        values: Sweep axis values; ``None`` for the default panel.
        a_values: Sweep risk aversions.
        formula: Require the closed-form welfare difference.
        n_jobs: Worker processes for sweeps and simulations.
    """

    model: str = "both"
    params: ModelParams = field(default_factory=ModelParams.sweep_base)
    tol: float = DEFAULT_TOL
    grid_size: int = 1001
    n_paths: int = DEFAULT_PATHS
    n_steps: int = DEFAULT_STEPS
    seed: int = 42
    output_dir: Path = field(default_factory=_default_output_dir)
    emit: frozenset[str] = frozenset({"csv", "report"})
    axis: str = "sigma_Yp"
    values: tuple[float, ...] | None = None
    a_values: tuple[float, ...] = A_VALUES
    formula: bool = False
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if violations := self.violations():
            raise ConfigInvalid(violations=violations)

    def violations(self) -> list[str]:
        """Every violated invariant, as human-readable strings."""
        found = []
        if self.model not in MODEL_CHOICES:
            found.append(f"model must be one of {', '.join(MODEL_CHOICES)}, got {self.model!r}")
        if not (_is_real(self.tol) and 0 < self.tol < 1):
            found.append(f"tol must be in (0, 1), got {self.tol!r}")
        for name, least in (("grid_size", 11), ("n_paths", 1), ("n_steps", 1)):
            value = getattr(self, name)
            if not (_is_int(value) and value >= least):
                found.append(f"{name} must be an integer of at least {least}, got {value!r}")
        if not (_is_int(self.seed) and 0 <= self.seed < _MAX_SEED):
            found.append(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if unknown := sorted(set(self.emit) - set(EMIT_KINDS)):
            found.append(f"emit must be a subset of {', '.join(EMIT_KINDS)}, got {unknown}")
        if self.axis not in SWEEP_AXES:
            found.append(f"axis must be one of {', '.join(SWEEP_AXES)}, got {self.axis!r}")
        if self.values is not None and not (self.values and _is_real(*self.values)):
            found.append("values must be a nonempty list of finite reals")
        if not (self.a_values and _is_real(*self.a_values) and min(self.a_values) > 0):
            found.append("a_values must be a nonempty list of positive reals")
        if not (_is_int(self.n_jobs) and self.n_jobs != 0):
            found.append(f"n_jobs must be a nonzero integer, got {self.n_jobs!r}")
        return found

    @property
    def models(self) -> tuple[str, ...]:
        """The selected models."""
        return ("endogenous", "exogenous") if self.model == "both" else (self.model,)

    def describe(self) -> str:
        """
        The resolved configuration as one ``key=value;…`` line.

        The output directory and ``n_jobs`` do not change results and are left out.
        """
        items: list[tuple[str, Any]] = [("model", self.model)]
        items.extend((f.name, getattr(self.params, f.name)) for f in fields(self.params))
        items.extend(
            [
                ("tol", self.tol),
                ("grid_size", self.grid_size),
                ("n_paths", self.n_paths),
                ("n_steps", self.n_steps),
                ("seed", self.seed),
                ("emit", sorted(self.emit)),
                ("axis", self.axis),
                ("values", self.values),
                ("a_values", self.a_values),
                ("formula", self.formula),
            ]
        )
        return ";".join(f"{key}={_render(value)}" for key, value in items)


def load_config(path: Path | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """
    Resolve a configuration from an optional TOML file and overrides.

    Overrides take precedence over the file. String values are parsed with
    ``parse_value()`` into the type their key expects.

    Raises:
        ConfigInvalid: listing every problem at once: unreadable files, unknown keys,
                       values of the wrong type, and violated invariants
    """
    violations: list[str] = []
    raw: dict[str, Any] = {}
    if path is not None:
        try:
            with path.open("rb") as f:
                raw.update(tomllib.load(f))
        except (OSError, tomllib.TOMLDecodeError) as err:
            violations.append(f"cannot read config file {path}: {err}")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})

    param_names = {f.name for f in fields(ModelParams)}
    run_names = {f.name for f in fields(RunConfig)} - {"params"}
    param_values: dict[str, Any] = {}
    run_values: dict[str, Any] = {}
    for key, value in raw.items():
        if key in param_names:
            param_values[key] = _coerce(key, value, violations)
        elif key in run_names:
            run_values[key] = _coerce(key, value, violations)
        else:
            violations.append(f"unknown key {key!r}")

    try:
        run_values["params"] = ModelParams.sweep_base().replace(**param_values)
    except ConfigInvalid as err:
        violations.extend(err.violations)
    except TypeError as err:
        violations.append(str(err))

    if "params" in run_values:
        try:
            config = RunConfig(**run_values)
        except ConfigInvalid as err:
            violations.extend(err.violations)
        except TypeError as err:
            violations.append(str(err))
        else:
            if not violations:
                return config

    raise ConfigInvalid(violations=violations)


def parse_value(text: str) -> Any:  # noqa: ANN401
    """
    Parse a command-line value as a TOML value, or keep it as a string.

    ``"1e-8"`` becomes a float, ``"[1, 2]"`` a list, and ``"both"`` stays a string.
    """
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


_INT_KEYS = frozenset({"I", "grid_size", "n_paths", "n_steps", "seed", "n_jobs"})
_FLOAT_KEYS = frozenset({"a", "sigma_D", "sigma_Yp", "kappa", "Sigma", "Y0", "Yp0", "D0", "tol"})
_FLOAT_LIST_KEYS = frozenset({"theta0", "values", "a_values"})


def _coerce(key: str, value: Any, violations: list[str]) -> Any:  # noqa: ANN401, C901, PLR0911
    """Convert a file or flag value to the type ``key`` expects, recording failures."""
    if isinstance(value, str) and key not in {"model", "axis", "output_dir"}:
        value = parse_value(value)
    if key == "emit" and isinstance(value, str):
        value = [part.strip() for part in value.split(",") if part.strip()]
    if key in _FLOAT_LIST_KEYS and isinstance(value, str):
        value = [parse_value(part.strip()) for part in value.split(",") if part.strip()]

    if key in _INT_KEYS:
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if not _is_int(value):
            violations.append(f"{key} must be an integer, got {value!r}")
        return value
    if key in _FLOAT_KEYS:
        if _is_int(value):
            return float(value)
        if not isinstance(value, float):
            violations.append(f"{key} must be a number, got {value!r}")
        return value
    if key in _FLOAT_LIST_KEYS:
        if isinstance(value, int | float) and not isinstance(value, bool):
            value = [value]
        if not isinstance(value, list) or not all(_is_number(v) for v in value):
            violations.append(f"{key} must be a list of numbers, got {value!r}")
            return None if key == "values" else value
        return tuple(float(v) for v in value)
    if key == "emit":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            violations.append(f"emit must be a list of strings, got {value!r}")
            return frozenset()
        return frozenset(value)
    if key == "formula":
        if not isinstance(value, bool):
            violations.append(f"formula must be true or false, got {value!r}")
        return value
    if key == "output_dir":
        return Path(value)
    return value


def _render(value: Any) -> str:  # noqa: ANN401
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list | tuple):
        return "[" + ",".join(_render(v) for v in value) + "]"
    if value is None:
        return "default"
    return str(value)


def _is_int(value: object) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: object) -> bool:
    return isinstance(value, int | float) and not isinstance(value, bool)


def _is_real(*values: object) -> bool:
    return all(_is_number(v) and math.isfinite(v) for v in values)  # type: ignore[arg-type]
