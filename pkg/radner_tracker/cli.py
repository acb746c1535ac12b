"""
Command line.

```
radner-tracker solve    [--model M] [--grid N]
radner-tracker verify   [--model M] [--grid N]
radner-tracker simulate [--model M] [--paths N] [--steps N] [--seed N]
radner-tracker welfare  [--formula]
radner-tracker sweep    [--axis A] [--values V,…] [--a-values A,…] [--emit csv,svg]
```

Every command also accepts ``--config FILE``, ``--set KEY=VALUE`` (repeatable),
``--tol``, ``--out``, ``--emit``, ``--jobs`` and ``-v``. Exit codes are 0 on
success, 1 for invalid configurations and violated hypotheses, and 2 when a
check fails or the numerics break down; the failing check is named on standard error.
"""

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Final

from radner_tracker._emit import write_csv
from radner_tracker.coefficients import Coefficients, Model
from radner_tracker.config import EMIT_KINDS, MODEL_CHOICES, RunConfig, load_config, parse_value
from radner_tracker.endogenous import coefficient_table, solve
from radner_tracker.error import EquilibriumError, IdentityViolation
from radner_tracker.exogenous import solve_exogenous
from radner_tracker.simulation import Measure, SimGrid, dump_paths, martingale_check, sample_paths
from radner_tracker.verification import verify_all
from radner_tracker.welfare import (
    SWEEP_AXES,
    plot_sweep,
    read_sweep_csv,
    sweep,
    welfare_difference,
    write_sweep_csv,
)

import pandas as pd


__docformat__ = "google"
__all__ = (
    "COMMANDS",
    "MARTINGALE_Z_LIMIT",
    "PATH_DUMP_LIMIT",
    "RunResult",
    "main",
    "run",
)


MARTINGALE_Z_LIMIT: Final = 3.0
"""``simulate`` fails if any martingale estimate is this many standard errors off."""

PATH_DUMP_LIMIT: Final = 100
"""At most this many paths are dumped by ``simulate --emit paths``."""

_LOGGER = logging.getLogger("radner_tracker")


@dataclass(kw_only=True, frozen=True, slots=True)
class RunResult:
    """
    The outcome of a command.

    Attributes:
        exit_code: 0 on success, otherwise the code of ``error``.
        files: Files written, in order.
        error: The error that ended the command, if any.
    """

    exit_code: int
    files: tuple[Path, ...] = ()
    error: EquilibriumError | None = field(default=None)


def _coefficients(config: RunConfig, model: str) -> Coefficients:
    if model == "endogenous":
        return solve(config.params, config.tol).coeffs
    return solve_exogenous(config.params, config.tol).coeffs


def _solve(config: RunConfig, files: list[Path]) -> None:
    for model in config.models:
        table = coefficient_table(_coefficients(config, model), config.grid_size)
        if "csv" in config.emit:
            path = config.output_dir / f"coefficients_{model}.csv"
            files.append(write_csv(table, path, comment=f"config: {config.describe()}"))
        if "report" in config.emit:
            _report(f"{model} coefficients at t=0:", table.iloc[[0]].T.to_string(header=False))


def _verify(config: RunConfig, files: list[Path]) -> None:
    report = verify_all(
        config.params,
        config.tol,
        config.grid_size,
        seed=config.seed,
        models=[Model(m) for m in config.models],
    )
    frame = report.to_frame()
    if "csv" in config.emit:
        path = config.output_dir / "verification.csv"
        files.append(write_csv(frame, path, comment=f"config: {config.describe()}"))
    if "report" in config.emit:
        _report(frame.to_string(index=False))
    report.raise_for_failures()


def _simulate(config: RunConfig, files: list[Path]) -> None:
    grid = SimGrid(n_steps=config.n_steps)
    frames, reports = [], []
    for model in config.models:
        coeffs = _coefficients(config, model)
        report = martingale_check(
            config.params, coeffs, grid, config.n_paths, config.seed, n_jobs=config.n_jobs
        )
        reports.append(report)
        frames.append(report.to_frame().assign(model=model))
        if "paths" in config.emit:
            bundles = sample_paths(
                config.params,
                coeffs,
                grid,
                min(config.n_paths, PATH_DUMP_LIMIT),
                config.seed,
                Measure.P,
            )
            path = config.output_dir / f"paths_{model}.csv"
            files.append(dump_paths(bundles, path, comment=f"config: {config.describe()}"))

    frame = pd.concat(frames, ignore_index=True)
    frame = frame.loc[:, ["model", "name", "mean", "target", "stderr", "z", "n_paths"]]
    if "csv" in config.emit:
        path = config.output_dir / "martingale.csv"
        files.append(write_csv(frame, path, comment=f"config: {config.describe()}"))
    if "report" in config.emit:
        _report(frame.to_string(index=False))

    for report in reports:
        worst = max(report.rows, key=lambda row: abs(row.z))
        if abs(worst.z) >= MARTINGALE_Z_LIMIT:
            raise IdentityViolation(
                check=f"martingale_check_{report.model}",
                identity=worst.name,
                deviation=abs(worst.mean - worst.target),
                tolerance=MARTINGALE_Z_LIMIT * worst.stderr,
            )


def _welfare(config: RunConfig, files: list[Path]) -> None:
    report = welfare_difference(config.params, config.tol, require_formula=config.formula)
    frame = report.to_frame()
    if "csv" in config.emit:
        path = config.output_dir / "welfare.csv"
        files.append(write_csv(frame, path, comment=f"config: {config.describe()}"))
    if "report" in config.emit:
        _report(frame.T.to_string(header=False))


def _sweep(config: RunConfig, files: list[Path]) -> None:
    table = sweep(
        config.params,
        config.axis,
        config.values,
        config.a_values,
        config.tol,
        n_jobs=config.n_jobs,
    )
    comment = f"config: {config.describe()}"
    csv_path = config.output_dir / f"sweep_{config.axis}.csv"
    if "csv" in config.emit or "svg" in config.emit:
        files.append(write_sweep_csv(table, csv_path, comment=comment))
    if "svg" in config.emit:
        svg_path = config.output_dir / f"sweep_{config.axis}.svg"
        files.append(plot_sweep(read_sweep_csv(csv_path), svg_path, comment=comment))
    if "report" in config.emit:
        _report(table.to_string(index=False))


COMMANDS: Final[dict[str, Callable[[RunConfig, list[Path]], None]]] = {
    "solve": _solve,
    "verify": _verify,
    "simulate": _simulate,
    "welfare": _welfare,
    "sweep": _sweep,
}
"""Command names and their implementations."""


def run(command: str, config: RunConfig, *, logger: logging.Logger = _LOGGER) -> RunResult:
    """
    Run a command and report its exit code and the files it wrote.

    Files written before a failure are kept and reported.

    Raises:
        ValueError: if ``command`` is unknown
    """
    try:
        handler = COMMANDS[command]
    except KeyError:
        msg = f"expected one of {', '.join(COMMANDS)}, got {command!r}"
        raise ValueError(msg) from None

    logger.info(f"{command}: {config.describe()}")
    files: list[Path] = []
    try:
        handler(config, files)
    except EquilibriumError as err:
        logger.error(f"{command} failed: {err}")
        return RunResult(exit_code=err.exit_code, files=tuple(files), error=err)
    for path in files:
        logger.info(f"wrote {path}")
    return RunResult(exit_code=0, files=tuple(files))


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the ``radner-tracker`` script."""
    args = _parser().parse_args(argv)
    _configure_logging(args.verbose)

    try:
        config = load_config(args.config, _overrides(args))
    except EquilibriumError as err:
        sys.stderr.write(f"error: {err}\n")
        return err.exit_code

    result = run(args.command, config)
    if result.error is not None:
        sys.stderr.write(f"error: {result.error}\n")
    return result.exit_code


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat TOML configuration file")
    common.add_argument("--model", choices=MODEL_CHOICES, help="which equilibrium to use")
    common.add_argument("--tol", help="integration tolerance")
    common.add_argument("--grid", dest="grid_size", help="points of coefficient grids")
    common.add_argument("--paths", dest="n_paths", help="Monte Carlo paths")
    common.add_argument("--steps", dest="n_steps", help="Monte Carlo time steps")
    common.add_argument("--seed", help="root seed")
    common.add_argument("--out", dest="output_dir", help="output directory")
    common.add_argument("--emit", help=f"comma-separated subset of {','.join(EMIT_KINDS)}")
    common.add_argument("--axis", choices=SWEEP_AXES, help="sweep axis")
    common.add_argument("--values", help="comma-separated sweep axis values")
    common.add_argument("--a-values", dest="a_values", help="comma-separated risk aversions")
    common.add_argument(
        "--formula",
        action="store_true",
        default=None,
        help="require the closed-form welfare difference",
    )
    common.add_argument("--jobs", dest="n_jobs", help="worker processes")
    common.add_argument(
        "--set",
        dest="assignments",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a configuration key, f.e. --set kappa=25",
    )
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="log more (repeat for debug)"
    )

    parser = argparse.ArgumentParser(
        prog="radner-tracker",
        description=(
            "Radner equilibria with an endogenous noise tracker or an exogenous noise trader."
        ),
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, help_text in (
        ("solve", "tabulate all coefficient functions"),
        ("verify", "check ODE residuals, identities and bounds"),
        ("simulate", "check martingale properties by Monte Carlo"),
        ("welfare", "compare the aggregate welfare of both models"),
        ("sweep", "tabulate the welfare difference over one parameter"),
    ):
        commands.add_parser(name, parents=[common], help=help_text)
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Flag values keyed like the configuration file; ``--set`` comes last and wins."""
    keys = (
        "model",
        "tol",
        "grid_size",
        "n_paths",
        "n_steps",
        "seed",
        "output_dir",
        "emit",
        "axis",
        "values",
        "a_values",
        "formula",
        "n_jobs",
    )
    overrides = {key: getattr(args, key) for key in keys}
    for assignment in args.assignments:
        key, _, value = assignment.partition("=")
        overrides[key.strip()] = parse_value(value.strip())
    return overrides


def _report(*blocks: str) -> None:
    sys.stdout.write("\n".join(blocks) + "\n")


def _configure_logging(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
