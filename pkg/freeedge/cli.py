#!/usr/bin/env python3
"""freeedge CLI."""

from __future__ import annotations

import csv
import functools
import io
import json
import math
from pathlib import Path
from typing import TYPE_CHECKING, Annotated, ParamSpec, TypeVar

import typer
from rich.traceback import install as install_rich_traceback

from .cauchy import solve_G
from .config import (
    McConfig,
    Method,
    Side,
    SolverDefaults,
    SolverOptions,
    SweepConfig,
    SweepParameter,
)
from .console import (
    StatusLogger,
    print_error,
    print_file_operation,
    print_header,
    print_info,
    print_keyval,
    print_success,
    print_warning,
    setup_logging,
)
from .exceptions import ConfigError, FreeEdgeError
from .mc_oracle import mc_edges
from .modelfile import LoadedModel, dump_normalized, load_model
from .report import (
    build_report,
    cauchy_to_dict,
    render_cauchy_text,
    render_json,
    render_text_report,
)

if TYPE_CHECKING:
    from collections.abc import Callable

    from .model import FreeModel, VarianceProfile

install_rich_traceback(show_locals=True)

app = typer.Typer(
    name="freeedge",
    help="Spectral edges of matrix-coefficient free semicircular models",
    add_completion=False,
    no_args_is_help=True,
    rich_markup_mode="rich",
)

P = ParamSpec("P")
R = TypeVar("R")

ModelArg = Annotated[
    Path,
    typer.Argument(help="Model file (JSON, coefficient or variance-profile form)"),
]
JsonOpt = Annotated[bool, typer.Option("--json", help="Emit machine-readable JSON")]
OutOpt = Annotated[
    Path | None,
    typer.Option("--out", "-o", help="Also write the report to this file"),
]
TolOpt = Annotated[float, typer.Option("--tol", help="Edge tolerance")]
VerboseOpt = Annotated[bool, typer.Option("--verbose", "-v", help="Show solver logging")]


def handle_errors(func: Callable[P, R]) -> Callable[P, R]:
    """Decorator to handle common CLI errors with consistent messaging."""

    @functools.wraps(func)
    def wrapper(*args: P.args, **kwargs: P.kwargs) -> R:
        try:
            return func(*args, **kwargs)
        except typer.Exit:
            raise
        except FreeEdgeError as e:
            print_error(str(e))
            raise typer.Exit(e.status) from e
        except KeyboardInterrupt:
            print_info(f"{func.__name__.capitalize()} stopped by user")
            raise typer.Exit(130) from None
        except Exception as e:
            print_error(f"Unexpected error: {e}")
            raise typer.Exit(1) from e

    return wrapper


def _emit(text: str, out: Path | None) -> None:
    """Write ``text`` to stdout and, byte-identically, to ``out``."""
    typer.echo(text, nl=False)
    if out is not None:
        out.write_bytes(text.encode("utf-8"))
        print_file_operation("Wrote", str(out))


def _describe(command: str, model_file: Path, loaded: LoadedModel, **settings: object) -> None:
    model = loaded.model
    print_header(f"freeedge {command}", str(model_file))
    print_keyval("digest", loaded.digest)
    print_keyval("shape", f"d={model.d} m={model.m} n={model.n}")
    print_keyval("variance profile", "yes" if loaded.profile is not None else "no")
    for key, value in settings.items():
        print_keyval(key.replace("_", " "), value)


def _parse_lambda(raw: str) -> complex:
    parts = raw.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:  # noqa: PLR2004
            return complex(float(parts[0]), float(parts[1]))
    except ValueError as e:
        msg = f"--lambda must be RE or RE,IM, got '{raw}'"
        raise ConfigError(msg) from e
    msg = f"--lambda must be RE or RE,IM, got '{raw}'"
    raise ConfigError(msg)


def _sweep_config(sweep: str | None, sweep_range: str | None) -> SweepConfig | None:
    if sweep is None and sweep_range is None:
        return None
    if sweep is None or sweep_range is None:
        msg = "--sweep and --sweep-range must be given together"
        raise ConfigError(msg)
    try:
        parameter = SweepParameter(sweep)
    except ValueError as e:
        choices = ", ".join(p.value for p in SweepParameter)
        msg = f"Unknown sweep parameter '{sweep}' (choose from {choices})"
        raise ConfigError(msg) from e
    return SweepConfig.from_range(parameter, sweep_range)


def _transformed(
    loaded: LoadedModel,
    parameter: SweepParameter,
    t: float,
) -> tuple[FreeModel, VarianceProfile | None]:
    profile = loaded.profile
    if parameter is SweepParameter.SIGMA:
        return loaded.model.scaled(t), profile.scaled(t) if profile else None
    return loaded.model.with_shift(t), profile.with_shift(t) if profile else None


def _sweep_csv(
    loaded: LoadedModel,
    cfg: SweepConfig,
    method: Method,
    opts: SolverOptions,
    *,
    singular: bool,
) -> str:
    """CSV ``param,upper,lower``; sides a method does not compute are written as nan."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["param", "upper", "lower"])
    for t in cfg.values():
        model, profile = _transformed(loaded, cfg.parameter, t)
        report = build_report(
            model,
            [method],
            opts,
            digest=loaded.digest,
            profile=profile,
            singular=singular,
        )
        row = [repr(float(t))]
        for side in (Side.UPPER, Side.LOWER):
            value = report.value(method, side)
            row.append(repr(float(math.nan if value is None else value)))
        writer.writerow(row)
    return buffer.getvalue()


@app.command()
@handle_errors
def edges(
    model_file: ModelArg,
    method: Annotated[
        str,
        typer.Option("--method", "-m", help="variational, cauchy, dilation, diagonal or all"),
    ] = "all",
    singular: Annotated[
        bool,
        typer.Option("--singular", help="Drop the shift and report extreme singular values of x"),
    ] = False,
    as_json: JsonOpt = False,
    out: OutOpt = None,
    agree_tol: Annotated[
        float,
        typer.Option("--agree-tol", help="Largest allowed difference between methods"),
    ] = SolverDefaults.AGREE_TOL,
    sweep: Annotated[
        str | None,
        typer.Option("--sweep", help="Parameter to sweep: sigma (scales every aᵢ) or shift"),
    ] = None,
    sweep_range: Annotated[
        str | None,
        typer.Option("--sweep-range", help="Sweep points as START:STOP:COUNT"),
    ] = None,
    dump_path: Annotated[
        Path | None,
        typer.Option("--dump-normalized", help="Write the coefficient form of the model here"),
    ] = None,
    tol: TolOpt = SolverDefaults.TOL,
    verbose: VerboseOpt = False,
) -> None:
    """Compute the spectral edges of xx* + b⊗1 and cross-check the methods."""
    setup_logging(verbose)
    methods = Method.from_option(method)
    sweep_cfg = _sweep_config(sweep, sweep_range)
    opts = SolverOptions(tol=tol)
    loaded = load_model(model_file)
    if verbose:
        _describe("edges", model_file, loaded, methods=", ".join(m.value for m in methods), tol=tol)
    if dump_path is not None:
        dump_normalized(loaded.model, dump_path)
        print_file_operation("Wrote normalized model", str(dump_path))

    if sweep_cfg is not None:
        if len(methods) > 1:
            print_info(f"Sweeping with the {methods[0].value} method only")
        _emit(_sweep_csv(loaded, sweep_cfg, methods[0], opts, singular=singular), out)
        return

    report = build_report(
        loaded.model,
        methods,
        opts,
        digest=loaded.digest,
        profile=loaded.profile,
        singular=singular,
    )
    for run in report.runs:
        if run.skipped is not None:
            print_warning(f"{run.method.value} skipped: {run.skipped}")
    _emit(render_json(report) if as_json else render_text_report(report), out)
    report.check_agreement(agree_tol)
    if sum(1 for run in report.runs if run.edges) > 1:
        print_success(f"Methods agree within {agree_tol:g}")


@app.command()
@handle_errors
def verify(
    model_file: ModelArg,
    dim: Annotated[int, typer.Option("--dim", "-N", help="GUE matrix size N")] = 200,
    samples: Annotated[int, typer.Option("--samples", "-S", help="Number of samples")] = 10,
    seed: Annotated[int, typer.Option("--seed", help="Random seed")] = 0,
    serial: Annotated[
        bool,
        typer.Option("--serial", help="Sample on one thread (results are identical)"),
    ] = False,
    as_json: JsonOpt = False,
    out: OutOpt = None,
    tol: TolOpt = SolverDefaults.TOL,
    verbose: VerboseOpt = False,
) -> None:
    """Compare the variational edges with a seeded GUE Monte Carlo estimate."""
    setup_logging(verbose)
    cfg = McConfig(dim=dim, samples=samples, seed=seed, parallel=not serial)
    loaded = load_model(model_file)
    if verbose:
        _describe("verify", model_file, loaded, dim=cfg.dim, samples=cfg.samples, seed=cfg.seed)
    report = build_report(
        loaded.model,
        [Method.VARIATIONAL],
        SolverOptions(tol=tol),
        digest=loaded.digest,
        profile=loaded.profile,
    )
    with StatusLogger(f"Sampling {cfg.samples} realizations at N={cfg.dim}"):
        report.mc = mc_edges(loaded.model, cfg)
    report.mc_dim = cfg.dim
    _emit(render_json(report) if as_json else render_text_report(report), out)
    for side, dev in (report.deviation() or {}).items():
        if dev > SolverDefaults.MC_DEVIATION_HIGHLIGHT:
            print_warning(f"Monte Carlo {side} edge deviates by {dev:.1%}")


@app.command()
@handle_errors
def cauchy(
    model_file: ModelArg,
    lam: Annotated[
        str,
        typer.Option("--lambda", "-l", help="Evaluation point as RE or RE,IM"),
    ],
    as_json: JsonOpt = False,
    out: OutOpt = None,
    verbose: VerboseOpt = False,
) -> None:
    """Evaluate the matrix Cauchy transform G(λ) and its companion H(λ)."""
    setup_logging(verbose)
    point_lam = _parse_lambda(lam)
    loaded = load_model(model_file)
    point = solve_G(loaded.model, point_lam)
    if as_json:
        text = json.dumps(cauchy_to_dict(point), indent=2) + "\n"
    else:
        text = render_cauchy_text(point)
    _emit(text, out)


def main() -> None:
    """CLI entry point."""
    app()


if __name__ == "__main__":
    main()
