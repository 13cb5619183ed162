"""Run reports: per-method edges, pairwise agreement, Monte Carlo comparison."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import TYPE_CHECKING, Any

import numpy as np
from rich.table import Table
from rich.text import Text

from .cauchy import edge_from_cauchy
from .config import Method, Side, SolverDefaults, SolverOptions
from .console import render_text
from .diagonal import diag_lower_edge, diag_upper_edge
from .edges import dilated_cross_check, lower_edge, upper_edge
from .exceptions import FreeEdgeError, MethodDisagreementError, MethodFailedError
from .model import FreeModel, VarianceProfile, is_diagonal_compatible
from .results import complex_pairs

if TYPE_CHECKING:
    from collections.abc import Callable

    from .cauchy import CauchyPoint
    from .mc_oracle import McEdgeStats
    from .results import EdgeResult

logger = logging.getLogger(__name__)

SIDES = (Side.UPPER, Side.LOWER)


@dataclass
class MethodRun:
    """Both edges of one method, or the reason it was skipped."""

    method: Method
    edges: dict[Side, EdgeResult] = field(default_factory=dict)
    wall_time: float = 0.0
    skipped: str | None = None

    def shown(self, *, singular: bool) -> dict[Side, EdgeResult]:
        """Edges as reported: eigenvalue edges, or singular values of x."""
        if not singular:
            return dict(self.edges)
        return {side: r.as_singular() for side, r in self.edges.items()}

    def to_dict(self, *, singular: bool = False) -> dict[str, Any]:
        """JSON-ready representation."""
        return {
            "wall_time": self.wall_time,
            "skipped": self.skipped,
            **{side.value: r.to_dict() for side, r in self.shown(singular=singular).items()},
        }


@dataclass
class RunReport:
    """Everything one ``edges`` or ``verify`` run produced."""

    model_digest: str
    runs: list[MethodRun]
    singular: bool = False
    mc: McEdgeStats | None = None
    mc_dim: int | None = None

    def value(self, method: Method, side: Side) -> float | None:
        """Value reported by ``method``, if it computed that side."""
        for run in self.runs:
            if run.method is method and side in run.edges:
                return run.shown(singular=self.singular)[side].value
        return None

    def agreement(self) -> dict[Side, dict[Method, dict[Method, float]]]:
        """Symmetric table of pairwise ``|Δ|`` between the methods' eigenvalue edges, per side."""
        table: dict[Side, dict[Method, dict[Method, float]]] = {}
        for side in SIDES:
            values = {
                run.method: run.edges[side].value for run in self.runs if side in run.edges
            }
            rows: dict[Method, dict[Method, float]] = {m: {m: 0.0} for m in values}
            for a, b in combinations(values, 2):
                delta = abs(values[a] - values[b])
                rows[a][b] = delta
                rows[b][a] = delta
            if rows:
                table[side] = rows
        return table

    def disagreements(self, tol: float) -> list[tuple[str, str, str, float]]:
        """Method pairs whose edges differ by more than ``tol``."""
        out = []
        for side, rows in self.agreement().items():
            methods = list(rows)
            for a, b in combinations(methods, 2):
                if rows[a][b] > tol:
                    out.append((side.value, a.value, b.value, rows[a][b]))
        return out

    def check_agreement(self, tol: float) -> None:
        """Raise if any pair of methods disagrees beyond ``tol``."""
        pairs = self.disagreements(tol)
        if pairs:
            raise MethodDisagreementError(pairs, tol)

    def deviation(self) -> dict[str, float] | None:
        """Relative Monte Carlo deviation ``|mc − edge| / max(1, |edge|)`` per side."""
        if self.mc is None:
            return None
        out = {}
        for side, sampled in ((Side.UPPER, self.mc.mean_max), (Side.LOWER, self.mc.mean_min)):
            edge = self.value(Method.VARIATIONAL, side)
            if edge is not None:
                out[side.value] = abs(sampled - edge) / max(1.0, abs(edge))
        return out

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready representation with stable field names."""
        doc: dict[str, Any] = {
            "model_digest": self.model_digest,
            "singular": self.singular,
            "methods": {run.method.value: run.to_dict(singular=self.singular) for run in self.runs},
            "agreement": {
                side.value: {
                    a.value: {b.value: delta for b, delta in row.items()} for a, row in rows.items()
                }
                for side, rows in self.agreement().items()
            },
        }
        if self.mc is not None:
            doc["mc"] = {"dim": self.mc_dim, **self.mc.to_dict()}
            doc["deviation"] = self.deviation()
        return doc


def render_json(report: RunReport) -> str:
    """Report as indented JSON."""
    return json.dumps(report.to_dict(), indent=2) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _edges_table(report: RunReport) -> Table:
    quantity = "singular value" if report.singular else "edge"
    table = Table(title=f"Spectral {quantity}s", title_justify="left")
    for column in ("method", "side", "value", "bound", "flatness", "iters", "time (s)", "notes"):
        table.add_column(column, justify="right" if column in {"iters", "time (s)"} else "left")
    for run in report.runs:
        if run.skipped is not None:
            blank = ["-"] * 6
            table.add_row(run.method.value, *blank, f"skipped: {run.skipped}")
            continue
        for side, result in run.shown(singular=report.singular).items():
            notes = list(result.notes)
            if result.boundary_escape:
                notes.insert(0, "boundary escape")
            table.add_row(
                run.method.value,
                side.value,
                _fmt(result.value),
                _fmt(result.certificate_value),
                f"{result.flatness_residual:.2e}",
                str(result.iterations),
                f"{run.wall_time:.3f}",
                Text("; ".join(notes)),
            )
    return table


def _agreement_tables(report: RunReport) -> list[Table]:
    tables = []
    for side, rows in report.agreement().items():
        if len(rows) < 2:  # noqa: PLR2004
            continue
        methods = list(rows)
        table = Table(title=f"Agreement |Δ| ({side.value})", title_justify="left")
        table.add_column("")
        for m in methods:
            table.add_column(m.value, justify="right")
        for a in methods:
            table.add_row(a.value, *(f"{rows[a][b]:.2e}" for b in methods))
        tables.append(table)
    return tables


def _mc_table(report: RunReport, mc: McEdgeStats) -> Table:
    deviation = report.deviation() or {}
    table = Table(
        title=f"Monte Carlo (N={report.mc_dim}, {len(mc.per_sample)} samples)",
        title_justify="left",
    )
    for column in ("side", "free edge", "sample mean", "sample sd", "rel. deviation"):
        table.add_column(column)
    stats = (
        (Side.UPPER, mc.mean_max, mc.sd_max),
        (Side.LOWER, mc.mean_min, mc.sd_min),
    )
    for side, mean, sd in stats:
        edge = report.value(Method.VARIATIONAL, side)
        dev = deviation.get(side.value)
        dev_text = "-" if dev is None else f"{dev:.2%}"
        if dev is not None and dev > SolverDefaults.MC_DEVIATION_HIGHLIGHT:
            dev_text += " (!)"
        free = "-" if edge is None else _fmt(edge)
        table.add_row(side.value, free, _fmt(mean), _fmt(sd), dev_text)
    return table


def render_text_report(report: RunReport) -> str:
    """Report as plain-text tables."""
    parts: list[Any] = [f"model digest: {report.model_digest}", _edges_table(report)]
    parts.extend(_agreement_tables(report))
    if report.mc is not None:
        parts.append(_mc_table(report, report.mc))
    return render_text(*parts)


def _solvers(
    model: FreeModel,
    profile: VarianceProfile | None,
    opts: SolverOptions,
) -> dict[Method, dict[Side, Callable[[], EdgeResult]]]:
    solvers: dict[Method, dict[Side, Callable[[], EdgeResult]]] = {
        Method.VARIATIONAL: {
            Side.UPPER: lambda: upper_edge(model, opts),
            Side.LOWER: lambda: lower_edge(model, opts),
        },
        Method.CAUCHY: {
            Side.UPPER: lambda: edge_from_cauchy(model, Side.UPPER, opts),
            Side.LOWER: lambda: edge_from_cauchy(model, Side.LOWER, opts),
        },
        Method.DILATION: {Side.UPPER: lambda: dilated_cross_check(model, opts)},
    }
    if profile is not None:
        solvers[Method.DIAGONAL] = {
            Side.UPPER: lambda: diag_upper_edge(profile, opts),
            Side.LOWER: lambda: diag_lower_edge(profile, opts),
        }
    return solvers


def effective_profile(model: FreeModel, given: VarianceProfile | None) -> VarianceProfile | None:
    """Profile the diagonal method runs on, or None if the model has none."""
    if given is not None:
        return given
    if is_diagonal_compatible(model):
        return VarianceProfile.from_model(model)
    return None


def run_method(
    method: Method,
    model: FreeModel,
    profile: VarianceProfile | None,
    opts: SolverOptions,
) -> MethodRun:
    """Compute every edge ``method`` supports, timing the pair.

    Raises:
        MethodFailedError: wrapping the solver error with the method and side.

    """
    solvers = _solvers(model, profile, opts)
    if method not in solvers:
        logger.info("Skipping %s: model is not diagonal-compatible", method.value)
        return MethodRun(method, skipped="model is not diagonal-compatible")
    run = MethodRun(method)
    start = time.perf_counter()
    for side, solve in solvers[method].items():
        try:
            result = solve()
        except FreeEdgeError as e:
            raise MethodFailedError(method.value, side.value, e) from e
        run.edges[side] = result
    run.wall_time = time.perf_counter() - start
    logger.debug("%s finished in %.3fs", method.value, run.wall_time)
    return run


def build_report(
    model: FreeModel,
    methods: list[Method],
    opts: SolverOptions,
    *,
    digest: str,
    profile: VarianceProfile | None = None,
    singular: bool = False,
) -> RunReport:
    """Run ``methods`` on ``model`` in order.

    With ``singular`` the shift is dropped and the edges are reported as the
    extreme singular values of x.
    """
    if singular:
        model = model.without_shift()
        if profile is not None:
            profile = VarianceProfile(sigma2=profile.sigma2)
    profile = effective_profile(model, profile)
    runs = [run_method(m, model, profile, opts) for m in methods]
    return RunReport(model_digest=digest, runs=runs, singular=singular)


def cauchy_to_dict(point: CauchyPoint) -> dict[str, Any]:
    """JSON-ready view of one Cauchy transform evaluation."""
    return {
        "lambda": [point.lam.real, point.lam.imag],
        "G": complex_pairs(point.G),
        "H": complex_pairs(point.H),
        "residual": point.residual,
        "iterations": point.iterations,
        "sign": point.sign,
        "herglotz_ok": point.herglotz_ok,
    }


def _matrix_table(title: str, m: np.ndarray) -> Table:
    table = Table(title=title, title_justify="left", show_header=False)
    for _ in range(m.shape[1]):
        table.add_column(justify="right")
    for row in m:
        table.add_row(*(f"{z.real:.10g}{z.imag:+.10g}i" for z in row))
    return table


def render_cauchy_text(point: CauchyPoint) -> str:
    """Cauchy transform evaluation as plain text."""
    header = (
        f"λ = {point.lam.real:.10g}{point.lam.imag:+.10g}i\n"
        f"residual = {point.residual:.3e} after {point.iterations} iterations\n"
        f"sign = {point.sign}, Herglotz check {'passed' if point.herglotz_ok else 'FAILED'}"
    )
    return render_text(Text(header), _matrix_table("G(λ)", point.G), _matrix_table("H(λ)", point.H))
