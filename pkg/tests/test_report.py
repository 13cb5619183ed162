import json

import numpy as np
import pytest

from freeedge.config import Method, Side, SolverOptions
from freeedge.exceptions import MethodDisagreementError, MethodFailedError, NonConvergenceError
from freeedge.mc_oracle import McEdgeStats
from freeedge.model import FreeModel
from freeedge.report import (
    MethodRun,
    RunReport,
    build_report,
    render_json,
    render_text_report,
    run_method,
)
from freeedge.results import EdgeResult


def _edge(method: Method, side: Side, value: float) -> EdgeResult:
    return EdgeResult(
        value=value,
        certificate=np.eye(1, dtype=complex),
        certificate_value=value,
        flatness_residual=0.0,
        iterations=1,
        method=method,
        side=side,
    )


def _run(method: Method, upper: float, lower: float | None = None) -> MethodRun:
    edges = {Side.UPPER: _edge(method, Side.UPPER, upper)}
    if lower is not None:
        edges[Side.LOWER] = _edge(method, Side.LOWER, lower)
    return MethodRun(method, edges)


@pytest.fixture
def report() -> RunReport:
    return RunReport(
        model_digest="abc",
        runs=[
            _run(Method.VARIATIONAL, 4.0, 0.0),
            _run(Method.CAUCHY, 4.0 + 1e-7, 2e-7),
            _run(Method.DILATION, 4.1),
        ],
    )


def test_agreement_is_symmetric(report):
    table = report.agreement()
    upper = table[Side.UPPER]
    assert upper[Method.VARIATIONAL][Method.DILATION] == pytest.approx(0.1)
    assert upper[Method.DILATION][Method.VARIATIONAL] == upper[Method.VARIATIONAL][Method.DILATION]
    assert upper[Method.CAUCHY][Method.CAUCHY] == 0.0
    assert set(table[Side.LOWER]) == {Method.VARIATIONAL, Method.CAUCHY}


def test_check_agreement_names_worst_pair(report):
    with pytest.raises(MethodDisagreementError, match="dilation") as info:
        report.check_agreement(1e-5)
    assert info.value.status == 2
    assert {(p[1], p[2]) for p in info.value.pairs} == {
        ("variational", "dilation"),
        ("cauchy", "dilation"),
    }
    report.check_agreement(0.2)


def test_singular_view_uses_square_roots(report):
    report.singular = True
    assert report.value(Method.VARIATIONAL, Side.UPPER) == pytest.approx(2.0)
    assert report.value(Method.DILATION, Side.LOWER) is None
    # agreement stays on eigenvalue edges
    assert report.agreement()[Side.UPPER][Method.VARIATIONAL][Method.DILATION] == pytest.approx(0.1)


def test_deviation(report):
    assert report.deviation() is None
    report.mc = McEdgeStats.from_samples([(3.0, 0.5)])
    report.mc_dim = 10
    dev = report.deviation()
    assert dev == pytest.approx({"upper": 0.25, "lower": 0.5})


def test_json_fields(report):
    doc = json.loads(render_json(report))
    assert doc["model_digest"] == "abc"
    assert doc["methods"]["variational"]["upper"]["value"] == 4.0
    assert "lower" not in doc["methods"]["dilation"]
    assert doc["agreement"]["upper"]["cauchy"]["variational"] == pytest.approx(1e-7)
    assert "mc" not in doc


def test_text_report_keeps_brackets(report):
    report.runs[0].edges[Side.UPPER].notes.append("[s] kept")
    text = render_text_report(report)
    assert text.startswith("model digest: abc")
    assert "[s] kept" in text
    assert "Agreement" in text


def test_build_report_skips_diagonal_for_dense_model():
    a = np.array([[1.0, 0.5], [0.5j, 1.0]])
    model = FreeModel.build([a], np.zeros((2, 2)))
    run = run_method(Method.DIAGONAL, model, None, SolverOptions())
    assert run.skipped is not None
    assert not run.edges


def test_build_report_singular_drops_shift(scalar_model):
    report = build_report(
        scalar_model.with_shift(5.0),
        [Method.VARIATIONAL],
        SolverOptions(),
        digest="x",
        singular=True,
    )
    assert report.value(Method.VARIATIONAL, Side.UPPER) == pytest.approx(2.0, abs=1e-6)


def test_method_failure_is_tagged(monkeypatch, scalar_model):
    def fail(*args, **kwargs):
        msg = "no bracket"
        raise NonConvergenceError(msg)

    monkeypatch.setattr("freeedge.report.edge_from_cauchy", fail)
    with pytest.raises(MethodFailedError, match=r"\[cauchy/upper\]") as info:
        run_method(Method.CAUCHY, scalar_model, None, SolverOptions())
    assert info.value.status == 3
