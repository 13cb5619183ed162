import json

import numpy as np
import pytest
from typer.testing import CliRunner

from freeedge.cli import app
from freeedge.config import Method, Side
from freeedge.console import console, print_file_operation
from freeedge.modelfile import load_model
from freeedge.report import MethodRun, RunReport
from freeedge.results import EdgeResult

runner = CliRunner()

SHIFT_ONLY_DOC = {"d": 2, "m": 1, "coeffs": [], "shift": [[1.0, 0.0], [0.0, 2.0]]}
MP_DOC = {"variance_profile": {"sigma2": [[0.125] * 8, [0.125] * 8]}}


def _json(result) -> dict:
    assert result.exit_code == 0, result.output
    return json.loads(result.stdout)


def test_edges_singular_all_methods(write_model, scalar_doc):
    path = write_model(scalar_doc)
    doc = _json(runner.invoke(app, ["edges", str(path), "--singular", "--json"]))
    assert doc["singular"] is True
    assert set(doc["methods"]) == {"variational", "cauchy", "dilation", "diagonal"}
    for name, run in doc["methods"].items():
        assert run["upper"]["value"] == pytest.approx(2.0, abs=1e-3), name
        if "lower" in run:
            assert run["lower"]["value"] == pytest.approx(0.0, abs=1e-3), name


def test_edges_diagonal_profile(write_model):
    path = write_model(MP_DOC)
    doc = _json(runner.invoke(app, ["edges", str(path), "--method", "diagonal", "--json"]))
    run = doc["methods"]["diagonal"]
    assert run["upper"]["value"] == pytest.approx(2.25, abs=1e-6)
    assert run["lower"]["value"] == pytest.approx(0.25, abs=1e-6)


def test_edges_text_report(write_model, scalar_doc):
    result = runner.invoke(app, ["edges", str(write_model(scalar_doc)), "-m", "variational"])
    assert result.exit_code == 0
    assert result.stdout.startswith("model digest: ")
    assert "variational" in result.stdout


def test_edges_missing_field_exits_1(write_model, scalar_doc):
    del scalar_doc["m"]
    result = runner.invoke(app, ["edges", str(write_model(scalar_doc))])
    assert result.exit_code == 1


def test_edges_unknown_method_exits_1(write_model, scalar_doc):
    result = runner.invoke(app, ["edges", str(write_model(scalar_doc)), "--method", "newton"])
    assert result.exit_code == 1


def test_out_file_matches_stdout(write_model, scalar_doc, tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(
        app,
        ["edges", str(write_model(scalar_doc)), "-m", "cauchy", "--json", "--out", str(out)],
    )
    assert result.exit_code == 0
    assert out.read_text(encoding="utf-8") == result.stdout


def test_disagreement_exits_2(write_model, scalar_doc, monkeypatch):
    def edge(method: Method, value: float) -> EdgeResult:
        return EdgeResult(
            value=value,
            certificate=np.eye(1, dtype=complex),
            certificate_value=value,
            flatness_residual=0.0,
            iterations=1,
            method=method,
            side=Side.UPPER,
        )

    def fake_report(*args, **kwargs) -> RunReport:
        return RunReport(
            model_digest="fake",
            runs=[
                MethodRun(Method.VARIATIONAL, {Side.UPPER: edge(Method.VARIATIONAL, 4.0)}),
                MethodRun(Method.DILATION, {Side.UPPER: edge(Method.DILATION, 4.5)}),
            ],
        )

    monkeypatch.setattr("freeedge.cli.build_report", fake_report)
    result = runner.invoke(app, ["edges", str(write_model(scalar_doc)), "--json"])
    assert result.exit_code == 2
    assert json.loads(result.stdout)["model_digest"] == "fake"


def test_dense_model_skips_diagonal(write_model, dense_doc):
    args = ["edges", str(write_model(dense_doc)), "--method", "diagonal", "--json"]
    doc = _json(runner.invoke(app, args))
    assert doc["methods"]["diagonal"]["skipped"]


def test_sweep_sigma_csv(write_model, scalar_doc):
    args = ["edges", str(write_model(scalar_doc)), "-m", "variational"]
    result = runner.invoke(app, [*args, "--sweep", "sigma", "--sweep-range", "1:2:2"])
    assert result.exit_code == 0
    lines = result.stdout.strip().splitlines()
    assert lines[0] == "param,upper,lower"
    rows = [[float(x) for x in line.split(",")] for line in lines[1:]]
    assert [r[0] for r in rows] == [1.0, 2.0]
    assert [r[1] for r in rows] == pytest.approx([4.0, 16.0], abs=1e-5)


def test_sweep_requires_range(write_model, scalar_doc):
    result = runner.invoke(app, ["edges", str(write_model(scalar_doc)), "--sweep", "sigma"])
    assert result.exit_code == 1


def test_dump_normalized_round_trip(write_model, dense_doc, tmp_path):
    dumped = tmp_path / "normalized.json"
    args = ["edges", str(write_model(dense_doc)), "-m", "cauchy", "--json"]
    doc = _json(runner.invoke(app, [*args, "--dump-normalized", str(dumped)]))
    assert load_model(dumped).digest == doc["model_digest"]


def test_verify_rejects_zero_samples(write_model, scalar_doc):
    result = runner.invoke(app, ["verify", str(write_model(scalar_doc)), "--samples", "0"])
    assert result.exit_code == 1


def test_verify_shift_only_has_no_deviation(write_model):
    args = ["verify", str(write_model(SHIFT_ONLY_DOC)), "-N", "4", "-S", "2", "--json"]
    doc = _json(runner.invoke(app, args))
    assert doc["mc"]["dim"] == 4
    assert doc["deviation"] == pytest.approx({"upper": 0.0, "lower": 0.0}, abs=1e-12)


def test_cauchy_real_point(write_model, scalar_doc):
    args = ["cauchy", str(write_model(scalar_doc)), "--lambda", "5", "--json"]
    doc = _json(runner.invoke(app, args))
    assert doc["G"][0][0][0] == pytest.approx((5 - np.sqrt(5)) / 10, abs=1e-9)
    assert doc["sign"] == "positive"


def test_cauchy_inside_spectrum_exits_3(write_model, scalar_doc):
    result = runner.invoke(app, ["cauchy", str(write_model(scalar_doc)), "--lambda", "2"])
    assert result.exit_code == 3


def test_cauchy_without_noise(write_model):
    doc = {"d": 2, "m": 1, "coeffs": []}
    out = _json(runner.invoke(app, ["cauchy", str(write_model(doc)), "-l", "4,0", "--json"]))
    g = np.array([[complex(*z) for z in row] for row in out["G"]])
    np.testing.assert_allclose(g, 0.25 * np.eye(2), atol=1e-14)


@pytest.mark.parametrize("raw", ["x", "1,2,3", ""])
def test_cauchy_bad_lambda_exits_1(write_model, scalar_doc, raw):
    result = runner.invoke(app, ["cauchy", str(write_model(scalar_doc)), "--lambda", raw])
    assert result.exit_code == 1


def test_verbose_keeps_stdout_clean(write_model, scalar_doc):
    args = ["edges", str(write_model(scalar_doc)), "-m", "cauchy", "--json", "--verbose"]
    doc = _json(runner.invoke(app, args))
    assert doc["methods"]["cauchy"]["upper"]["value"] == pytest.approx(4.0, abs=1e-6)


def test_file_operation_message():
    with console.capture() as capture:
        print_file_operation("Wrote", "report.json")
    out = capture.get()
    assert "Wrote" in out
    assert "report.json" in out
