import pytest

from freeedge.config import (
    Method,
    SolverOptions,
    SweepConfig,
    SweepParameter,
    ThreadConfig,
)
from freeedge.exceptions import ConfigError


def test_method_all_expands():
    assert Method.from_option("all") == list(Method)
    assert Method.from_option("cauchy") == [Method.CAUCHY]


def test_unknown_method_lists_choices():
    with pytest.raises(ConfigError, match="variational, cauchy, dilation, diagonal, all"):
        Method.from_option("newton")


def test_sweep_range():
    cfg = SweepConfig.from_range(SweepParameter.SIGMA, "1:2:3")
    assert cfg.values() == pytest.approx([1.0, 1.5, 2.0])
    assert SweepConfig.from_range(SweepParameter.SHIFT, "0.5:9:1").values() == [0.5]


@pytest.mark.parametrize("raw", ["1:2", "a:2:3", "1:2:0", "1:2:3:4"])
def test_sweep_range_rejects(raw):
    with pytest.raises(ConfigError):
        SweepConfig.from_range(SweepParameter.SIGMA, raw)


def test_thread_cap_from_env(monkeypatch):
    monkeypatch.setenv(ThreadConfig.ENV_VAR, "3")
    assert ThreadConfig.from_env().max_workers == 3


@pytest.mark.parametrize("raw", ["zero", "0", "-2"])
def test_thread_cap_ignores_bad_values(monkeypatch, raw):
    monkeypatch.setenv(ThreadConfig.ENV_VAR, raw)
    assert ThreadConfig.from_env().max_workers >= 1


def test_thread_cap_defaults_to_cpu_count(monkeypatch):
    monkeypatch.delenv(ThreadConfig.ENV_VAR, raising=False)
    monkeypatch.setattr("os.cpu_count", lambda: 6)
    assert ThreadConfig.from_env().max_workers == 6


def test_solver_options_validation():
    assert SolverOptions().bisection_width == pytest.approx(1e-8)
    with pytest.raises(ConfigError, match="positive"):
        SolverOptions(tol=0.0)
    with pytest.raises(ConfigError, match="barrier_factor"):
        SolverOptions(barrier_factor=1.0)
    with pytest.raises(ConfigError, match="budgets"):
        SolverOptions(max_iter=0)
