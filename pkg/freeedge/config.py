"""Solver and tool configuration models."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from enum import Enum
from typing import ClassVar

from .exceptions import ConfigError

logger = logging.getLogger(__name__)


class Side(str, Enum):
    """Which spectral edge."""

    UPPER = "upper"
    LOWER = "lower"


class Method(str, Enum):
    """Edge computation methods."""

    VARIATIONAL = "variational"
    CAUCHY = "cauchy"
    DILATION = "dilation"
    DIAGONAL = "diagonal"

    @classmethod
    def from_option(cls, value: str) -> list[Method]:
        """Expand a `--method` value, where `all` means every method."""
        if value == "all":
            return list(cls)
        try:
            return [cls(value)]
        except ValueError as e:
            choices = ", ".join([*(m.value for m in cls), "all"])
            msg = f"Unknown method '{value}' (choose from {choices})"
            raise ConfigError(msg) from e


class SweepParameter(str, Enum):
    """Scalar parameters a sweep can vary."""

    SIGMA = "sigma"
    SHIFT = "shift"


@dataclass(frozen=True)
class Tolerances:
    """Fixed numerical thresholds of the linear algebra layer."""

    POSITIVITY: ClassVar[float] = 1e-10
    INVERTIBILITY: ClassVar[float] = 1e-12
    HERMITIAN_SYMMETRIZE: ClassVar[float] = 1e-12
    DIAGONAL: ClassVar[float] = 1e-12
    FEASIBILITY_MARGIN: ClassVar[float] = 1e-9


@dataclass(frozen=True)
class SolverDefaults:
    """Default solver constants."""

    TOL: ClassVar[float] = 1e-8
    FLAT_TOL: ClassVar[float] = 1e-6
    MAX_BARRIER_ITER: ClassVar[int] = 500
    BARRIER_FACTOR: ClassVar[float] = 0.2
    FP_TOL: ClassVar[float] = 1e-11
    MAX_ITER: ClassVar[int] = 2000
    NEWTON_SWITCH: ClassVar[float] = 1e-4
    NEWTON_MAX_ITER: ClassVar[int] = 40
    NEWTON_EVERY: ClassVar[int] = 100
    EDGE_SOLVE_ITER: ClassVar[int] = 200
    CONTINUATION_RATIO: ClassVar[float] = 0.25
    BRACKET_EXPANSIONS: ClassVar[int] = 60
    ESCAPE_NORM: ClassVar[float] = 1e4
    SERIES_ORDER_CAP: ClassVar[int] = 500
    AGREE_TOL: ClassVar[float] = 1e-5
    MC_DEVIATION_HIGHLIGHT: ClassVar[float] = 0.15


@dataclass(frozen=True)
class SolverOptions:
    """Options shared by the edge solvers."""

    tol: float = SolverDefaults.TOL
    flat_tol: float = SolverDefaults.FLAT_TOL
    max_barrier_iter: int = SolverDefaults.MAX_BARRIER_ITER
    barrier_factor: float = SolverDefaults.BARRIER_FACTOR
    fp_tol: float = SolverDefaults.FP_TOL
    max_iter: int = SolverDefaults.MAX_ITER
    newton_switch: float = SolverDefaults.NEWTON_SWITCH
    newton_max_iter: int = SolverDefaults.NEWTON_MAX_ITER
    newton_every: int = SolverDefaults.NEWTON_EVERY

    def __post_init__(self) -> None:
        """Reject nonsensical tolerances and budgets."""
        if min(self.tol, self.flat_tol, self.fp_tol) <= 0:
            msg = "tolerances must be positive"
            raise ConfigError(msg)
        if not 0 < self.barrier_factor < 1:
            msg = f"barrier_factor must lie in (0, 1), got {self.barrier_factor}"
            raise ConfigError(msg)
        if self.max_iter < 1 or self.max_barrier_iter < 1 or self.newton_max_iter < 1:
            msg = "iteration budgets must be >= 1"
            raise ConfigError(msg)

    @property
    def bisection_width(self) -> float:
        """Relative bracket width at which bisection stops."""
        return self.tol


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo oracle options."""

    dim: int = 200
    samples: int = 10
    seed: int = 0
    parallel: bool = True

    def __post_init__(self) -> None:
        """Validate sampler configuration."""
        if self.dim < 2:  # noqa: PLR2004
            msg = f"dim must be >= 2, got {self.dim}"
            raise ConfigError(msg)
        if self.samples < 1:
            msg = f"samples must be >= 1, got {self.samples}"
            raise ConfigError(msg)
        if not 0 <= self.seed < 2**64:
            msg = f"seed must be a 64-bit unsigned integer, got {self.seed}"
            raise ConfigError(msg)


@dataclass(frozen=True)
class ThreadConfig:
    """Worker thread cap for the Monte Carlo oracle."""

    ENV_VAR: ClassVar[str] = "FREE_EDGE_THREADS"

    max_workers: int

    @classmethod
    def from_env(cls) -> ThreadConfig:
        """Read the cap from `FREE_EDGE_THREADS`, defaulting to the CPU count."""
        default = os.cpu_count() or 1
        raw = os.environ.get(cls.ENV_VAR)
        if raw is None:
            return cls(max_workers=default)
        try:
            value = int(raw)
        except ValueError:
            logger.warning("Ignoring %s=%r (not an integer)", cls.ENV_VAR, raw)
            return cls(max_workers=default)
        if value < 1:
            logger.warning("Ignoring %s=%r (must be >= 1)", cls.ENV_VAR, raw)
            return cls(max_workers=default)
        return cls(max_workers=value)


@dataclass(frozen=True)
class SweepConfig:
    """Parameter sweep options."""

    parameter: SweepParameter
    start: float
    stop: float
    count: int

    @classmethod
    def from_range(cls, parameter: SweepParameter, raw: str) -> SweepConfig:
        """Parse `START:STOP:COUNT`."""
        parts = raw.split(":")
        if len(parts) != 3:  # noqa: PLR2004
            msg = f"sweep range must be START:STOP:COUNT, got '{raw}'"
            raise ConfigError(msg)
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as e:
            msg = f"sweep range must be START:STOP:COUNT, got '{raw}'"
            raise ConfigError(msg) from e
        if count < 1:
            msg = f"sweep count must be >= 1, got {count}"
            raise ConfigError(msg)
        return cls(parameter=parameter, start=start, stop=stop, count=count)

    def values(self) -> list[float]:
        """Return the evenly spaced sweep points."""
        if self.count == 1:
            return [self.start]
        step = (self.stop - self.start) / (self.count - 1)
        return [self.start + k * step for k in range(self.count)]
