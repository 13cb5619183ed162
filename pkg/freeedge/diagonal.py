"""Edges of independent-entries models, with certificates restricted to diagonal z = diag(v).

For a variance profile σ² (d×m) the objective vector is

    f_i(v) = b_i + 1/v_i + Σ_j σ²_ij / (1 − Σ_k σ²_kj v_k),

the upper edge is ``inf_v max_i f_i(v)`` over ``v > 0, σ²ᵀv < 1`` and the
lower edge ``sup_v min_i f_i(v)`` over ``v < 0``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import logsumexp, softmax

from .barrier import quasi_newton_minimize, stage_budget
from .config import Method, Side, SolverOptions, Tolerances
from .exceptions import (
    BracketNotFoundError,
    InfeasibleError,
    MaxIterationsError,
    ShapeMismatchError,
    SingularIterateError,
)
from .fixed_point import FixedPointEquation, locate_edge
from .linalg import solve_linear
from .model import VarianceProfile
from .results import EdgeResult

if TYPE_CHECKING:
    from collections.abc import Callable

    from numpy.typing import ArrayLike

    from .linalg import ComplexMatrix, RealVector

logger = logging.getLogger(__name__)

INITIAL_TEMPERATURE = 0.1
UNBOUNDED_CERTIFICATE = 1e12


@dataclass(frozen=True)
class DiagonalIterate:
    """A point v with its objective vector and feasibility for one side."""

    v: RealVector
    objective: RealVector
    feasible: bool

    @property
    def flatness(self) -> float:
        """Spread ``max f − min f`` of the objective vector."""
        return float(np.ptp(self.objective))


def _violation(profile: VarianceProfile, v: RealVector, side: Side) -> str | None:
    if side is Side.UPPER:
        if np.any(v <= 0):
            return f"v[{int(np.argmin(v))}] must be positive"
        load = profile.sigma2.T @ v
        if np.any(load >= 1 - Tolerances.FEASIBILITY_MARGIN):
            return f"column load Σ_k σ²_k{int(np.argmax(load))} v_k must stay below 1"
        return None
    if np.any(v >= 0):
        return f"v[{int(np.argmax(v))}] must be negative"
    return None


def _objective(profile: VarianceProfile, v: RealVector) -> RealVector:
    return profile.bdiag + 1.0 / v + profile.sigma2 @ (1.0 / (1.0 - profile.sigma2.T @ v))


def diag_objective(profile: VarianceProfile, v: ArrayLike, side: Side) -> RealVector:
    """Entrywise objective ``b_i + 1/v_i + Σ_j σ²_ij / (1 − Σ_k σ²_kj v_k)``.

    Raises:
        InfeasibleError: naming the violated constraint and index.

    """
    vec = np.asarray(v, dtype=np.float64).ravel()
    if vec.shape != (profile.d,):
        raise ShapeMismatchError("v", (profile.d,), vec.shape)
    violation = _violation(profile, vec, side)
    if violation is not None:
        raise InfeasibleError(side.value, violation)
    return _objective(profile, vec)


def diagonal_iterate(profile: VarianceProfile, v: ArrayLike, side: Side) -> DiagonalIterate:
    """Evaluate v without raising on infeasibility."""
    vec = np.asarray(v, dtype=np.float64).ravel()
    if _violation(profile, vec, side) is not None:
        return DiagonalIterate(vec, np.full(profile.d, np.nan), feasible=False)
    return DiagonalIterate(vec, _objective(profile, vec), feasible=True)


class DiagonalEquation(FixedPointEquation):
    """Cauchy transform equation restricted to diagonal z = diag(v)."""

    def __init__(self, profile: VarianceProfile) -> None:
        """Bind to a profile."""
        self.profile = profile
        self.dim = profile.d
        self._sigma2 = profile.sigma2.astype(np.complex128)

    @property
    def base(self) -> ComplexMatrix:
        """diag(b)."""
        return np.diag(self.profile.bdiag).astype(np.complex128)

    def _split(self, z: ComplexMatrix) -> tuple[np.ndarray, np.ndarray]:
        v = np.diagonal(z).copy()
        slack = 1.0 - self._sigma2.T @ v
        if np.any(np.abs(v) <= Tolerances.INVERTIBILITY) or np.any(
            np.abs(slack) <= Tolerances.INVERTIBILITY,
        ):
            msg = "diagonal iterate makes z or 1 - Φ*(z) singular"
            raise SingularIterateError(msg)
        return v, slack

    def h(self, z: ComplexMatrix) -> ComplexMatrix:
        """diag(f(v))."""
        v, slack = self._split(z)
        return np.diag(self.profile.bdiag + 1.0 / v + self._sigma2 @ (1.0 / slack))

    def update(self, z: ComplexMatrix, lam: complex) -> ComplexMatrix:
        """diag(1 / (λ − b − σ²(1/(1 − σ²ᵀv))))."""
        _, slack = self._split(z)
        denom = lam - self.profile.bdiag - self._sigma2 @ (1.0 / slack)
        if np.any(np.abs(denom) <= Tolerances.INVERTIBILITY):
            msg = "diagonal update is singular"
            raise SingularIterateError(msg)
        return np.diag(1.0 / denom)

    def jacobian(self, z: ComplexMatrix) -> np.ndarray:
        """``−diag(1/v²) + σ² diag(1/(1−σ²ᵀv)²) σ²ᵀ`` on v."""
        v, slack = self._split(z)
        return (self._sigma2 / slack**2) @ self._sigma2.T - np.diag(1.0 / v**2)

    def newton_direction(self, z: ComplexMatrix, lam: complex) -> ComplexMatrix:
        """Newton step on the d diagonal entries only."""
        residual = np.diagonal(self.h(z)) - lam
        return np.diag(solve_linear(self.jacobian(z), -residual))

    def in_cone(self, z: ComplexMatrix, side: Side) -> bool:
        """Sign and column-load constraints on v."""
        v = np.real(np.diagonal(z))
        return _violation(self.profile, v, side) is None


def _smoothed(
    profile: VarianceProfile,
    side: Side,
    temperature: float,
) -> Callable[[RealVector], tuple[float, RealVector | None]]:
    """Soft max (upper) or negated soft min (lower) of f over ``v = ±exp(u)``."""
    sign = 1.0 if side is Side.UPPER else -1.0
    s = profile.sigma2

    def fun(u: RealVector) -> tuple[float, RealVector | None]:
        v = sign * np.exp(u)
        if not np.all(np.isfinite(v)) or _violation(profile, v, side) is not None:
            return np.inf, None
        f = _objective(profile, v)
        scaled = sign * f / temperature
        weights = softmax(scaled)
        slack = 1.0 - s.T @ v
        grad_v = -weights / v**2 + s @ ((s.T @ weights) / slack**2)
        return float(temperature * logsumexp(scaled)), sign * grad_v * v

    return fun


def _result(
    profile: VarianceProfile,
    v: RealVector,
    side: Side,
    iterations: int,
    notes: list[str],
    value: float | None = None,
) -> EdgeResult:
    f = _objective(profile, v)
    bound = float(np.max(f) if side is Side.UPPER else np.min(f))
    escape = bool(np.max(np.abs(v)) > 1e4 * max(1, profile.d))
    if escape:
        notes = [*notes, "certificate entries are large; optimum may lie at infinity"]
    return EdgeResult(
        value=bound if value is None else value,
        certificate=np.diag(v).astype(np.complex128),
        certificate_value=bound,
        flatness_residual=float(np.ptp(f)),
        iterations=iterations,
        method=Method.DIAGONAL,
        side=side,
        boundary_escape=escape,
        notes=notes,
    )


def _no_noise(profile: VarianceProfile, side: Side) -> EdgeResult:
    sign = 1.0 if side is Side.UPPER else -1.0
    v = np.full(profile.d, sign * UNBOUNDED_CERTIFICATE)
    value = float(np.max(profile.bdiag) if side is Side.UPPER else np.min(profile.bdiag))
    result = _result(profile, v, side, 0, ["all variances vanish"], value=value)
    result.boundary_escape = True
    return result


def _smoothing_stage(
    profile: VarianceProfile,
    side: Side,
    opts: SolverOptions,
    scale: float,
) -> tuple[RealVector, int, bool]:
    """Quasi-Newton on log|v| with a shrinking smoothing temperature."""
    if side is Side.UPPER:
        t0 = 0.5 / max(1.0, float(np.max(profile.sigma2.sum(axis=0))))
        u = np.full(profile.d, np.log(t0))
    else:
        u = np.zeros(profile.d)
    sign = 1.0 if side is Side.UPPER else -1.0
    temperature = INITIAL_TEMPERATURE * scale
    used = 0
    log_d = max(np.log(profile.d), 1.0)
    per_stage = stage_budget(
        opts.max_barrier_iter,
        temperature * log_d,
        opts.tol * scale,
        opts.barrier_factor,
    )
    while used < opts.max_barrier_iter:
        run = quasi_newton_minimize(
            _smoothed(profile, side, temperature),
            u,
            gtol=temperature,
            max_iter=min(per_stage, opts.max_barrier_iter - used),
        )
        used += max(run.iterations, 1)
        u = run.x
        if temperature * log_d <= opts.tol * scale:
            return sign * np.exp(u), used, True
        temperature *= opts.barrier_factor
    return sign * np.exp(u), used, False


def _bracket_inner(profile: VarianceProfile, side: Side) -> float:
    """Extreme entry of b + σ²·1, a rigorous bound on the edge from inside."""
    mean = profile.bdiag + profile.sigma2.sum(axis=1)
    return float(np.max(mean) if side is Side.UPPER else np.min(mean))


def _diag_edge(profile: VarianceProfile, side: Side, opts: SolverOptions) -> EdgeResult:
    if not np.any(profile.sigma2):
        return _no_noise(profile, side).check_flatness(opts.flat_tol)
    row_load = float(np.max(profile.sigma2.sum(axis=1)))
    scale = max(1.0, float(np.max(np.abs(profile.bdiag))) + row_load)
    v, used, closed = _smoothing_stage(profile, side, opts, scale)
    result = _result(profile, v, side, used, ["log-parametrized quasi-Newton"])

    eq = DiagonalEquation(profile)
    try:
        inner = _bracket_inner(profile, side)
        bracket = locate_edge(eq, side, inner, result.certificate_value, opts)
    except BracketNotFoundError as e:
        logger.debug("Diagonal %s polish skipped: %s", side.value, e)
    else:
        v_fp = np.real(np.diagonal(bracket.solution.z)).copy()
        polished = _result(
            profile,
            v_fp,
            side,
            used + bracket.iterations,
            ["polished on f(v) = λ·1"],
            value=bracket.outside,
        )
        slack = 2 * opts.tol * max(1.0, abs(polished.value))
        better = (
            polished.certificate_value < result.certificate_value + slack
            if side is Side.UPPER
            else polished.certificate_value > result.certificate_value - slack
        )
        if better:
            result, closed = polished, True
    if not closed:
        msg = f"diagonal {side.value} solver exhausted {opts.max_barrier_iter} iterations"
        raise MaxIterationsError(result, msg)
    result.check_flatness(opts.flat_tol)
    logger.info("Diagonal %s edge %.12g", side.value, result.value)
    return result


def diag_upper_edge(profile: VarianceProfile, opts: SolverOptions | None = None) -> EdgeResult:
    """Upper edge of a variance-profile model over diagonal certificates."""
    return _diag_edge(profile, Side.UPPER, opts or SolverOptions())


def diag_lower_edge(profile: VarianceProfile, opts: SolverOptions | None = None) -> EdgeResult:
    """Lower edge of a variance-profile model over diagonal certificates."""
    return _diag_edge(profile, Side.LOWER, opts or SolverOptions())
