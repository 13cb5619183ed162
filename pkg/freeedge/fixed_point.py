"""Damped fixed-point and Newton solver for resolvent-type matrix equations.

An equation is described by a map ``h`` on square matrices; its solution at
``λ`` is a ``z`` with ``h(z) = λ·1``, reached through the update
``z ← (1−ω)z + ω·T(z)`` where ``T`` is the resolvent form of the equation.
On the real axis the sought solution lies in a cone (positive or negative
definite) and the update is order preserving, so the iteration either converges
monotonically or leaves the cone; leaving the cone classifies ``λ`` as inside
the spectrum. ``locate_edge`` turns that classification into a bisection for
the spectral edge.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as la

from .config import SolverDefaults, SolverOptions, Side
from .exceptions import BracketNotFoundError, SingularBlockError, SingularIterateError
from .linalg import frobenius, inverse, is_positive_definite, solve_linear, symmetrize

if TYPE_CHECKING:
    from .linalg import ComplexMatrix

logger = logging.getLogger(__name__)

MIN_DAMPING = 2.0**-10
MAX_BACKTRACKS = 30


class FixedPointEquation(ABC):
    """Equation ``h(z) = λ·1`` on d×d matrices."""

    dim: int

    @property
    @abstractmethod
    def base(self) -> ComplexMatrix:
        """Constant term of ``h`` (the shift b or Lehner's a₀)."""

    @abstractmethod
    def h(self, z: ComplexMatrix) -> ComplexMatrix:
        """Evaluate the left-hand side."""

    @abstractmethod
    def update(self, z: ComplexMatrix, lam: complex) -> ComplexMatrix:
        """Resolvent form ``T(z)``, whose fixed points solve the equation."""

    @abstractmethod
    def jacobian(self, z: ComplexMatrix) -> np.ndarray:
        """Derivative of ``h`` on row-major vectorizations."""

    @abstractmethod
    def in_cone(self, z: ComplexMatrix, side: Side) -> bool:
        """Whether ``z`` lies in the open feasible cone of ``side``."""

    def newton_direction(self, z: ComplexMatrix, lam: complex) -> ComplexMatrix:
        """Solve ``J·δ = −(h(z) − λ·1)`` on the vectorization."""
        n = self.dim
        rhs = -(self.h(z) - lam * np.eye(n, dtype=np.complex128)).reshape(-1)
        return solve_linear(self.jacobian(z), rhs).reshape(n, n)

    def in_half_plane(self, z: ComplexMatrix, lam: complex) -> bool:
        """Whether Im z has the sign opposite to Im λ (always true for real λ)."""
        if np.imag(lam) == 0:
            return True
        im = (z - z.conj().T) / 2j
        return is_positive_definite(-np.sign(np.imag(lam)) * im)

    def start(self, lam: complex) -> ComplexMatrix:
        """Cold start ``(λ·1 − base)⁻¹``, the solution with the noise term dropped."""
        shifted = lam * np.eye(self.dim, dtype=np.complex128) - self.base
        return inverse(shifted, what="λ·1 − shift", error=SingularIterateError)

    def residual(self, z: ComplexMatrix, lam: complex) -> float:
        """Frobenius norm of ``h(z) − λ·1``."""
        return frobenius(self.h(z) - lam * np.eye(self.dim, dtype=np.complex128))


@dataclass
class FixedPointSolution:
    """Outcome of one fixed-point solve."""

    lam: complex
    z: ComplexMatrix
    residual: float
    iterations: int
    converged: bool
    reason: str = ""


def _newton_step(
    eq: FixedPointEquation,
    z: ComplexMatrix,
    lam: complex,
    res: float,
    side: Side | None,
) -> tuple[ComplexMatrix, float] | None:
    """One backtracking Newton step on the vectorized residual, or None if it cannot reduce it."""
    try:
        delta = eq.newton_direction(z, lam)
    except (la.LinAlgError, ValueError, SingularBlockError, SingularIterateError):
        return None
    real = np.imag(lam) == 0
    if real:
        delta = symmetrize(delta)
    step = 1.0
    for _ in range(MAX_BACKTRACKS):
        trial = z + step * delta
        if (side is None or eq.in_cone(trial, side)) and eq.in_half_plane(trial, lam):
            try:
                trial_res = eq.residual(trial, lam)
            except (SingularBlockError, SingularIterateError):
                trial_res = np.inf
            if trial_res < (1 - 1e-4 * step) * res:
                return trial, trial_res
        step /= 2
    return None


def solve_fixed_point(
    eq: FixedPointEquation,
    lam: complex,
    opts: SolverOptions,
    *,
    side: Side | None = None,
    z0: ComplexMatrix | None = None,
    max_iter: int | None = None,
) -> FixedPointSolution:
    """Solve ``h(z) = λ·1`` by damped iteration with Newton polish.

    With ``side`` set the iterate must stay in that side's cone; leaving it, a
    stalled Newton polish or an exhausted Newton budget ends the solve
    unconverged, which callers read as "λ lies inside the spectrum". Off the
    real axis Newton steps must keep Im z opposite in sign to Im λ. A warm
    start from ``z0`` tries Newton first and keeps using it while it succeeds.

    Raises:
        SingularIterateError: if ``T(z)`` needs a singular inverse and no
            side is requested.

    """
    budget = opts.max_iter if max_iter is None else max_iter
    scale = max(1.0, abs(lam))
    target = opts.fp_tol * scale
    real = np.imag(lam) == 0
    z = eq.start(lam) if z0 is None else np.array(z0, dtype=np.complex128)
    if real:
        z = symmetrize(z)
    try:
        res = eq.residual(z, lam)
    except (SingularBlockError, SingularIterateError) as e:
        if side is None:
            raise SingularIterateError(str(e)) from e
        return FixedPointSolution(lam, z, np.inf, 0, converged=False, reason="singular start")

    omega = 1.0
    newton_run = 0
    chained = z0 is not None
    for it in range(1, budget + 1):
        if res <= target:
            if side is not None and not eq.in_cone(z, side):
                return FixedPointSolution(lam, z, res, it, converged=False, reason="left cone")
            return FixedPointSolution(lam, z, res, it, converged=True)

        near = res < opts.newton_switch * scale
        if newton_run >= opts.newton_max_iter:
            if near and side is not None:
                return FixedPointSolution(lam, z, res, it, converged=False, reason="newton budget")
        elif near or chained or it % opts.newton_every == 0:
            step = _newton_step(eq, z, lam, res, side)
            if step is not None:
                z, res = step
                newton_run += 1
                continue
            chained = False
            if near and side is not None:
                return FixedPointSolution(lam, z, res, it, converged=False, reason="newton stall")

        try:
            target_z = eq.update(z, lam)
        except (SingularBlockError, SingularIterateError) as e:
            if side is None:
                raise SingularIterateError(str(e)) from e
            return FixedPointSolution(lam, z, res, it, converged=False, reason="singular update")
        if real:
            target_z = symmetrize(target_z)
        if side is not None and not eq.in_cone(target_z, side):
            return FixedPointSolution(lam, z, res, it, converged=False, reason="left cone")
        z_new = (1 - omega) * z + omega * target_z
        try:
            res_new = eq.residual(z_new, lam)
        except (SingularBlockError, SingularIterateError) as e:
            if side is None:
                raise SingularIterateError(str(e)) from e
            return FixedPointSolution(lam, z, res, it, converged=False, reason="singular iterate")
        if res_new > res:
            omega = max(omega / 2, MIN_DAMPING)
        z, res = z_new, res_new

    return FixedPointSolution(lam, z, res, budget, converged=False, reason="max iterations")


@dataclass
class EdgeBracket:
    """Bisection outcome: ``outside`` carries a converged certificate, ``inside`` does not."""

    inside: float
    outside: float
    solution: FixedPointSolution
    evaluations: int
    iterations: int


def locate_edge(
    eq: FixedPointEquation,
    side: Side,
    inner: float,
    outer: float,
    opts: SolverOptions,
) -> EdgeBracket:
    """Bisect for the edge between ``inner`` (a known bound) and ``outer``.

    ``outer`` is pushed away from ``inner`` geometrically until the signed fixed
    point converges there. Upper bisection warm-starts from the solution at the
    current outside point, which lies below every solution closer to the edge;
    the lower side mirrors this from above. Every solve here is capped at
    ``EDGE_SOLVE_ITER`` iterations and a capped solve counts as inside, so the
    bracket stops at the relative width ``opts.bisection_width``.

    Raises:
        BracketNotFoundError: if no outside point is found.

    """
    direction = 1.0 if side is Side.UPPER else -1.0
    cap = min(opts.max_iter, SolverDefaults.EDGE_SOLVE_ITER)
    evaluations = 0
    iterations = 0
    span = max(direction * (outer - inner), 1e-12 * max(1.0, abs(inner)))
    solution = None
    for expansion in range(SolverDefaults.BRACKET_EXPANSIONS):
        candidate = inner + direction * span * 2.0**expansion
        attempt = solve_fixed_point(eq, candidate, opts, side=side, max_iter=cap)
        evaluations += 1
        iterations += attempt.iterations
        if attempt.converged:
            outer, solution = candidate, attempt
            break
        logger.debug("No %s solution at λ=%.6g (%s)", side.value, candidate, attempt.reason)
    if solution is None:
        msg = f"no converged {side.value} fixed point beyond λ={inner:.6g}"
        raise BracketNotFoundError(msg)

    width = opts.bisection_width
    while abs(outer - inner) > width * max(1.0, abs(outer)):
        mid = 0.5 * (inner + outer)
        attempt = solve_fixed_point(eq, mid, opts, side=side, z0=solution.z, max_iter=cap)
        evaluations += 1
        iterations += attempt.iterations
        if attempt.converged:
            outer, solution = mid, attempt
        else:
            inner = mid
    logger.debug(
        "%s edge bracket [%.12g, %.12g] after %d solves, %d iterations",
        side.value,
        min(inner, outer),
        max(inner, outer),
        evaluations,
        iterations,
    )
    return EdgeBracket(inner, outer, solution, evaluations, iterations)
