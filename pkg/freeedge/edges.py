"""Variational edge solvers.

The upper edge is ``inf λ_max(h(z))`` over ``z ≻ 0, Φ*(z) ≺ 1`` and the lower
edge is ``sup λ_min(h(z))`` over ``z ≺ 0``, where
``h(z) = b + z⁻¹ + Φ((1 − Φ*(z))⁻¹)``. Every feasible ``z`` therefore certifies
a one-sided bound, which is what ``EdgeResult.certificate_value`` reports.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as la

from .barrier import quasi_newton_minimize, smooth_max, smooth_min, stage_budget
from .cauchy import (
    MatrixDysonEquation,
    SemicircleEquation,
    bracket_endpoints,
    result_from_bracket,
    shift_only_result,
)
from .config import Method, Side, SolverOptions
from .exceptions import (
    BracketNotFoundError,
    InfeasibleError,
    MaxIterationsError,
    ModelError,
    ShapeMismatchError,
    SingularResolventError,
    SingularZError,
)
from .fixed_point import locate_edge
from .linalg import (
    as_hermitian,
    eig_extremes,
    frobenius,
    hermitian_sqrt,
    hermitian_to_real,
    inverse,
    is_positive_definite,
    real_to_hermitian,
    symmetrize,
)
from .model import FreeModel, apply_phi, apply_phi_star, edge_bounds, validate
from .results import EdgeResult

if TYPE_CHECKING:
    from collections.abc import Callable

    from numpy.typing import ArrayLike

    from .linalg import HermitianMatrix, RealVector

logger = logging.getLogger(__name__)

__all__ = [
    "EdgeResult",
    "dilated_cross_check",
    "eval_certificate",
    "lehner_selfadjoint_max",
    "lower_edge",
    "objective_h",
    "upper_edge",
]

INITIAL_BARRIER_WEIGHT = 0.1
LOWER_POLISH_ITER = 50


def objective_h(model: FreeModel, z: ArrayLike) -> HermitianMatrix:
    """Return ``h(z) = b + z⁻¹ + Φ((1 − Φ*(z))⁻¹)``.

    Raises:
        SingularZError: if z is not invertible.
        SingularResolventError: if 1 − Φ*(z) is not invertible.

    """
    validate(model)
    zm = as_hermitian(z, name="z")
    if zm.shape != (model.d, model.d):
        raise ShapeMismatchError("z", (model.d, model.d), zm.shape)
    z_inv = inverse(zm, what="z", error=SingularZError)
    r = inverse(
        np.eye(model.m) - apply_phi_star(model, zm),
        what="1 - Φ*(z)",
        error=SingularResolventError,
    )
    return symmetrize(model.shift + z_inv + apply_phi(model, r))


def eval_certificate(model: FreeModel, z: ArrayLike, side: Side) -> float:
    """Rigorous one-sided edge bound from a feasible point.

    Raises:
        InfeasibleError: naming the violated constraint.

    """
    zm = as_hermitian(z, name="z")
    if side is Side.UPPER:
        if not is_positive_definite(zm):
            raise InfeasibleError(side.value, "z must be positive definite")
        if not is_positive_definite(symmetrize(np.eye(model.m) - apply_phi_star(model, zm))):
            raise InfeasibleError(side.value, "Φ*(z) must be below the identity")
        return eig_extremes(objective_h(model, zm))[1]
    if not is_positive_definite(-zm):
        raise InfeasibleError(side.value, "z must be negative definite")
    return eig_extremes(objective_h(model, zm))[0]


def _cholesky_logdet(m: np.ndarray) -> float | None:
    """``log det`` of a positive definite matrix, or None outside the cone."""
    try:
        factor = la.cholesky(m, lower=True)
    except la.LinAlgError:
        return None
    return float(2 * np.sum(np.log(np.real(np.diag(factor)))))


def _h_parts(model: FreeModel, z: HermitianMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    z_inv = la.inv(z)
    r = la.inv(np.eye(model.m) - apply_phi_star(model, z))
    return symmetrize(model.shift + z_inv + apply_phi(model, r)), z_inv, r


def _spectral_gradient(
    model: FreeModel,
    p: np.ndarray,
    z_inv: np.ndarray,
    r: np.ndarray,
) -> np.ndarray:
    """Gradient matrix of ``z ↦ tr(P·h(z))`` for fixed P."""
    return -z_inv @ p @ z_inv + apply_phi(model, r @ apply_phi_star(model, p) @ r)


def _barrier_objective(
    model: FreeModel,
    mu: float,
) -> Callable[[RealVector], tuple[float, RealVector | None]]:
    """Smoothed ``λ_max(h(z))`` plus the log barrier of the upper cone, in real coordinates."""
    eye_m = np.eye(model.m)

    def fun(theta: RealVector) -> tuple[float, RealVector | None]:
        z = real_to_hermitian(theta, model.d)
        slack = symmetrize(eye_m - apply_phi_star(model, z))
        logdet_z = _cholesky_logdet(z)
        logdet_slack = _cholesky_logdet(slack)
        if logdet_z is None or logdet_slack is None:
            return np.inf, None
        hz, z_inv, r = _h_parts(model, z)
        value, p = smooth_max(hz, mu)
        grad = _spectral_gradient(model, p, z_inv, r) - mu * (z_inv - apply_phi(model, r))
        return value - mu * (logdet_z + logdet_slack), hermitian_to_real(symmetrize(grad))

    return fun


def _softmin_objective(
    model: FreeModel,
    temperature: float,
) -> Callable[[RealVector], tuple[float, RealVector | None]]:
    """Negated smoothed ``λ_min(h(z))`` on ``z ≺ 0``, in real coordinates."""

    def fun(theta: RealVector) -> tuple[float, RealVector | None]:
        z = real_to_hermitian(theta, model.d)
        if _cholesky_logdet(-z) is None:
            return np.inf, None
        hz, z_inv, r = _h_parts(model, z)
        value, p = smooth_min(hz, temperature)
        grad = _spectral_gradient(model, p, z_inv, r)
        return -value, -hermitian_to_real(symmetrize(grad))

    return fun


def _try_certificate(model: FreeModel, z: HermitianMatrix, side: Side) -> float | None:
    """Certificate bound, or None when z sits within the positivity margin of the cone boundary."""
    try:
        return eval_certificate(model, z, side)
    except (InfeasibleError, SingularZError, SingularResolventError):
        return None


def _certified(
    model: FreeModel,
    z: HermitianMatrix,
    side: Side,
    iterations: int,
    notes: list[str],
) -> EdgeResult:
    """EdgeResult whose value is the certificate's own bound."""
    hz = objective_h(model, z)
    lo, hi = eig_extremes(hz)
    value = hi if side is Side.UPPER else lo
    return EdgeResult(
        value=value,
        certificate=z,
        certificate_value=value,
        flatness_residual=frobenius(hz - value * np.eye(model.d)),
        iterations=iterations,
        method=Method.VARIATIONAL,
        side=side,
        notes=notes,
    )


def _barrier_stage(model: FreeModel, opts: SolverOptions, scale: float) -> tuple[EdgeResult, bool]:
    """Run the barrier schedule; returns the best certificate and whether the gap closed."""
    phi_star_one = apply_phi_star(model, np.eye(model.d))
    t0 = 0.5 / max(1.0, eig_extremes(symmetrize(phi_star_one))[1])
    theta = hermitian_to_real(t0 * np.eye(model.d, dtype=np.complex128))
    gap_factor = np.log(model.d) + model.d + model.m
    mu = INITIAL_BARRIER_WEIGHT * scale
    used = 0
    best_z = real_to_hermitian(theta, model.d)
    best_value = eval_certificate(model, best_z, Side.UPPER)
    closed = False
    per_stage = stage_budget(
        opts.max_barrier_iter,
        mu * gap_factor,
        opts.tol * scale,
        opts.barrier_factor,
    )
    while used < opts.max_barrier_iter:
        run = quasi_newton_minimize(
            _barrier_objective(model, mu),
            theta,
            gtol=mu,
            max_iter=min(per_stage, opts.max_barrier_iter - used),
        )
        used += max(run.iterations, 1)
        theta = run.x
        z = real_to_hermitian(theta, model.d)
        value = _try_certificate(model, z, Side.UPPER)
        if value is not None and value < best_value:
            best_z, best_value = z, value
        logger.debug("Barrier μ=%.3e: best bound %.12g after %d iterations", mu, best_value, used)
        if mu * gap_factor <= opts.tol * scale:
            closed = True
            break
        mu *= opts.barrier_factor
    result = _certified(model, best_z, Side.UPPER, used, [f"barrier weight reached {mu:.3e}"])
    return result, closed


def upper_edge(model: FreeModel, opts: SolverOptions | None = None) -> EdgeResult:
    """Upper edge of xx* + b⊗1 by the barrier method, polished on the flat fixed point.

    Raises:
        MaxIterationsError: if the barrier budget runs out and the polish fails;
            carries the best rigorous bound.

    """
    opts = opts or SolverOptions()
    validate(model)
    if model.is_shift_only:
        result = shift_only_result(model, Side.UPPER, Method.VARIATIONAL)
        return result.check_flatness(opts.flat_tol)
    (inner, upper_hi), _ = edge_bounds(model)
    scale = max(1.0, abs(upper_hi))
    result, closed = _barrier_stage(model, opts, scale)

    eq = MatrixDysonEquation(model)
    try:
        bracket = locate_edge(eq, Side.UPPER, inner, result.certificate_value, opts)
    except BracketNotFoundError as e:
        logger.debug("Upper polish skipped: %s", e)
    else:
        polished = result_from_bracket(eq, bracket, Side.UPPER, Method.VARIATIONAL)
        # the bracket is tol wide, so a polish within 2·tol of the barrier bound still closes
        slack = 2 * opts.tol * max(1.0, abs(polished.value))
        if polished.certificate_value < result.certificate_value + slack:
            polished.iterations += result.iterations
            polished.notes.insert(0, "polished on h(z) = λ·1")
            result, closed = polished, True
    if not closed:
        msg = f"barrier budget of {opts.max_barrier_iter} iterations exhausted"
        raise MaxIterationsError(result, msg)
    result.check_flatness(opts.flat_tol)
    logger.info("Variational upper edge %.12g", result.value)
    return result


def _lower_ascent(
    model: FreeModel,
    z0: HermitianMatrix,
    opts: SolverOptions,
    max_iter: int,
) -> tuple[HermitianMatrix, float, int, bool]:
    """Maximize smoothed ``λ_min(h(z))`` from ``z0``; returns the certified point and bound."""
    _, (lower_lo, lower_hi) = edge_bounds(model)
    temperature = opts.tol * max(1.0, abs(lower_lo), abs(lower_hi))
    run = quasi_newton_minimize(
        _softmin_objective(model, temperature),
        hermitian_to_real(z0),
        gtol=opts.tol,
        max_iter=max_iter,
    )
    z = real_to_hermitian(run.x, model.d)
    bound = _try_certificate(model, z, Side.LOWER)
    if bound is None:
        return z0, eval_certificate(model, z0, Side.LOWER), run.iterations, False
    return z, bound, run.iterations, run.converged


def lower_edge(model: FreeModel, opts: SolverOptions | None = None) -> EdgeResult:
    """Lower edge of xx* + b⊗1 by continuation in λ, polished by direct ascent.

    Raises:
        MaxIterationsError: if no fixed point bracket exists and the ascent from
            ``z = −1`` does not converge; carries the best rigorous bound.

    """
    opts = opts or SolverOptions()
    validate(model)
    if model.is_shift_only:
        result = shift_only_result(model, Side.LOWER, Method.VARIATIONAL)
        return result.check_flatness(opts.flat_tol)
    eq = MatrixDysonEquation(model)
    try:
        inner, outer = bracket_endpoints(model, Side.LOWER)
        bracket = locate_edge(eq, Side.LOWER, inner, outer, opts)
    except BracketNotFoundError as e:
        logger.warning("Lower continuation failed (%s); ascending from z = -1", e)
        z, _, iters, converged = _lower_ascent(
            model,
            -np.eye(model.d, dtype=np.complex128),
            opts,
            opts.max_barrier_iter,
        )
        result = _certified(model, z, Side.LOWER, iters, ["direct ascent from z = -1"])
        if not converged:
            msg = f"lower ascent did not converge in {opts.max_barrier_iter} iterations"
            raise MaxIterationsError(result, msg) from e
        return result.check_flatness(opts.flat_tol)

    result = result_from_bracket(eq, bracket, Side.LOWER, Method.VARIATIONAL)
    z, bound, iters, _ = _lower_ascent(
        model,
        result.certificate,
        opts,
        min(LOWER_POLISH_ITER, opts.max_barrier_iter),
    )
    result.iterations += iters
    if bound > result.certificate_value:
        hz = objective_h(model, z)
        result.certificate = z
        result.certificate_value = bound
        result.value = max(result.value, bound)
        result.flatness_residual = frobenius(hz - result.value * np.eye(model.d))
        result.notes.append("certificate improved by direct ascent")
    result.check_flatness(opts.flat_tol)
    logger.info("Variational lower edge %.12g", result.value)
    return result


def lehner_selfadjoint_max(
    a0: ArrayLike,
    a: list[ArrayLike],
    opts: SolverOptions | None = None,
) -> EdgeResult:
    """``λ_max(a₀⊗1 + Σ aᵢ⊗sᵢ) = inf_{z≻0} λ_max(a₀ + z⁻¹ + Σ aᵢ z aᵢ)``.

    Solved on the flat set ``a₀ + z⁻¹ + Σ aᵢ z aᵢ = λ·1``, bracketed between
    ``λ_max(a₀)`` and ``λ_max(a₀) + 2‖Σ aᵢ²‖^½``.
    """
    opts = opts or SolverOptions()
    base = as_hermitian(a0, name="a0")
    coeffs = [as_hermitian(ai, name=f"a[{i}]") for i, ai in enumerate(a)]
    for i, ai in enumerate(coeffs):
        if ai.shape != base.shape:
            raise ShapeMismatchError(f"a[{i}]", base.shape, ai.shape)
    dim = base.shape[0]
    _, top = eig_extremes(base)
    square_sum = sum((ai @ ai for ai in coeffs), start=np.zeros_like(base))
    spread = 2 * np.sqrt(max(eig_extremes(symmetrize(square_sum))[1], 0.0))
    if spread == 0:
        z = 1e12 * np.eye(dim, dtype=np.complex128)
        return EdgeResult(
            value=top,
            certificate=z,
            certificate_value=top + 1e-12,
            flatness_residual=frobenius(base - top * np.eye(dim)),
            iterations=0,
            method=Method.DILATION,
            side=Side.UPPER,
            boundary_escape=True,
            notes=["no noise term: optimum approached only as z grows without bound"],
        )
    eq = SemicircleEquation(base, coeffs)
    outer = top + spread
    bracket = locate_edge(eq, Side.UPPER, top, outer + 0.25 * max(1.0, abs(outer)), opts)
    return result_from_bracket(eq, bracket, Side.UPPER, Method.DILATION)


def dilation_coefficients(
    model: FreeModel,
) -> tuple[HermitianMatrix, list[HermitianMatrix], float]:
    """Self-adjoint coefficients of the (m+2d)-dimensional linearization and the shift c used.

    Block order is (d, m, d): ``ã₀`` couples the outer blocks through
    ``a₀ = (b + c·1)^½`` and each ``ãᵢ`` couples the inner pair through ``aᵢ``.
    """
    d, m = model.d, model.m
    b = symmetrize(model.shift)
    c = max(0.0, 1.0 - eig_extremes(b)[0])
    root = hermitian_sqrt(b + c * np.eye(d))
    r = m + 2 * d
    outer = slice(d + m, r)
    a0 = np.zeros((r, r), dtype=np.complex128)
    a0[:d, outer] = root.conj().T
    a0[outer, :d] = root
    coeffs = []
    for ai in model.stacked:
        tilde = np.zeros((r, r), dtype=np.complex128)
        tilde[d : d + m, outer] = ai.conj().T
        tilde[outer, d : d + m] = ai
        coeffs.append(tilde)
    return a0, coeffs, c


def dilated_cross_check(model: FreeModel, opts: SolverOptions | None = None) -> EdgeResult:
    """Upper edge through Lehner's formula on the self-adjoint linearization.

    ``λ_max(x̃)² = λ_max(xx* + (b + c)⊗1)``, so the reported edge is the
    squared Lehner value minus the internal shift ``c``.
    """
    opts = opts or SolverOptions()
    validate(model)
    if model.is_shift_only:
        return shift_only_result(model, Side.UPPER, Method.DILATION)
    a0, coeffs, c = dilation_coefficients(model)
    lehner = lehner_selfadjoint_max(a0, coeffs, opts)
    if lehner.value < 0:
        msg = f"linearization edge {lehner.value:.6g} is negative"
        raise ModelError(msg)
    notes = [f"internal shift c = {c:.6g}", f"linearization edge {lehner.value:.12g}"]
    logger.info("Dilation upper edge %.12g", lehner.value**2 - c)
    return EdgeResult(
        value=lehner.value**2 - c,
        certificate=lehner.certificate,
        certificate_value=lehner.certificate_value**2 - c,
        flatness_residual=lehner.flatness_residual,
        iterations=lehner.iterations,
        method=Method.DILATION,
        side=Side.UPPER,
        boundary_escape=lehner.boundary_escape,
        notes=notes + lehner.notes,
    )
