"""Matrix Cauchy transform G(λ), its companion H(λ), and edge location by continuation in λ."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as la

from .config import Method, Side, SolverDefaults, SolverOptions
from .exceptions import (
    ConfigError,
    HerglotzViolationError,
    NonConvergenceError,
    SeriesDivergesError,
    SingularIterateError,
)
from .fixed_point import EdgeBracket, FixedPointEquation, locate_edge, solve_fixed_point
from .linalg import eig_extremes, frobenius, inverse, is_positive_definite, symmetrize
from .model import FreeModel, apply_phi, apply_phi_star, edge_bounds, validate, xx_norm_bound
from .results import EdgeResult

if TYPE_CHECKING:
    from .linalg import ComplexMatrix, HermitianMatrix

logger = logging.getLogger(__name__)

SHIFT_ONLY_CERTIFICATE = 1e12


@dataclass
class CauchyPoint:
    """G(λ), H(λ) and the fixed-point residual at one evaluation point."""

    lam: complex
    G: ComplexMatrix
    H: ComplexMatrix
    residual: float
    converged: bool
    iterations: int

    @property
    def sign(self) -> str:
        """Definiteness of G: ``positive``/``negative``/``indefinite`` on the real axis.

        Off the axis the sign of Im G is reported and should be opposite to the
        sign of Im λ.
        """
        if self.lam.imag == 0:
            g = symmetrize(self.G)
        else:
            g = (self.G - self.G.conj().T) / 2j
        if is_positive_definite(g):
            return "positive"
        if is_positive_definite(-g):
            return "negative"
        return "indefinite"

    @property
    def herglotz_ok(self) -> bool:
        """Whether Im λ and Im G have opposite signs (trivially true for real λ)."""
        if self.lam.imag == 0:
            return True
        expected = "negative" if self.lam.imag > 0 else "positive"
        return self.sign == expected


class MatrixDysonEquation(FixedPointEquation):
    """``h(z) = b + z⁻¹ + Φ((1 − Φ*(z))⁻¹)``."""

    def __init__(self, model: FreeModel) -> None:
        """Bind the equation to a validated model."""
        validate(model)
        self.model = model
        self.dim = model.d
        self._eye_m = np.eye(model.m, dtype=np.complex128)

    @property
    def base(self) -> ComplexMatrix:
        """Shift b."""
        return np.asarray(self.model.shift)

    def resolvent(self, z: ComplexMatrix) -> ComplexMatrix:
        """``(1 − Φ*(z))⁻¹``, which equals H at a solution."""
        return inverse(
            self._eye_m - apply_phi_star(self.model, z),
            what="1 - Φ*(z)",
            error=SingularIterateError,
        )

    def h(self, z: ComplexMatrix) -> ComplexMatrix:
        """Left-hand side of the Cauchy transform equation."""
        z_inv = inverse(z, what="z", error=SingularIterateError)
        return self.base + z_inv + apply_phi(self.model, self.resolvent(z))

    def update(self, z: ComplexMatrix, lam: complex) -> ComplexMatrix:
        """``(λ·1 − b − Φ((1 − Φ*(z))⁻¹))⁻¹``."""
        eye = np.eye(self.dim, dtype=np.complex128)
        return inverse(
            lam * eye - self.base - apply_phi(self.model, self.resolvent(z)),
            what="λ·1 - b - Φ(H)",
            error=SingularIterateError,
        )

    def jacobian(self, z: ComplexMatrix) -> np.ndarray:
        """``−z⁻¹ ⊗ z⁻ᵀ + K_Φ (R ⊗ Rᵀ) K_Φ*`` with ``R = (1 − Φ*(z))⁻¹``."""
        z_inv = inverse(z, what="z", error=SingularIterateError)
        r = self.resolvent(z)
        inner = self.model.phi_kron @ np.kron(r, r.T) @ self.model.phi_star_kron
        return inner - np.kron(z_inv, z_inv.T)

    def in_cone(self, z: ComplexMatrix, side: Side) -> bool:
        """Upper: z ≻ 0 and Φ*(z) ≺ 1. Lower: z ≺ 0."""
        if side is Side.LOWER:
            return is_positive_definite(-symmetrize(z))
        return is_positive_definite(symmetrize(z)) and is_positive_definite(
            symmetrize(self._eye_m - apply_phi_star(self.model, z)),
        )


class SemicircleEquation(FixedPointEquation):
    """Self-adjoint operator-valued semicircle: ``f(z) = a₀ + z⁻¹ + Σ aᵢ z aᵢ``."""

    def __init__(self, a0: HermitianMatrix, coeffs: list[HermitianMatrix]) -> None:
        """Store Hermitian coefficients of equal dimension."""
        self.a0 = np.asarray(a0, dtype=np.complex128)
        self.dim = self.a0.shape[0]
        if coeffs:
            self.stacked = np.stack([np.asarray(a, dtype=np.complex128) for a in coeffs])
        else:
            self.stacked = np.zeros((0, self.dim, self.dim), dtype=np.complex128)
        self._kron = sum(
            (np.kron(a, a.T) for a in self.stacked),
            start=np.zeros((self.dim**2, self.dim**2), dtype=np.complex128),
        )

    @property
    def base(self) -> ComplexMatrix:
        """Constant coefficient a₀."""
        return self.a0

    def covariance(self, z: ComplexMatrix) -> ComplexMatrix:
        """``Σ aᵢ z aᵢ``."""
        a = self.stacked
        return np.einsum("nij,jk,nkl->il", a, z, a)

    def h(self, z: ComplexMatrix) -> ComplexMatrix:
        """Left-hand side of the semicircle equation."""
        return self.a0 + inverse(z, what="z", error=SingularIterateError) + self.covariance(z)

    def update(self, z: ComplexMatrix, lam: complex) -> ComplexMatrix:
        """``(λ·1 − a₀ − Σ aᵢ z aᵢ)⁻¹``."""
        eye = np.eye(self.dim, dtype=np.complex128)
        return inverse(
            lam * eye - self.a0 - self.covariance(z),
            what="λ·1 - a0 - Σ a z a",
            error=SingularIterateError,
        )

    def jacobian(self, z: ComplexMatrix) -> np.ndarray:
        """``−z⁻¹ ⊗ z⁻ᵀ + Σ aᵢ ⊗ aᵢᵀ``."""
        z_inv = inverse(z, what="z", error=SingularIterateError)
        return self._kron - np.kron(z_inv, z_inv.T)

    def in_cone(self, z: ComplexMatrix, side: Side) -> bool:
        """Upper: z ≻ 0. Lower: z ≺ 0."""
        zs = symmetrize(z)
        return is_positive_definite(zs if side is Side.UPPER else -zs)


def continuation_path(model: FreeModel, lam: complex) -> list[complex]:
    """Points λ + iη with η shrinking geometrically from the model's spectral scale to Im λ.

    Real λ needs no path. Far from the axis the damped iteration converges fast
    and each later solve warm-starts on the Herglotz branch.
    """
    lam = complex(lam)
    eta = abs(lam.imag)
    if eta == 0:
        return [lam]
    sign = np.sign(lam.imag)
    (_, upper_hi), (lower_lo, _) = edge_bounds(model)
    height = max(1.0, upper_hi - lower_lo, abs(lam))
    path = []
    while height > eta:
        path.append(complex(lam.real, sign * height))
        height *= SolverDefaults.CONTINUATION_RATIO
    return [*path, lam]


def _real_cone(eq: MatrixDysonEquation, lam: complex) -> Side | None:
    """Cone holding G at a real λ: the one containing the cold start ``(λ − b)⁻¹``, if any."""
    if lam.imag != 0:
        return None
    start = symmetrize(eq.start(lam))
    if is_positive_definite(start):
        return Side.UPPER
    if is_positive_definite(-start):
        return Side.LOWER
    return None


def solve_G(model: FreeModel, lam: complex, opts: SolverOptions | None = None) -> CauchyPoint:
    """Solve ``h(G) = λ·1`` for the matrix Cauchy transform at ``λ``.

    Off the real axis the solve follows ``continuation_path`` down to Im λ. On
    it the iterate is held in the cone of the cold start, so a real λ inside
    the spectrum fails to converge rather than landing on another real root.

    Raises:
        NonConvergenceError: if the iteration budget runs out (λ likely inside
            the spectrum).
        SingularIterateError: if an iterate makes a required inverse singular.
        HerglotzViolationError: if a converged G has the wrong sign of Im G.

    """
    opts = opts or SolverOptions()
    lam = complex(lam)
    eq = MatrixDysonEquation(model)
    side = _real_cone(eq, lam)
    iterations = 0
    z = None
    for step in continuation_path(model, lam):
        solution = solve_fixed_point(eq, step, opts, side=side, z0=z)
        iterations += solution.iterations
        if not solution.converged:
            break
        z = solution.z
    if not solution.converged:
        msg = (
            f"fixed point at λ={solution.lam:.6g} did not converge after {iterations} iterations "
            f"(residual {solution.residual:.3e}); λ is likely inside the spectrum"
        )
        raise NonConvergenceError(msg)
    g = symmetrize(solution.z) if lam.imag == 0 else solution.z
    point = CauchyPoint(
        lam=lam,
        G=g,
        H=eq.resolvent(g),
        residual=eq.residual(g, lam),
        converged=True,
        iterations=iterations,
    )
    if not point.herglotz_ok:
        msg = f"Im G(λ) at λ={lam:.6g} is {point.sign}, violating the Herglotz sign"
        raise HerglotzViolationError(msg)
    logger.debug("G(%s) converged in %d iterations", lam, iterations)
    return point


def series_G(
    model: FreeModel,
    lam: complex,
    order: int,
    *,
    with_h: bool = False,
) -> ComplexMatrix | tuple[ComplexMatrix, ComplexMatrix]:
    """Truncated moment expansion ``G ≈ g·Σ_{k≤order} C_k`` with ``g = (λ − b)⁻¹``.

    ``C_k`` and ``D_k`` follow the coupled recursions

        C_{k+1} = Φ(1) g C_k + Σ_{l<k} Φ(D_l) g C_{k−1−l}
        D_k     = Φ*(g C_k) + Σ_{l<k} Φ*(g C_l) D_{k−1−l}

    from ``C_0 = 1``; with ``with_h`` the partial sum ``1 + Σ_{k<order} D_k``
    of H is returned too.

    Raises:
        SeriesDivergesError: unless ``‖g‖·(‖Φ(1)‖^½ + ‖Φ*(1)‖^½)² < 1``.
        ConfigError: if ``order`` is negative or above the cap.

    """
    validate(model)
    if not 0 <= order <= SolverDefaults.SERIES_ORDER_CAP:
        msg = f"series order must lie in [0, {SolverDefaults.SERIES_ORDER_CAP}], got {order}"
        raise ConfigError(msg)
    lam = complex(lam)
    eye_d = np.eye(model.d, dtype=np.complex128)
    eye_m = np.eye(model.m, dtype=np.complex128)
    g = inverse(lam * eye_d - model.shift, what="λ·1 - b", error=SeriesDivergesError)
    if not model.is_shift_only:
        ratio = float(la.norm(g, 2)) * xx_norm_bound(model)
        if ratio >= 1:
            msg = f"‖(λ-b)⁻¹‖·‖xx*‖ bound is {ratio:.3g} >= 1 at λ={lam:.6g}"
            raise SeriesDivergesError(msg)

    phi_one = apply_phi(model, eye_m)
    c_terms = [eye_d]
    gc_terms: list[ComplexMatrix] = []
    phi_star_gc: list[ComplexMatrix] = []
    d_terms: list[ComplexMatrix] = []
    phi_d: list[ComplexMatrix] = []
    for k in range(order):
        gc_terms.append(g @ c_terms[k])
        phi_star_gc.append(apply_phi_star(model, gc_terms[k]))
        nxt = phi_one @ gc_terms[k]
        for ell in range(k):
            nxt = nxt + phi_d[ell] @ gc_terms[k - 1 - ell]
        d_k = phi_star_gc[k]
        for ell in range(k):
            d_k = d_k + phi_star_gc[ell] @ d_terms[k - 1 - ell]
        d_terms.append(d_k)
        phi_d.append(apply_phi(model, d_k))
        c_terms.append(nxt)
    total = g @ sum(c_terms[1:], start=c_terms[0])
    if with_h:
        return total, sum(d_terms, start=eye_m)
    return total


def shift_only_result(model: FreeModel, side: Side, method: Method) -> EdgeResult:
    """Closed form for x = 0: the edge is an extreme eigenvalue of b, approached as |z| → ∞."""
    b = symmetrize(model.shift)
    b_min, b_max = eig_extremes(b)
    sign = 1.0 if side is Side.UPPER else -1.0
    z = sign * SHIFT_ONLY_CERTIFICATE * np.eye(model.d, dtype=np.complex128)
    hz = b + np.eye(model.d) / (sign * SHIFT_ONLY_CERTIFICATE)
    value = b_max if side is Side.UPPER else b_min
    lo, hi = eig_extremes(symmetrize(hz))
    return EdgeResult(
        value=value,
        certificate=z,
        certificate_value=hi if side is Side.UPPER else lo,
        flatness_residual=frobenius(hz - value * np.eye(model.d)),
        iterations=0,
        method=method,
        side=side,
        boundary_escape=True,
        notes=["x = 0: optimum approached only as the certificate grows without bound"],
    )


def bracket_endpoints(model: FreeModel, side: Side) -> tuple[float, float]:
    """``(inner, outer)`` for ``locate_edge``: a rigorous bound and a point beyond the edge."""
    (upper_lo, upper_hi), (lower_lo, lower_hi) = edge_bounds(model)
    if side is Side.UPPER:
        return upper_lo, upper_hi + 0.25 * max(1.0, abs(upper_hi))
    return lower_hi, lower_lo - max(1.0, lower_hi - lower_lo)


def result_from_bracket(
    eq: FixedPointEquation,
    bracket: EdgeBracket,
    side: Side,
    method: Method,
) -> EdgeResult:
    """Package the outside solution of a bracket as a certified edge."""
    z = symmetrize(bracket.solution.z)
    hz = symmetrize(eq.h(z))
    lo, hi = eig_extremes(hz)
    value = bracket.outside
    escape = frobenius(z) > SolverDefaults.ESCAPE_NORM * max(1, eq.dim)
    notes = [
        f"edge bracketed in [{min(bracket.inside, value):.12g}, {max(bracket.inside, value):.12g}]",
    ]
    if escape:
        notes.append("certificate norm is large; optimum may lie on the cone boundary")
    return EdgeResult(
        value=value,
        certificate=z,
        certificate_value=hi if side is Side.UPPER else lo,
        flatness_residual=frobenius(hz - value * np.eye(eq.dim)),
        iterations=bracket.iterations,
        method=method,
        side=side,
        boundary_escape=escape,
        notes=notes,
    )


def edge_from_cauchy(model: FreeModel, side: Side, opts: SolverOptions | None = None) -> EdgeResult:
    """Locate an edge as the end of the λ-range where the signed fixed point exists.

    Raises:
        BracketNotFoundError: if no converged point is found beyond the a-priori bound.

    """
    opts = opts or SolverOptions()
    validate(model)
    if model.is_shift_only:
        return shift_only_result(model, side, Method.CAUCHY).check_flatness(opts.flat_tol)
    eq = MatrixDysonEquation(model)
    inner, outer = bracket_endpoints(model, side)
    bracket = locate_edge(eq, side, inner, outer, opts)
    logger.info(
        "Cauchy %s edge %.12g (%d solves)",
        side.value,
        bracket.outside,
        bracket.evaluations,
    )
    return result_from_bracket(eq, bracket, side, Method.CAUCHY).check_flatness(opts.flat_tol)
