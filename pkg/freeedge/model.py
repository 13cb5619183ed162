"""Free operator x = Σ aᵢ⊗sᵢ with shift b, and the completely positive maps Φ, Φ*."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from .config import Tolerances
from .exceptions import (
    ModelError,
    NegativeVarianceError,
    NonFiniteError,
    NotHermitianError,
    ShapeMismatchError,
)
from .linalg import as_hermitian, as_matrix, asymmetry, eig_extremes, symmetrize

if TYPE_CHECKING:
    from numpy.typing import ArrayLike

    from .linalg import ComplexMatrix, HermitianMatrix, RealVector


@dataclass(frozen=True)
class FreeModel:
    """Coefficients a₁..aₙ ∈ ℂ^{d×m} and Hermitian shift b ∈ ℂ^{d×d}.

    Construction stores the data as given; call :func:`validate` (every solver
    does) before relying on the shape and Hermiticity invariants.
    """

    d: int
    m: int
    coeffs: tuple[ComplexMatrix, ...]
    shift: HermitianMatrix

    @classmethod
    def build(
        cls,
        coeffs: list[ArrayLike],
        shift: ArrayLike,
        *,
        m: int | None = None,
    ) -> FreeModel:
        """Create and validate a model, inferring d from the shift and m from the coefficients.

        ``m`` is required when there are no coefficients (x = 0).
        """
        b = as_hermitian(shift, name="shift")
        mats = tuple(as_matrix(a, name=f"coeffs[{i}]") for i, a in enumerate(coeffs))
        if m is None:
            if not mats:
                msg = "cannot infer m without coefficients; pass m explicitly"
                raise ModelError(msg)
            m = mats[0].shape[1]
        model = cls(d=b.shape[0], m=m, coeffs=mats, shift=b)
        validate(model)
        return model

    @property
    def n(self) -> int:
        """Number of free semicircular variables."""
        return len(self.coeffs)

    @cached_property
    def stacked(self) -> np.ndarray:
        """Coefficients as an (n, d, m) array."""
        if not self.coeffs:
            return np.zeros((0, self.d, self.m), dtype=np.complex128)
        return np.stack([np.asarray(a, dtype=np.complex128) for a in self.coeffs])

    @cached_property
    def phi_kron(self) -> np.ndarray:
        """Matrix of Φ on row-major vectorizations, shape (d², m²)."""
        a = self.stacked
        return np.einsum("nij,nkl->ikjl", a, a.conj()).reshape(self.d**2, self.m**2)

    @cached_property
    def phi_star_kron(self) -> np.ndarray:
        """Matrix of Φ* on row-major vectorizations, shape (m², d²)."""
        a = self.stacked
        return np.einsum("nji,nkl->iljk", a.conj(), a).reshape(self.m**2, self.d**2)

    @property
    def is_shift_only(self) -> bool:
        """Whether x = 0, so the operator is b⊗1."""
        return self.n == 0 or not np.any(self.stacked)

    def with_shift(self, c: float) -> FreeModel:
        """Return the model with b replaced by b + c·1."""
        return FreeModel(self.d, self.m, self.coeffs, self.shift + c * np.eye(self.d))

    def scaled(self, t: float) -> FreeModel:
        """Return the model with every aᵢ replaced by t·aᵢ."""
        return FreeModel(self.d, self.m, tuple(t * a for a in self.coeffs), self.shift)

    def without_shift(self) -> FreeModel:
        """Return the model with b = 0."""
        return FreeModel(self.d, self.m, self.coeffs, np.zeros((self.d, self.d), np.complex128))


@dataclass(frozen=True)
class VarianceProfile:
    """Independent-entries model: variances σᵢⱼ² (d×m) and diagonal shift b₁..b_d."""

    sigma2: np.ndarray
    bdiag: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        """Validate nonnegativity and shapes."""
        s = np.array(self.sigma2, dtype=np.float64, ndmin=2)
        if not np.all(np.isfinite(s)):
            msg = "sigma2 has non-finite entries"
            raise NonFiniteError(msg)
        if np.any(s < 0):
            i, j = np.argwhere(s < 0)[0]
            msg = f"sigma2[{i}][{j}] = {s[i, j]} is negative"
            raise NegativeVarianceError(msg)
        b = np.array(self.bdiag, dtype=np.float64).ravel()
        if b.size == 0:
            b = np.zeros(s.shape[0])
        if b.shape != (s.shape[0],):
            raise ShapeMismatchError("bdiag", (s.shape[0],), b.shape)
        if not np.all(np.isfinite(b)):
            msg = "bdiag has non-finite entries"
            raise NonFiniteError(msg)
        s.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "sigma2", s)
        object.__setattr__(self, "bdiag", b)

    @property
    def d(self) -> int:
        """Number of rows."""
        return int(self.sigma2.shape[0])

    @property
    def m(self) -> int:
        """Number of columns."""
        return int(self.sigma2.shape[1])

    @classmethod
    def from_model(cls, model: FreeModel) -> VarianceProfile:
        """Effective profile σᵢⱼ² = Σₗ |aₗ[i,j]|² of a diagonal-compatible model."""
        if not is_diagonal_compatible(model):
            msg = "model is not diagonal-compatible"
            raise ModelError(msg)
        sigma2 = np.sum(np.abs(model.stacked) ** 2, axis=0)
        return cls(sigma2=sigma2, bdiag=np.real(np.diag(model.shift)))

    def scaled(self, t: float) -> VarianceProfile:
        """Profile of the model with every aᵢ multiplied by t."""
        return VarianceProfile(sigma2=t * t * self.sigma2, bdiag=self.bdiag)

    def with_shift(self, c: float) -> VarianceProfile:
        """Profile with b replaced by b + c·1."""
        return VarianceProfile(sigma2=self.sigma2, bdiag=self.bdiag + c)


def validate(model: FreeModel) -> None:
    """Check shape, Hermiticity and finiteness invariants.

    Raises:
        ShapeMismatchError: naming the first offending coefficient or the shift.
        NotHermitianError: if the shift is not self-adjoint.
        NonFiniteError: if any entry is NaN or Inf.

    """
    if model.d < 1 or model.m < 1:
        msg = f"dimensions must be positive, got d={model.d}, m={model.m}"
        raise ModelError(msg)
    for i, a in enumerate(model.coeffs):
        arr = np.asarray(a)
        if arr.shape != (model.d, model.m):
            raise ShapeMismatchError(f"coeffs[{i}]", (model.d, model.m), arr.shape)
        if not np.all(np.isfinite(arr)):
            msg = f"coeffs[{i}] has non-finite entries"
            raise NonFiniteError(msg)
    b = np.asarray(model.shift)
    if b.shape != (model.d, model.d):
        raise ShapeMismatchError("shift", (model.d, model.d), b.shape)
    if not np.all(np.isfinite(b)):
        msg = "shift has non-finite entries"
        raise NonFiniteError(msg)
    skew = asymmetry(b)
    if skew > Tolerances.HERMITIAN_SYMMETRIZE:
        raise NotHermitianError("shift", skew)


def _check_square(y: np.ndarray, size: int, name: str) -> None:
    if y.shape != (size, size):
        raise ShapeMismatchError(name, (size, size), y.shape)


def apply_phi(model: FreeModel, y: np.ndarray) -> np.ndarray:
    """Φ(y) = Σ aᵢ y aᵢ* for any m×m matrix y."""
    a = model.stacked
    return np.einsum("nij,jk,nlk->il", a, y, a.conj())


def apply_phi_star(model: FreeModel, z: np.ndarray) -> np.ndarray:
    """Φ*(z) = Σ aⱼ* z aⱼ for any d×d matrix z."""
    a = model.stacked
    return np.einsum("nji,jk,nkl->il", a.conj(), z, a)


def phi(model: FreeModel, y: ArrayLike) -> HermitianMatrix:
    """Φ(y) = Σ aᵢ y aᵢ* for Hermitian m×m y."""
    arr = np.asarray(y, dtype=np.complex128)
    _check_square(arr, model.m, "y")
    return symmetrize(apply_phi(model, arr))


def phi_star(model: FreeModel, z: ArrayLike) -> HermitianMatrix:
    """Φ*(z) = Σ aⱼ* z aⱼ for Hermitian d×d z."""
    arr = np.asarray(z, dtype=np.complex128)
    _check_square(arr, model.d, "z")
    return symmetrize(apply_phi_star(model, arr))


def from_variance_profile(profile: VarianceProfile) -> FreeModel:
    """Model x = Σ σᵢⱼ eᵢeⱼ*⊗sᵢⱼ with shift diag(bdiag); zero variances are dropped."""
    coeffs = []
    for i, j in zip(*np.nonzero(profile.sigma2)):
        a = np.zeros((profile.d, profile.m), dtype=np.complex128)
        a[i, j] = np.sqrt(profile.sigma2[i, j])
        coeffs.append(as_matrix(a))
    shift = as_hermitian(np.diag(profile.bdiag).astype(np.complex128), name="shift")
    return FreeModel(d=profile.d, m=profile.m, coeffs=tuple(coeffs), shift=shift)


def _is_diagonal(m: np.ndarray) -> bool:
    off = m - np.diag(np.diag(m))
    return float(np.max(np.abs(off), initial=0.0)) <= Tolerances.DIAGONAL * max(
        1.0,
        float(np.max(np.abs(m), initial=0.0)),
    )


def is_diagonal_compatible(model: FreeModel) -> bool:
    """Whether b is diagonal and Φ, Φ* preserve the diagonal subalgebras."""
    validate(model)
    if not _is_diagonal(np.asarray(model.shift)):
        return False
    for j in range(model.m):
        e = np.zeros((model.m, model.m), dtype=np.complex128)
        e[j, j] = 1.0
        if not _is_diagonal(apply_phi(model, e)):
            return False
    for k in range(model.d):
        e = np.zeros((model.d, model.d), dtype=np.complex128)
        e[k, k] = 1.0
        if not _is_diagonal(apply_phi_star(model, e)):
            return False
    return True


def edge_bounds(model: FreeModel) -> tuple[tuple[float, float], tuple[float, float]]:
    """A-priori brackets ``((upper_lo, upper_hi), (lower_lo, lower_hi))`` for both edges.

    Uses λ_max(b + Φ(1)) ≤ λ_max ≤ λ_max(b) + (‖Φ(1)‖^½ + ‖Φ*(1)‖^½)² and
    λ_min(b) ≤ λ_min ≤ λ_min(b + Φ(1)).
    """
    b = np.asarray(model.shift)
    phi_one = apply_phi(model, np.eye(model.m, dtype=np.complex128))
    phi_star_one = apply_phi_star(model, np.eye(model.d, dtype=np.complex128))
    b_min, b_max = eig_extremes(b)
    mean_min, mean_max = eig_extremes(symmetrize(b + phi_one))
    norm_phi = max(eig_extremes(symmetrize(phi_one))[1], 0.0)
    norm_phi_star = max(eig_extremes(symmetrize(phi_star_one))[1], 0.0)
    upper_hi = b_max + (np.sqrt(norm_phi) + np.sqrt(norm_phi_star)) ** 2
    return (mean_max, float(upper_hi)), (b_min, mean_min)


def xx_norm_bound(model: FreeModel) -> float:
    """Upper bound (‖Φ(1)‖^½ + ‖Φ*(1)‖^½)² on ‖xx*‖."""
    (_, upper_hi), _ = edge_bounds(model)
    return upper_hi - eig_extremes(np.asarray(model.shift))[1]


def diagonal_of(v: RealVector) -> HermitianMatrix:
    """diag(v) as a complex matrix."""
    return np.diag(np.asarray(v, dtype=np.float64)).astype(np.complex128)
