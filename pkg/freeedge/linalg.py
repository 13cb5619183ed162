"""Dense complex Hermitian linear algebra and block-matrix identities.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The constructors
``as_matrix`` and ``as_hermitian`` enforce the value invariants (finite
entries, self-adjointness) and return read-only arrays, so validated matrices
can be shared freely between threads.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt
import scipy.linalg as la

from .config import Tolerances
from .exceptions import (
    EigenSolverError,
    FreeEdgeError,
    ModelError,
    NonFiniteError,
    NotHermitianError,
    ShapeMismatchError,
    SingularBlockError,
)

if TYPE_CHECKING:
    from numpy.typing import ArrayLike

ComplexMatrix = npt.NDArray[np.complex128]
HermitianMatrix = npt.NDArray[np.complex128]
RealVector = npt.NDArray[np.float64]

logger = logging.getLogger(__name__)

SQRT2 = np.sqrt(2.0)


def _frozen(m: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    out = np.array(m, dtype=np.complex128, copy=True)
    out.flags.writeable = False
    return out


def frobenius(m: ArrayLike) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(np.asarray(m)))


def as_matrix(m: ArrayLike, *, name: str = "matrix") -> ComplexMatrix:
    """Return a finite, read-only complex 2-D copy of ``m``."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 0)
    if arr.ndim != 2:  # noqa: PLR2004
        msg = f"{name} must be 2-dimensional, got {arr.ndim} dimensions"
        raise ModelError(msg)
    if not np.all(np.isfinite(arr)):
        msg = f"{name} has non-finite entries"
        raise NonFiniteError(msg)
    return _frozen(arr)


def symmetrize(m: ArrayLike) -> ComplexMatrix:
    """Return (M + M*)/2."""
    arr = np.asarray(m, dtype=np.complex128)
    return (arr + arr.conj().T) / 2


def asymmetry(m: ArrayLike) -> float:
    """Relative asymmetry ‖M − M*‖_F / max(1, ‖M‖_F)."""
    arr = np.asarray(m, dtype=np.complex128)
    return frobenius(arr - arr.conj().T) / max(1.0, frobenius(arr))


def as_hermitian(m: ArrayLike, *, name: str = "matrix") -> HermitianMatrix:
    """Validate and symmetrize a self-adjoint matrix.

    Asymmetry below ``Tolerances.HERMITIAN_SYMMETRIZE`` (relative) is treated
    as round-off and removed; anything larger is a modelling error.

    Raises:
        ShapeMismatchError: if ``m`` is not square.
        NotHermitianError: if the relative asymmetry is too large.

    """
    arr = as_matrix(m, name=name)
    if arr.shape[0] != arr.shape[1]:
        raise ShapeMismatchError(name, (arr.shape[0], arr.shape[0]), arr.shape)
    skew = asymmetry(arr)
    if skew > Tolerances.HERMITIAN_SYMMETRIZE:
        raise NotHermitianError(name, skew)
    return _frozen(symmetrize(arr))


def eigvalsh(m: ArrayLike) -> RealVector:
    """Ascending eigenvalues of a Hermitian matrix."""
    arr = np.asarray(m, dtype=np.complex128)
    try:
        return la.eigh(arr, eigvals_only=True, check_finite=True)
    except (la.LinAlgError, ValueError) as e:
        raise EigenSolverError(arr.shape[0], frobenius(arr), str(e)) from e


def eig_extremes(m: ArrayLike) -> tuple[float, float]:
    """Return ``(λ_min, λ_max)`` of a Hermitian matrix."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:  # noqa: PLR2004
        msg = f"expected a square matrix, got {arr.ndim} dimensions"
        raise ModelError(msg)
    if arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ShapeMismatchError("matrix", (max(arr.shape[0], 1),) * 2, arr.shape)
    w = eigvalsh(arr)
    return float(w[0]), float(w[-1])


def lambda_max(m: ArrayLike) -> float:
    """Largest eigenvalue."""
    return eig_extremes(m)[1]


def lambda_min(m: ArrayLike) -> float:
    """Smallest eigenvalue."""
    return eig_extremes(m)[0]


def positivity_margin(m: ArrayLike) -> float:
    """Scale-aware margin for strict cone membership."""
    return Tolerances.POSITIVITY * max(1.0, frobenius(m))


def is_positive_definite(m: ArrayLike) -> bool:
    """Whether λ_min(M) exceeds the positivity margin."""
    arr = np.asarray(m)
    if not np.all(np.isfinite(arr)):
        return False
    return lambda_min(arr) > positivity_margin(arr)


def is_invertible(m: ArrayLike) -> bool:
    """Whether the smallest singular value clears the invertibility threshold."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.size == 0:
        return True
    if not np.all(np.isfinite(arr)):
        return False
    s = la.svdvals(arr)
    return bool(s[-1] > Tolerances.INVERTIBILITY * max(1.0, frobenius(arr)))


def inverse(
    m: ArrayLike,
    *,
    what: str = "matrix",
    error: type[FreeEdgeError] = SingularBlockError,
) -> ComplexMatrix:
    """Invert ``m`` or raise ``error`` when it is numerically singular."""
    arr = np.asarray(m, dtype=np.complex128)
    if not is_invertible(arr):
        msg = f"{what} is numerically singular"
        raise error(msg)
    return la.inv(arr)


def solve_linear(a: ArrayLike, b: ArrayLike) -> np.ndarray:
    """Solve ``a·x = b``; an ill-conditioned ``a`` gets the least-squares solution instead."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", la.LinAlgWarning)
        try:
            return la.solve(a, b)
        except (la.LinAlgWarning, la.LinAlgError) as e:
            logger.debug("Falling back to least squares: %s", e)
    return la.lstsq(a, b)[0]


def hermitian_sqrt(m: ArrayLike) -> HermitianMatrix:
    """Positive square root of a positive semidefinite matrix."""
    w, v = la.eigh(np.asarray(m, dtype=np.complex128))
    return symmetrize((v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T)


@dataclass(frozen=True)
class BlockMatrix2x2:
    """Self-adjoint block matrix [[A, B], [B*, D]]."""

    A: HermitianMatrix
    B: ComplexMatrix
    D: HermitianMatrix

    def __post_init__(self) -> None:
        """Validate block shapes and self-adjointness."""
        a = as_hermitian(self.A, name="A")
        d = as_hermitian(self.D, name="D")
        b = as_matrix(self.B, name="B")
        if b.shape != (a.shape[0], d.shape[0]):
            raise ShapeMismatchError("B", (a.shape[0], d.shape[0]), b.shape)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "D", d)

    def assemble(self) -> HermitianMatrix:
        """Return the full matrix."""
        return np.block([[self.A, self.B], [self.B.conj().T, self.D]])


def schur_complement(m: BlockMatrix2x2) -> tuple[HermitianMatrix, bool]:
    """Return ``M/D = A − B D⁻¹ B*`` and whether ``D ≻ 0 and M/D ≻ 0``.

    The flag is equivalent to ``M ≻ 0``.

    Raises:
        SingularBlockError: if ``D`` is numerically singular.

    """
    d_inv = inverse(m.D, what="D")
    schur = symmetrize(m.A - m.B @ d_inv @ m.B.conj().T)
    positive = is_positive_definite(m.D) and is_positive_definite(schur)
    return schur, positive


def block_inverse(m: BlockMatrix2x2) -> ComplexMatrix:
    """Invert ``M`` blockwise through its Schur complement.

    Raises:
        SingularBlockError: if ``D`` or ``M/D`` is numerically singular.

    """
    d_inv = inverse(m.D, what="D")
    schur = m.A - m.B @ d_inv @ m.B.conj().T
    s_inv = inverse(schur, what="Schur complement M/D")
    upper_right = -s_inv @ m.B @ d_inv
    lower_left = -d_inv @ m.B.conj().T @ s_inv
    lower_right = d_inv + d_inv @ m.B.conj().T @ s_inv @ m.B @ d_inv
    return np.block([[s_inv, upper_right], [lower_left, lower_right]])


def woodbury_inverse(b: ArrayLike, d: ArrayLike) -> HermitianMatrix:
    """Return ``(1 − B D⁻¹ B*)⁻¹`` computed as ``1 + B (D − B*B)⁻¹ B*``.

    Raises:
        SingularBlockError: unless ``D``, ``D − B*B`` and ``1 − B D⁻¹ B*``
            are all invertible.

    """
    bm = as_matrix(b, name="B")
    dm = as_hermitian(d, name="D")
    if dm.shape[0] != bm.shape[1]:
        raise ShapeMismatchError("D", (bm.shape[1], bm.shape[1]), dm.shape)
    eye = np.eye(bm.shape[0], dtype=np.complex128)
    d_inv = inverse(dm, what="D")
    if not is_invertible(eye - bm @ d_inv @ bm.conj().T):
        msg = "1 - B D^-1 B* is numerically singular"
        raise SingularBlockError(msg)
    inner = inverse(dm - bm.conj().T @ bm, what="D - B*B")
    return symmetrize(eye + bm @ inner @ bm.conj().T)


def dilation(y: ArrayLike) -> HermitianMatrix:
    """Return the self-adjoint dilation [[0, y*], [y, 0]] of a d×m matrix."""
    ym = as_matrix(y, name="y")
    d, m = ym.shape
    return np.block(
        [
            [np.zeros((m, m), dtype=np.complex128), ym.conj().T],
            [ym, np.zeros((d, d), dtype=np.complex128)],
        ],
    )


def hermitian_to_real(z: ArrayLike) -> RealVector:
    """Coordinates of a Hermitian matrix in an orthonormal real basis.

    Order: diagonal, then √2·Re z_ij and √2·Im z_ij for i < j. The same map
    sends a Hermitian gradient matrix to the gradient in these coordinates.
    """
    arr = np.asarray(z, dtype=np.complex128)
    iu = np.triu_indices(arr.shape[0], k=1)
    upper = arr[iu]
    return np.concatenate([arr.diagonal().real, SQRT2 * upper.real, SQRT2 * upper.imag])


def real_to_hermitian(theta: ArrayLike, dim: int) -> HermitianMatrix:
    """Inverse of ``hermitian_to_real``."""
    t = np.asarray(theta, dtype=np.float64)
    iu = np.triu_indices(dim, k=1)
    k = iu[0].size
    z = np.zeros((dim, dim), dtype=np.complex128)
    z[np.diag_indices(dim)] = t[:dim]
    z[iu] = (t[dim : dim + k] + 1j * t[dim + k :]) / SQRT2
    z[(iu[1], iu[0])] = np.conj(z[iu])
    return z
