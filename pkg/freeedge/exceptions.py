"""Library exceptions."""

from __future__ import annotations

from typing import TYPE_CHECKING, ClassVar

if TYPE_CHECKING:
    from .results import EdgeResult


class FreeEdgeError(Exception):
    """Base library exception."""

    exit_code: ClassVar[int] = 1

    @property
    def status(self) -> int:
        """Process exit status for this error."""
        return self.exit_code


class ConfigError(FreeEdgeError):
    """Invalid solver, oracle or command configuration."""


class ModelError(FreeEdgeError):
    """Model does not satisfy its invariants."""


class ShapeMismatchError(ModelError):
    """A coefficient or the shift has the wrong shape."""

    def __init__(
        self,
        what: str,
        expected: tuple[int, ...],
        actual: tuple[int, ...],
    ) -> None:
        """Initialize shape error with the offending object and both shapes."""
        self.what = what
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what} has shape {actual}, expected {expected}")


class NotHermitianError(ModelError):
    """Matrix required to be self-adjoint is not."""

    def __init__(self, what: str, asymmetry: float) -> None:
        """Initialize with the relative asymmetry norm ‖M − M*‖/‖M‖."""
        self.what = what
        self.asymmetry = asymmetry
        super().__init__(f"{what} is not Hermitian (relative asymmetry {asymmetry:.3e})")


class NonFiniteError(ModelError):
    """Matrix contains NaN or Inf entries."""


class NegativeVarianceError(ModelError):
    """Variance profile has a negative entry."""


class ModelFileError(FreeEdgeError):
    """Model file is unreadable or violates the schema."""

    def __init__(self, message: str, *, field: str | None = None, line: int | None = None) -> None:
        """Initialize with the schema field path and source line, when known."""
        self.field = field
        self.line = line
        location = []
        if field is not None:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class SingularBlockError(FreeEdgeError):
    """A block required to be invertible is numerically singular."""


class EigenSolverError(FreeEdgeError):
    """Dense Hermitian eigensolver failed."""

    def __init__(self, dim: int, norm: float, reason: str) -> None:
        """Initialize with matrix dimension and Frobenius norm."""
        self.dim = dim
        self.norm = norm
        super().__init__(f"eigensolver failed on {dim}x{dim} matrix (norm {norm:.3e}): {reason}")


class SolverError(FreeEdgeError):
    """Numerical solver failed."""


class NonConvergenceError(SolverError):
    """Fixed-point iteration did not converge (λ likely inside the spectrum)."""

    exit_code: ClassVar[int] = 3


class SingularIterateError(NonConvergenceError):
    """An iterate made a required inverse singular."""


class SingularZError(SolverError):
    """Evaluation point z is not invertible."""


class SingularResolventError(SolverError):
    """1 − Φ*(z) is not invertible."""


class InfeasibleError(SolverError):
    """Point violates the constraints of the chosen variational side."""

    def __init__(self, side: str, constraint: str) -> None:
        """Initialize with the side and the violated constraint."""
        self.side = side
        self.constraint = constraint
        super().__init__(f"infeasible for {side} edge: {constraint}")


class BracketNotFoundError(SolverError):
    """No λ with a converged fixed point was found outside the spectrum."""


class SeriesDivergesError(SolverError):
    """Power series precondition ‖(λ−b)⁻¹‖·‖xx*‖ < 1 is violated."""


class HerglotzViolationError(SolverError):
    """Converged fixed point has the wrong imaginary-part sign."""


class MaxIterationsError(SolverError):
    """Iteration budget exhausted; carries the best rigorous result found."""

    def __init__(self, result: EdgeResult, message: str) -> None:
        """Initialize with the best result and a reason."""
        self.result = result
        super().__init__(f"{message} (best bound {result.certificate_value:.12g})")


class MethodFailedError(FreeEdgeError):
    """A solver failed while computing one edge of a report."""

    def __init__(self, method: str, side: str, cause: FreeEdgeError) -> None:
        """Initialize with the method tag and the underlying error."""
        self.method = method
        self.side = side
        self.cause = cause
        super().__init__(f"[{method}/{side}] {cause}")

    @property
    def status(self) -> int:
        """Exit status of the underlying error."""
        return self.cause.status


class MethodDisagreementError(FreeEdgeError):
    """Two methods disagree on an edge by more than the agreement tolerance."""

    exit_code: ClassVar[int] = 2

    def __init__(self, pairs: list[tuple[str, str, str, float]], tol: float) -> None:
        """Initialize with ``(side, method, method, |Δ|)`` entries over the tolerance."""
        self.pairs = pairs
        self.tol = tol
        worst = max(pairs, key=lambda p: p[3])
        super().__init__(
            f"{len(pairs)} method pair(s) disagree beyond {tol:g}; worst is "
            f"{worst[1]} vs {worst[2]} on the {worst[0]} edge (|Δ| = {worst[3]:.3e})",
        )
