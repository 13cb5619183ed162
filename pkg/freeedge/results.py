"""Edge computation results."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

if TYPE_CHECKING:
    from .config import Method, Side
    from .linalg import HermitianMatrix


def complex_pairs(m: np.ndarray) -> list[Any]:
    """Nested lists with every complex entry written as ``[re, im]``."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim == 0:
        return [float(arr.real), float(arr.imag)]
    return [complex_pairs(row) for row in arr]


@dataclass
class EdgeResult:
    """Spectral edge estimate with its certificate.

    For the upper edge ``certificate_value`` is a rigorous upper bound on the
    edge, for the lower edge a rigorous lower bound.
    """

    value: float
    certificate: HermitianMatrix
    certificate_value: float
    flatness_residual: float
    iterations: int
    method: Method
    side: Side
    boundary_escape: bool = False
    notes: list[str] = field(default_factory=list)

    def check_flatness(self, flat_tol: float) -> EdgeResult:
        """Note a flatness residual above ``flat_tol``; the optimum may sit on the boundary."""
        if self.flatness_residual > flat_tol:
            self.notes.append(
                f"flatness residual {self.flatness_residual:.3e} exceeds flat_tol {flat_tol:.1e}",
            )
        return self

    def as_singular(self) -> EdgeResult:
        """Square-root view of the edge, for singular values of x."""
        return EdgeResult(
            value=float(np.sqrt(max(self.value, 0.0))),
            certificate=self.certificate,
            certificate_value=float(np.sqrt(max(self.certificate_value, 0.0))),
            flatness_residual=self.flatness_residual,
            iterations=self.iterations,
            method=self.method,
            side=self.side,
            boundary_escape=self.boundary_escape,
            notes=list(self.notes),
        )

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready representation with stable field names."""
        return {
            "method": self.method.value,
            "side": self.side.value,
            "value": self.value,
            "certificate_value": self.certificate_value,
            "flatness_residual": self.flatness_residual,
            "iterations": self.iterations,
            "boundary_escape": self.boundary_escape,
            "notes": list(self.notes),
            "certificate": complex_pairs(self.certificate),
        }
