"""Spectral edges of xx* + b⊗1 for matrix-coefficient free semicircular models."""

from .cauchy import edge_from_cauchy, series_G, solve_G
from .diagonal import diag_lower_edge, diag_objective, diag_upper_edge
from .edges import (
    dilated_cross_check,
    eval_certificate,
    lehner_selfadjoint_max,
    lower_edge,
    objective_h,
    upper_edge,
)
from .mc_oracle import mc_edges
from .model import (
    FreeModel,
    VarianceProfile,
    from_variance_profile,
    is_diagonal_compatible,
    phi,
    phi_star,
    validate,
)
from .modelfile import load_model, parse_model
from .report import RunReport, build_report

__all__ = [
    "FreeModel",
    "RunReport",
    "VarianceProfile",
    "build_report",
    "diag_lower_edge",
    "diag_objective",
    "diag_upper_edge",
    "dilated_cross_check",
    "edge_from_cauchy",
    "eval_certificate",
    "from_variance_profile",
    "is_diagonal_compatible",
    "lehner_selfadjoint_max",
    "load_model",
    "lower_edge",
    "mc_edges",
    "objective_h",
    "parse_model",
    "phi",
    "phi_star",
    "series_G",
    "solve_G",
    "upper_edge",
    "validate",
]
