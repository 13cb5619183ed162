"""Smoothed spectral extremes and a quasi-Newton minimizer for barrier problems.

Objectives return ``inf`` outside their domain. The minimizer shows the line
search a steep quadratic wall there instead, so accepted iterates never leave
the open domain.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as la
from scipy.optimize import minimize
from scipy.special import logsumexp, softmax

if TYPE_CHECKING:
    from collections.abc import Callable

    from .linalg import HermitianMatrix, RealVector

logger = logging.getLogger(__name__)

WALL_HEIGHT = 1e8
MIN_STAGE_ITER = 20


def smooth_max(m: HermitianMatrix, temperature: float) -> tuple[float, HermitianMatrix]:
    """Soft maximum ``T·log tr exp(M/T)`` and its gradient matrix.

    The value lies in ``[λ_max(M), λ_max(M) + T·log d]``; the gradient is a
    density matrix.
    """
    w, v = la.eigh(m)
    value = float(temperature * logsumexp(w / temperature))
    weights = softmax(w / temperature)
    return value, (v * weights) @ v.conj().T


def smooth_min(m: HermitianMatrix, temperature: float) -> tuple[float, HermitianMatrix]:
    """Soft minimum ``−T·log tr exp(−M/T)`` and its gradient matrix."""
    value, grad = smooth_max(-np.asarray(m), temperature)
    return -value, grad


@dataclass
class QuasiNewtonResult:
    """Minimizer output."""

    x: RealVector
    fun: float
    iterations: int
    converged: bool


def quasi_newton_minimize(
    fun: Callable[[RealVector], tuple[float, RealVector | None]],
    x0: RealVector,
    *,
    gtol: float,
    max_iter: int,
) -> QuasiNewtonResult:
    """BFGS from ``scipy.optimize`` on an objective with an open domain.

    ``fun`` returns the value and gradient, or ``(inf, None)`` outside the
    domain. ``x0`` must be inside the domain. A run that stops on a failed line
    search reports ``converged=False`` with its last accepted point.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    f, g = fun(x)
    if not np.isfinite(f) or g is None:
        msg = "quasi-Newton start lies outside the objective domain"
        raise ValueError(msg)
    anchor = [x, f]
    last = [x, f]

    def walled(theta: RealVector) -> tuple[float, RealVector]:
        value, grad = fun(theta)
        if np.isfinite(value) and grad is not None:
            last[:] = [np.array(theta, copy=True), value]
            return value, grad
        base, base_value = anchor
        height = WALL_HEIGHT * (1.0 + abs(base_value))
        offset = theta - base
        return base_value + height * (1.0 + float(offset @ offset)), 2 * height * offset

    def accept(theta: RealVector) -> None:
        value = last[1] if np.array_equal(theta, last[0]) else fun(theta)[0]
        anchor[:] = [np.array(theta, copy=True), value]

    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="The line search algorithm")
        res = minimize(
            walled,
            x,
            jac=True,
            method="BFGS",
            callback=accept,
            options={"gtol": gtol, "maxiter": max_iter},
        )
    value, grad = fun(res.x)
    if not np.isfinite(value) or grad is None:
        return QuasiNewtonResult(anchor[0], anchor[1], int(res.nit), converged=False)
    if not res.success:
        logger.debug("BFGS stopped after %d iterations: %s", res.nit, res.message)
    return QuasiNewtonResult(res.x, float(value), int(res.nit), converged=bool(res.success))


def stage_budget(total: int, start: float, stop: float, factor: float) -> int:
    """Iterations per stage of a schedule shrinking ``start`` by ``factor`` until ``stop``."""
    stages = 1 + max(0, int(np.ceil(np.log(start / stop) / np.log(1.0 / factor))))
    return max(MIN_STAGE_ITER, total // stages)
