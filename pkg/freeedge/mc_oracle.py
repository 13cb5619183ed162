"""Monte Carlo comparator: replace each sᵢ by an independent normalized GUE matrix."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .config import McConfig, ThreadConfig
from .linalg import eig_extremes
from .model import FreeModel, validate

logger = logging.getLogger(__name__)


@dataclass
class McEdgeStats:
    """Extreme eigenvalues of the sampled realizations."""

    mean_max: float
    mean_min: float
    sd_max: float
    sd_min: float
    per_sample: list[tuple[float, float]] = field(default_factory=list)

    @classmethod
    def from_samples(cls, per_sample: list[tuple[float, float]]) -> McEdgeStats:
        """Aggregate ``(λ_max, λ_min)`` pairs stored in sample order."""
        arr = np.array(per_sample, dtype=np.float64).reshape(-1, 2)
        ddof = 1 if len(per_sample) > 1 else 0
        return cls(
            mean_max=float(np.mean(arr[:, 0])),
            mean_min=float(np.mean(arr[:, 1])),
            sd_max=float(np.std(arr[:, 0], ddof=ddof)),
            sd_min=float(np.std(arr[:, 1], ddof=ddof)),
            per_sample=[(float(hi), float(lo)) for hi, lo in arr],
        )

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready representation."""
        return {
            "mean_max": self.mean_max,
            "mean_min": self.mean_min,
            "sd_max": self.sd_max,
            "sd_min": self.sd_min,
            "per_sample": [list(pair) for pair in self.per_sample],
        }


def sample_stream(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for sample ``index``; independent of scheduling order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def gue(dim: int, rng: np.random.Generator) -> np.ndarray:
    """GUE matrix scaled so that its spectrum tends to the semicircle on [−2, 2]."""
    a = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    return (a + a.conj().T) / np.sqrt(2 * dim)


def sample_realization(model: FreeModel, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Return ``X Xᴴ + b⊗1_N`` with ``X = Σ aᵢ⊗Gᵢ`` for independent GUE(N) matrices Gᵢ."""
    validate(model)
    eye = np.eye(dim, dtype=np.complex128)
    sample = np.kron(np.asarray(model.shift, dtype=np.complex128), eye)
    if model.n == 0:
        return sample
    x = np.zeros((model.d * dim, model.m * dim), dtype=np.complex128)
    for a in model.stacked:
        x += np.kron(a, gue(dim, rng))
    sample = sample + x @ x.conj().T
    return (sample + sample.conj().T) / 2


def _extremes(model: FreeModel, cfg: McConfig, index: int) -> tuple[float, float]:
    realization = sample_realization(model, cfg.dim, sample_stream(cfg.seed, index))
    lo, hi = eig_extremes(realization)
    return hi, lo


def mc_edges(model: FreeModel, cfg: McConfig, threads: ThreadConfig | None = None) -> McEdgeStats:
    """Sample ``cfg.samples`` realizations and collect their extreme eigenvalues.

    Results are bit-identical for a given seed whether or not samples run in
    parallel.
    """
    validate(model)
    indices = range(cfg.samples)
    if cfg.parallel and cfg.samples > 1:
        workers = min((threads or ThreadConfig.from_env()).max_workers, cfg.samples)
        logger.debug("Sampling %d realizations on %d threads", cfg.samples, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_sample = list(pool.map(lambda i: _extremes(model, cfg, i), indices))
    else:
        per_sample = [_extremes(model, cfg, i) for i in indices]
    stats = McEdgeStats.from_samples(per_sample)
    logger.info(
        "Monte Carlo N=%d, %d samples: max %.6g ± %.2g, min %.6g ± %.2g",
        cfg.dim,
        cfg.samples,
        stats.mean_max,
        stats.sd_max,
        stats.mean_min,
        stats.sd_min,
    )
    return stats
