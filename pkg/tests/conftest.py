"""Shared fixtures: closed-form models and seeded random models."""

from __future__ import annotations

import json
from typing import TYPE_CHECKING

import numpy as np
import pytest

from freeedge.model import FreeModel, VarianceProfile, from_variance_profile
from freeedge.results import complex_pairs

if TYPE_CHECKING:
    from collections.abc import Callable
    from pathlib import Path


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    h = rng.uniform(-1, 1, (dim, dim)) + 1j * rng.uniform(-1, 1, (dim, dim))
    return (h + h.conj().T) / 2


def make_random_model(seed: int, *, zero_shift: bool = False) -> FreeModel:
    """d, m ≤ 4, n ≤ 5, entries U[−1,1] + iU[−1,1], random Hermitian shift."""
    rng = np.random.default_rng(seed)
    d, m, n = (int(k) for k in rng.integers(1, [5, 5, 6]))
    coeffs = [rng.uniform(-1, 1, (d, m)) + 1j * rng.uniform(-1, 1, (d, m)) for _ in range(n)]
    shift = np.zeros((d, d)) if zero_shift else random_hermitian(rng, d)
    return FreeModel.build(coeffs, shift)


def mp_profile(d: int, m: int) -> VarianceProfile:
    """Flat profile σ² = 1/m, whose edges are (1 ± √(d/m))²."""
    return VarianceProfile(sigma2=np.full((d, m), 1.0 / m))


@pytest.fixture
def scalar_model() -> FreeModel:
    """x = s, so xx* = s² has spectrum [0, 4]."""
    return FreeModel.build([[[1.0]]], [[0.0]])


@pytest.fixture
def shift_only_model() -> FreeModel:
    """x = 0 with b = diag(1, 2)."""
    shift = np.diag([1.0, 2.0]).astype(np.complex128)
    return FreeModel(d=2, m=1, coeffs=(), shift=shift)


@pytest.fixture
def random_model() -> Callable[..., FreeModel]:
    return make_random_model


@pytest.fixture
def mp_model() -> Callable[[int, int], FreeModel]:
    return lambda d, m: from_variance_profile(mp_profile(d, m))


@pytest.fixture
def write_model(tmp_path: Path) -> Callable[[dict, str], Path]:
    """Write a model document to a JSON file."""

    def write(doc: dict, name: str = "model.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
        return path

    return write


@pytest.fixture
def scalar_doc() -> dict:
    return {"d": 1, "m": 1, "n": 1, "coeffs": [[[[1.0, 0.0]]]], "shift": [[[0.0, 0.0]]]}


@pytest.fixture
def dense_doc() -> dict:
    """A 2×2 model whose Φ does not preserve diagonal matrices."""
    a = np.array([[1.0, 0.5], [0.5j, 1.0]])
    return {"d": 2, "m": 2, "coeffs": [complex_pairs(a)]}
