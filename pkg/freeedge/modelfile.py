"""JSON model files.

Two layouts are accepted::

    {"d": 2, "m": 3, "n": 1, "coeffs": [[[[re, im], ...], ...]], "shift": [[[re, im], ...], ...]}
    {"variance_profile": {"sigma2": [[...], ...], "bdiag": [...]}}

Exactly one of ``coeffs`` and ``variance_profile`` must be present. Complex
entries are ``[re, im]`` pairs; plain numbers are read as real. ``shift``
defaults to zero and ``n``, when given, must match the coefficient count.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from .exceptions import ModelError, ModelFileError
from .linalg import as_hermitian, as_matrix
from .model import FreeModel, VarianceProfile, from_variance_profile, validate
from .results import complex_pairs

if TYPE_CHECKING:
    from pathlib import Path

logger = logging.getLogger(__name__)

PAIR_LENGTH = 2


@dataclass(frozen=True)
class LoadedModel:
    """A parsed model file."""

    model: FreeModel
    profile: VarianceProfile | None = None

    @property
    def digest(self) -> str:
        """SHA-256 of the normalized model."""
        return model_digest(self.model)


class _Source:
    """Raw text, used to attach line numbers to field errors."""

    def __init__(self, text: str) -> None:
        self.text = text

    def line_of(self, key: str) -> int | None:
        match = re.search(rf'"{re.escape(key)}"\s*:', self.text)
        if match is None:
            return None
        return self.text.count("\n", 0, match.start()) + 1

    def error(self, message: str, field: str) -> ModelFileError:
        key = field.split("[")[0].split(".")[-1]
        return ModelFileError(message, field=field, line=self.line_of(key))


def _count(doc: dict[str, Any], key: str, src: _Source) -> int:
    if key not in doc:
        raise src.error("missing required field", key)
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise src.error(f"must be a positive integer, got {value!r}", key)
    return value


def _entry(value: Any, field: str, src: _Source) -> complex:
    if isinstance(value, bool):
        raise src.error(f"expected a number or [re, im] pair, got {value!r}", field)
    if isinstance(value, (int, float)):
        return complex(value)
    if (
        isinstance(value, list)
        and len(value) == PAIR_LENGTH
        and all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in value)
    ):
        return complex(value[0], value[1])
    raise src.error(f"expected a number or [re, im] pair, got {value!r}", field)


def _matrix(value: Any, shape: tuple[int, int], field: str, src: _Source) -> np.ndarray:
    rows, cols = shape
    if not isinstance(value, list) or len(value) != rows:
        raise src.error(f"expected {rows} rows", field)
    out = np.zeros(shape, dtype=np.complex128)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != cols:
            raise src.error(f"expected {cols} columns", f"{field}[{i}]")
        for j, item in enumerate(row):
            out[i, j] = _entry(item, f"{field}[{i}][{j}]", src)
    return out


def _real_rows(value: Any, field: str, src: _Source) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise src.error("expected a non-empty list of rows", field)
    width = len(value[0])
    if width == 0 or any(len(r) != width for r in value):
        raise src.error("rows must be non-empty and of equal length", field)
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise src.error("entries must be real numbers", field) from e
    return arr


def _parse_coeffs(doc: dict[str, Any], src: _Source) -> FreeModel:
    d = _count(doc, "d", src)
    m = _count(doc, "m", src)
    raw = doc["coeffs"]
    if not isinstance(raw, list):
        raise src.error("expected a list of matrices", "coeffs")
    if "n" in doc and doc["n"] != len(raw):
        raise src.error(f"n = {doc['n']!r} but {len(raw)} coefficients are given", "n")
    coeffs = tuple(
        as_matrix(_matrix(a, (d, m), f"coeffs[{i}]", src), name=f"coeffs[{i}]")
        for i, a in enumerate(raw)
    )
    if "shift" in doc:
        shift = as_hermitian(_matrix(doc["shift"], (d, d), "shift", src), name="shift")
    else:
        shift = as_hermitian(np.zeros((d, d), dtype=np.complex128), name="shift")
    return FreeModel(d=d, m=m, coeffs=coeffs, shift=shift)


def _parse_profile(doc: dict[str, Any], src: _Source) -> VarianceProfile:
    block = doc["variance_profile"]
    if not isinstance(block, dict):
        raise src.error("expected an object with sigma2 and bdiag", "variance_profile")
    if "sigma2" not in block:
        raise src.error("missing required field", "variance_profile.sigma2")
    sigma2 = _real_rows(block["sigma2"], "variance_profile.sigma2", src)
    bdiag = block.get("bdiag", [])
    if not isinstance(bdiag, list):
        raise src.error("expected a list of reals", "variance_profile.bdiag")
    for key, size in (("d", sigma2.shape[0]), ("m", sigma2.shape[1])):
        if key in doc and doc[key] != size:
            raise src.error(f"{key} = {doc[key]!r} but sigma2 implies {size}", key)
    try:
        return VarianceProfile(sigma2=sigma2, bdiag=np.array(bdiag, dtype=np.float64))
    except (TypeError, ValueError) as e:
        raise src.error("entries must be real numbers", "variance_profile.bdiag") from e


def parse_model(text: str) -> LoadedModel:
    """Parse and validate model JSON.

    Raises:
        ModelFileError: on syntax or schema errors, naming the field and line.

    """
    src = _Source(text)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        msg = f"invalid JSON: {e.msg} (column {e.colno})"
        raise ModelFileError(msg, line=e.lineno) from e
    if not isinstance(doc, dict):
        msg = "top level must be a JSON object"
        raise ModelFileError(msg, line=1)
    has_coeffs = "coeffs" in doc
    has_profile = "variance_profile" in doc
    if has_coeffs == has_profile:
        msg = "exactly one of 'coeffs' and 'variance_profile' must be present"
        raise ModelFileError(msg, field="coeffs" if has_coeffs else None)
    try:
        if has_profile:
            profile = _parse_profile(doc, src)
            loaded = LoadedModel(model=from_variance_profile(profile), profile=profile)
        else:
            loaded = LoadedModel(model=_parse_coeffs(doc, src))
        validate(loaded.model)
    except ModelFileError:
        raise
    except ModelError as e:
        field = getattr(e, "what", None)
        raise ModelFileError(str(e), field=field, line=src.line_of(field) if field else None) from e
    logger.debug("Parsed model d=%d m=%d n=%d", loaded.model.d, loaded.model.m, loaded.model.n)
    return loaded


def load_model(path: Path) -> LoadedModel:
    """Read and parse a model file."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        msg = f"cannot read {path}: {e.strerror or e}"
        raise ModelFileError(msg) from e
    return parse_model(text)


def normalized(model: FreeModel) -> dict[str, Any]:
    """Coefficient-form document of a model."""
    return {
        "d": model.d,
        "m": model.m,
        "n": model.n,
        "coeffs": [complex_pairs(a) for a in model.coeffs],
        "shift": complex_pairs(model.shift),
    }


def dump_normalized(model: FreeModel, path: Path) -> None:
    """Write the coefficient form of ``model`` as JSON."""
    path.write_text(json.dumps(normalized(model), indent=2) + "\n", encoding="utf-8")


def model_digest(model: FreeModel) -> str:
    """SHA-256 hex digest of the canonical JSON of the normalized model."""
    canonical = json.dumps(normalized(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
