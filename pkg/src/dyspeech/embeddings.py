"""Weighted combination of speaker embeddings.

Supports convex interpolation between a typical and a dysarthric voice and,
through negative weights, extrapolation beyond them. The combined vector is
never rescaled: renormalizing would silently change what extrapolation means.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "SpeakerEmbedding",
    "SeveritySetting",
    "SettingDiagnostics",
    "SEVERITY_PRESETS",
    "combine",
    "equal_weight_mean",
    "validate_setting",
    "read_embedding",
    "write_embedding",
    "read_severity_settings",
    "write_severity_settings",
    "EmbeddingFormatError",
]

CONVEXITY_TOL = 1e-9


class EmbeddingFormatError(ValueError):
    """Malformed embedding or settings file."""


@dataclass(frozen=True, eq=False)
class SpeakerEmbedding:
    """A fixed-dimension real vector identifying a voice."""

    values: np.ndarray
    source_tag: str

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"embedding must be a 1-d vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"embedding {self.source_tag!r} contains non-finite entries")
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class SeveritySetting:
    """Named weight vector over [typical, dysarthric] reference embeddings."""

    name: str
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("severity setting needs a name")
        ws = tuple(float(w) for w in self.weights)
        if not ws:
            raise ValueError("severity setting needs at least one weight")
        if not all(np.isfinite(ws)):
            raise ValueError(f"setting {self.name!r} has non-finite weights")
        object.__setattr__(self, "weights", ws)


# Built-in severity ladder over [typical, dysarthric]; A is the mildest blend,
# C and D extrapolate past the dysarthric reference.
SEVERITY_PRESETS: dict[str, SeveritySetting] = {
    "A": SeveritySetting("A", (0.2, 0.8)),
    "B": SeveritySetting("B", (0.0, 1.0)),
    "C": SeveritySetting("C", (-0.5, 1.5)),
    "D": SeveritySetting("D", (-1.5, 2.5)),
}


def combine(embeddings: Sequence[SpeakerEmbedding], weights: Sequence[float]) -> SpeakerEmbedding:
    """Weighted combination: result[i] = sum_k weights[k] * embeddings[k][i].

    Nonnegative weights summing to one yield a convex blend; negative
    weights push the result outside the hull of the inputs.
    """
    if not embeddings:
        raise ValueError("need at least one embedding")
    if len(weights) != len(embeddings):
        raise ValueError(f"{len(weights)} weights for {len(embeddings)} embeddings")
    dim = embeddings[0].dim
    for e in embeddings:
        if e.dim != dim:
            raise ValueError(f"dimension mismatch: {e.source_tag!r} has {e.dim}, expected {dim}")
    w = np.asarray(weights, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise ValueError("weights contain non-finite entries")
    out = np.zeros(dim, dtype=np.float64)
    for wk, e in zip(w, embeddings):
        out = out + wk * e.values
    tag = "mix(" + "+".join(f"{wk:g}*{e.source_tag}" for wk, e in zip(w, embeddings)) + ")"
    return SpeakerEmbedding(values=out, source_tag=tag)


def equal_weight_mean(embeddings: Sequence[SpeakerEmbedding]) -> SpeakerEmbedding:
    """Plain average of the inputs, the pre-existing blending behavior that
    weighted combination generalizes."""
    if not embeddings:
        raise ValueError("need at least one embedding")
    n = len(embeddings)
    combined = combine(embeddings, [1.0 / n] * n)
    tag = "mean(" + "+".join(e.source_tag for e in embeddings) + ")"
    return SpeakerEmbedding(values=combined.values, source_tag=tag)


@dataclass(frozen=True)
class SettingDiagnostics:
    name: str
    weight_sum: float
    convex: bool
    extrapolating: bool


def validate_setting(s: SeveritySetting) -> SettingDiagnostics:
    """Classify a setting: convex iff nonnegative weights summing to one
    (tolerance 1e-9); extrapolating iff any weight is negative."""
    total = float(sum(s.weights))
    nonneg = all(w >= 0.0 for w in s.weights)
    return SettingDiagnostics(
        name=s.name,
        weight_sum=total,
        convex=nonneg and abs(total - 1.0) <= CONVEXITY_TOL,
        extrapolating=any(w < 0.0 for w in s.weights),
    )


def write_embedding(e: SpeakerEmbedding, path: str | Path) -> None:
    """Text format: a two-line header (dimension, source_tag), then one
    vector entry per line, round-trip exact."""
    lines = [f"dimension: {e.dim}", f"source_tag: {e.source_tag}"]
    lines.extend(repr(float(v)) for v in e.values)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_embedding(path: str | Path, expected_dim: int | None = None) -> SpeakerEmbedding:
    """Parse an embedding file; optionally enforce the project dimension."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if len(lines) < 2 or not lines[0].startswith("dimension:") or not lines[1].startswith("source_tag:"):
        raise EmbeddingFormatError(f"{path}: expected 'dimension:' and 'source_tag:' header lines")
    try:
        dim = int(lines[0].split(":", 1)[1].strip())
    except ValueError as exc:
        raise EmbeddingFormatError(f"{path}: bad dimension header") from exc
    tag = lines[1].split(":", 1)[1].strip()
    body = [ln for ln in lines[2:] if ln.strip()]
    if len(body) != dim:
        raise EmbeddingFormatError(f"{path}: header says {dim} values, found {len(body)}")
    try:
        values = np.array([float(ln) for ln in body], dtype=np.float64)
    except ValueError as exc:
        raise EmbeddingFormatError(f"{path}: non-numeric vector entry") from exc
    if expected_dim is not None and dim != expected_dim:
        raise EmbeddingFormatError(f"{path}: dimension {dim} does not match expected {expected_dim}")
    return SpeakerEmbedding(values=values, source_tag=tag)


def write_severity_settings(settings: dict[str, SeveritySetting], path: str | Path) -> None:
    payload = {
        "schema_version": 1,
        "settings": {name: list(s.weights) for name, s in sorted(settings.items())},
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def read_severity_settings(path: str | Path) -> dict[str, SeveritySetting]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise EmbeddingFormatError(f"{path}: invalid settings file ({exc.msg})") from exc
    if not isinstance(payload, dict) or "settings" not in payload:
        raise EmbeddingFormatError(f"{path}: missing 'settings' object")
    out: dict[str, SeveritySetting] = {}
    for name, weights in payload["settings"].items():
        if not isinstance(weights, list):
            raise EmbeddingFormatError(f"{path}: weights of {name!r} must be a list")
        out[name] = SeveritySetting(name, tuple(float(w) for w in weights))
    return out
