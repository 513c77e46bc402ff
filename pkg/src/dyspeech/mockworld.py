"""Deterministic mock TTS and ASR services for desk-scale end-to-end runs.

The mock TTS writes a pseudo-audio JSON file embedding the input text and a
scalar severity distance; the mock ASR decodes such files and corrupts the
text character by character at a rate that grows with that distance. The
corruption is seeded per (seed, engine, utterance_id), so whole pipelines
replay bit-identically.

Real neural inference never happens here; mock "audio" is meaningful only to
these two services.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .clients import AsrRequest, AsrResponse, RemoteError, TtsRequest, TtsResponse

__all__ = [
    "MockWorldConfig",
    "MockTtsService",
    "MockAsrService",
    "severity_distance",
    "mock_audio_path",
    "read_mock_audio",
]

MOCK_AUDIO_FORMAT = "mock-audio"
MOCK_AUDIO_SUFFIX = ".mock.json"

# letters used for substitutions/insertions; never whitespace, so the
# corruption survives whitespace collapsing untouched
_CORRUPTION_ALPHABET = "aábcdeéfghiíjklmnoóöőpqrstuúüűvwxyz"

# corruption saturates here: the insert-spacing correction in corrupt_text
# is exactly invertible only for rates below 0.75
_MAX_RATE = 0.6


@dataclass(frozen=True)
class MockWorldConfig:
    """Knobs of the simulated world.

    The effective character corruption rate for an utterance is
    ``base_char_error_rate + severity_slope * severity_distance`` (clipped),
    so synthetic speech generated further from the typical voice decodes
    worse, and at zero noise the round trip is exact.
    """

    base_char_error_rate: float = 0.0
    severity_slope: float = 0.0
    seed: int = 0
    seconds_per_char: float = 0.08

    def __post_init__(self) -> None:
        if not (0.0 <= self.base_char_error_rate <= 1.0):
            raise ValueError("base_char_error_rate must be in [0, 1]")
        if self.severity_slope < 0.0:
            raise ValueError("severity_slope must be non-negative")
        if not (self.seconds_per_char > 0):
            raise ValueError("seconds_per_char must be positive")

    def rate_for(self, distance: float) -> float:
        return float(min(_MAX_RATE, max(0.0, self.base_char_error_rate + self.severity_slope * distance)))


def severity_distance(weights: Sequence[float] | None) -> float:
    """Scalar extrapolation distance of a weight vector from the pure-typical
    anchor [1, 0, ..., 0], as half the L1 distance.

    For two affine weights [w_typical, w_dys] this equals w_dys, so the
    built-in severity ladder maps to 0.8, 1.0, 1.5 and 2.5.
    """
    if weights is None:
        return 0.0
    anchor = np.zeros(len(weights))
    anchor[0] = 1.0
    return float(np.abs(np.asarray(weights, dtype=float) - anchor).sum() / 2.0)


def mock_audio_path(out_dir: str | Path, utterance_id: str) -> Path:
    return Path(out_dir) / f"{utterance_id}{MOCK_AUDIO_SUFFIX}"


def read_mock_audio(path: str | Path) -> dict:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise RemoteError("bad_request", f"cannot read mock audio {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != MOCK_AUDIO_FORMAT:
        raise RemoteError("bad_request", f"{path} is not mock audio")
    return payload


class MockTtsService:
    """Writes pseudo-audio files; duration is proportional to text length."""

    def __init__(self, config: MockWorldConfig, out_dir: str | Path):
        self.config = config
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def synthesize(self, req: TtsRequest) -> TtsResponse:
        if not req.text:
            raise RemoteError("bad_request", "empty synthesis text")
        if not (req.temperature > 0):
            raise RemoteError("bad_request", "temperature must be positive")
        if not req.utterance_id:
            raise RemoteError("bad_request", "missing utterance_id")
        distance = severity_distance(req.severity_weights)
        duration = len(req.text) * self.config.seconds_per_char
        path = mock_audio_path(self.out_dir, req.utterance_id)
        payload = {
            "format": MOCK_AUDIO_FORMAT,
            "schema_version": 1,
            "utterance_id": req.utterance_id,
            "text": req.text,
            "severity_distance": distance,
            "checkpoint": req.checkpoint,
            "reference_id": req.reference_id,
            "duration_s": duration,
        }
        path.write_text(json.dumps(payload, ensure_ascii=False) + "\n", encoding="utf-8")
        return TtsResponse(audio_path=str(path), duration_s=duration)


def _rng_for(seed: int, engine: str, utterance_id: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{engine}:{utterance_id}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def corrupt_text(text: str, rate: float, rng: np.random.Generator) -> str:
    """Per-character corruption: with probability ``rate`` a character is
    substituted (never by itself), deleted, or followed by an insertion.

    The character after an insertion is left untouched; otherwise an
    insert-then-delete pair would collapse into a single substitution under
    minimal-distance scoring and the measured CER would drift below the
    configured rate. The per-character trial rate is inflated to 3r/(3-r) so
    the marginal corruption probability still equals ``rate``.
    """
    if rate <= 0.0 or not text:
        return text
    trial_rate = 3.0 * rate / (3.0 - rate)
    out: list[str] = []
    letters = _CORRUPTION_ALPHABET
    blocked = False
    for ch in text:
        if blocked or rng.random() >= trial_rate:
            out.append(ch)
            blocked = False
            continue
        op = rng.integers(0, 3)
        if op == 0:  # substitute
            repl = letters[rng.integers(0, len(letters))]
            while repl == ch:
                repl = letters[rng.integers(0, len(letters))]
            out.append(repl)
        elif op == 1:  # delete
            pass
        else:  # insert after, shielding the next character
            out.append(ch)
            out.append(letters[rng.integers(0, len(letters))])
            blocked = True
    return "".join(out)


class MockAsrService:
    """Decodes mock audio with severity-dependent character noise."""

    def __init__(self, config: MockWorldConfig):
        self.config = config

    def transcribe(self, req: AsrRequest) -> AsrResponse:
        payload = read_mock_audio(req.audio_path)
        rate = self.config.rate_for(float(payload.get("severity_distance", 0.0)))
        rng = _rng_for(self.config.seed, req.engine, str(payload.get("utterance_id", "")))
        transcript = corrupt_text(str(payload.get("text", "")), rate, rng)
        return AsrResponse(transcript=transcript, confidence=1.0 - rate)
