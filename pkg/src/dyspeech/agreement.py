"""Dual-ASR agreement filtering of unlabeled utterances into pseudo-labels.

Two engines transcribe the same unlabeled audio; an utterance is kept when
the character edit distance between the two normalized transcriptions stays
within a threshold, and the kept utterance adopts one engine's transcription
as its pseudo-label.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .manifest import Manifest
from .metrics import DEFAULT_POLICY, NormalizationPolicy, edit_distance, normalize

__all__ = [
    "TranscriptPair",
    "ConsistencyError",
    "read_transcripts",
    "pair_transcripts",
    "agreement_filter",
    "filter_report",
    "FilterReport",
]

LABEL_SOURCES = ("engine_a", "engine_b")


class ConsistencyError(ValueError):
    """Pairs reference utterances the source manifest does not contain."""


@dataclass(frozen=True)
class TranscriptPair:
    """The two automatic transcriptions of one unlabeled utterance."""

    utterance_id: str
    transcript_a: str
    transcript_b: str


def read_transcripts(path: str | Path) -> dict[str, str]:
    """Parse an ``<utterance_id> <transcript...>`` file (one line per utterance).

    The transcript may be empty. Duplicate ids are rejected.
    """
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split(maxsplit=1)
        uid = parts[0]
        if uid in out:
            raise ValueError(f"line {lineno}: duplicate utterance id {uid!r}")
        out[uid] = parts[1] if len(parts) > 1 else ""
    return out


def pair_transcripts(a: dict[str, str], b: dict[str, str]) -> list[TranscriptPair]:
    """Zip two keyed transcript sets into pairs; key sets must match."""
    only_a = sorted(set(a) - set(b))
    only_b = sorted(set(b) - set(a))
    if only_a or only_b:
        raise ValueError(
            f"transcript sets disagree: {len(only_a)} ids only in A, {len(only_b)} only in B"
        )
    return [TranscriptPair(uid, a[uid], b[uid]) for uid in sorted(a)]


def _pair_distance(pair: TranscriptPair, policy: NormalizationPolicy) -> int:
    return edit_distance(normalize(pair.transcript_a, policy), normalize(pair.transcript_b, policy))


def _check_pairs_in_source(pairs: Sequence[TranscriptPair], source: Manifest) -> None:
    known = {u.id for u in source.utterances}
    missing = sorted({p.utterance_id for p in pairs} - known)
    if missing:
        raise ConsistencyError(
            f"{len(missing)} pair ids missing from manifest {source.name!r}: {missing[:5]}"
        )


def agreement_filter(
    pairs: Sequence[TranscriptPair],
    source: Manifest,
    max_edit: int = 4,
    policy: NormalizationPolicy = DEFAULT_POLICY,
    label_source: str = "engine_a",
) -> Manifest:
    """Keep utterances whose two transcriptions agree within ``max_edit``
    characters; kept utterances become pseudo-labeled.

    The pseudo-label is the chosen engine's raw transcription (normalization
    only drives the distance). Output is ordered by utterance id, so the
    result does not depend on pair order.
    """
    if max_edit < 0:
        raise ValueError("max_edit must be non-negative")
    if label_source not in LABEL_SOURCES:
        raise ValueError(f"label_source must be one of {LABEL_SOURCES}")
    _check_pairs_in_source(pairs, source)

    by_id = source.by_id()
    kept: list = []
    for pair in sorted(pairs, key=lambda p: p.utterance_id):
        if _pair_distance(pair, policy) > max_edit:
            continue
        label = pair.transcript_a if label_source == "engine_a" else pair.transcript_b
        kept.append(replace(by_id[pair.utterance_id], transcript=label, label_kind="pseudo"))
    return Manifest(name=f"{source.name}-agreed", utterances=kept, created_by="agreement_filter")


@dataclass(frozen=True)
class FilterReport:
    """Edit-distance histogram plus retention of one filter run."""

    histogram: dict[int, int]
    total: int
    kept: int
    kept_duration_s: float
    max_edit: int

    @property
    def retention(self) -> float:
        return self.kept / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "total": self.total,
            "kept": self.kept,
            "kept_duration_s": self.kept_duration_s,
            "max_edit": self.max_edit,
            "retention": self.retention,
        }


def filter_report(
    pairs: Sequence[TranscriptPair],
    source: Manifest,
    max_edit: int = 4,
    policy: NormalizationPolicy = DEFAULT_POLICY,
) -> FilterReport:
    """Distance histogram and retention for a prospective filter run."""
    if max_edit < 0:
        raise ValueError("max_edit must be non-negative")
    _check_pairs_in_source(pairs, source)
    by_id = source.by_id()
    histogram: dict[int, int] = {}
    kept = 0
    kept_duration = 0.0
    for pair in pairs:
        d = _pair_distance(pair, policy)
        histogram[d] = histogram.get(d, 0) + 1
        if d <= max_edit:
            kept += 1
            kept_duration += by_id[pair.utterance_id].duration_s
    return FilterReport(
        histogram=histogram,
        total=len(pairs),
        kept=kept,
        kept_duration_s=kept_duration,
        max_edit=max_edit,
    )
