"""Line-delimited dataset manifests: utterances, splits, provenance.

File contract (one JSON record per line):
  utterance records carry the fields id, audio_path, transcript, duration_s,
  source, label_kind, severity_tag (optional) and schema_version.
An optional first record ``{"manifest": <name>, "created_by": <tag>,
"schema_version": 1}`` preserves manifest-level metadata across round trips;
files without it parse fine and take their name from the file stem.
Writes are byte-stable: the same manifest always serializes to the same bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .metrics import DEFAULT_POLICY, NormalizationPolicy, normalize

__all__ = [
    "SCHEMA_VERSION",
    "SOURCES",
    "LABEL_KINDS",
    "Utterance",
    "Manifest",
    "ManifestError",
    "read_manifest",
    "write_manifest",
    "stats",
    "ManifestStats",
]

SCHEMA_VERSION = 1
SOURCES = ("real-dysarthric", "real-fluent", "synthetic", "lecture")
LABEL_KINDS = ("human", "pseudo")


class ManifestError(ValueError):
    """Malformed manifest file or violated manifest invariant."""


@dataclass(frozen=True)
class Utterance:
    """One audio segment with its transcript and provenance."""

    id: str
    audio_path: str
    transcript: str
    duration_s: float
    source: str
    label_kind: str
    severity_tag: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("utterance id must be nonempty")
        if not (self.duration_s > 0):
            raise ValueError(f"duration_s must be positive, got {self.duration_s!r}")
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}, expected one of {SOURCES}")
        if self.label_kind not in LABEL_KINDS:
            raise ValueError(f"unknown label_kind {self.label_kind!r}, expected one of {LABEL_KINDS}")


@dataclass
class Manifest:
    """Ordered collection of utterances representing one dataset split."""

    name: str
    utterances: list[Utterance] = field(default_factory=list)
    created_by: str = ""

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for u in self.utterances:
            if u.id in seen:
                raise ManifestError(f"duplicate utterance id {u.id!r} in manifest {self.name!r}")
            seen.add(u.id)

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self) -> Iterator[Utterance]:
        return iter(self.utterances)

    @property
    def total_duration_s(self) -> float:
        return sum(u.duration_s for u in self.utterances)

    def by_id(self) -> dict[str, Utterance]:
        return {u.id: u for u in self.utterances}


_REQUIRED_FIELDS = ("id", "audio_path", "transcript", "duration_s", "source", "label_kind")


def _utterance_to_record(u: Utterance) -> dict:
    rec = {
        "id": u.id,
        "audio_path": u.audio_path,
        "transcript": u.transcript,
        "duration_s": u.duration_s,
        "source": u.source,
        "label_kind": u.label_kind,
    }
    if u.severity_tag is not None:
        rec["severity_tag"] = u.severity_tag
    rec["schema_version"] = SCHEMA_VERSION
    return rec


def _utterance_from_record(rec: dict, lineno: int) -> Utterance:
    for name in _REQUIRED_FIELDS:
        if name not in rec:
            raise ManifestError(f"line {lineno}: {name} missing")
    version = rec.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ManifestError(f"line {lineno}: unsupported schema_version {version!r}")
    duration = rec["duration_s"]
    if not isinstance(duration, (int, float)) or isinstance(duration, bool):
        raise ManifestError(f"line {lineno}: duration_s must be a number")
    try:
        return Utterance(
            id=str(rec["id"]),
            audio_path=str(rec["audio_path"]),
            transcript=str(rec["transcript"]),
            duration_s=float(duration),
            source=str(rec["source"]),
            label_kind=str(rec["label_kind"]),
            severity_tag=rec.get("severity_tag"),
        )
    except ValueError as exc:
        raise ManifestError(f"line {lineno}: {exc}") from exc


def read_manifest(path: str | Path) -> Manifest:
    """Parse a manifest file, preserving utterance order.

    Malformed lines raise :class:`ManifestError` naming the line number and
    the offending field.
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc

    name = path.stem
    created_by = ""
    utterances: list[Utterance] = []
    for lineno, line in enumerate(raw.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"line {lineno}: invalid record ({exc.msg})") from exc
        if not isinstance(rec, dict):
            raise ManifestError(f"line {lineno}: record must be an object")
        if "manifest" in rec and lineno == 1:
            name = str(rec["manifest"])
            created_by = str(rec.get("created_by", ""))
            continue
        utterances.append(_utterance_from_record(rec, lineno))
    return Manifest(name=name, utterances=utterances, created_by=created_by)


def write_manifest(m: Manifest, path: str | Path) -> None:
    """Serialize a manifest; identical manifests produce identical bytes."""
    path = Path(path)
    lines = [json.dumps({"manifest": m.name, "created_by": m.created_by, "schema_version": SCHEMA_VERSION}, ensure_ascii=False)]
    lines.extend(json.dumps(_utterance_to_record(u), ensure_ascii=False) for u in m.utterances)
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise ManifestError(f"cannot write manifest {path}: {exc}") from exc


@dataclass(frozen=True)
class ManifestStats:
    segments: int
    total_duration_s: float
    words: int
    chars: int

    @property
    def total_duration_min(self) -> float:
        return self.total_duration_s / 60.0


def stats(m: Manifest, policy: NormalizationPolicy = DEFAULT_POLICY) -> ManifestStats:
    """Segment, duration, word and character totals of a manifest.

    Words are whitespace tokens of the normalized transcripts; the character
    count is the length of each normalized transcript, inter-word spaces
    included, matching the units used for CER.
    """
    words = 0
    chars = 0
    for u in m.utterances:
        norm = normalize(u.transcript, policy)
        words += len(norm.split())
        chars += len(norm)
    return ManifestStats(
        segments=len(m.utterances),
        total_duration_s=m.total_duration_s,
        words=words,
        chars=chars,
    )
