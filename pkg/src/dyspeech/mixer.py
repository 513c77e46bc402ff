"""Compose fine-tuning manifests from real and synthetic sets at a fixed
real/synthetic duration ratio.

Because the real side is tiny (minutes against hours of synthetic speech),
holding the ratio while adding synthetic sets means either repeating the
real utterances or subsampling the synthetic pool; both modes are provided
and deterministic under a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import numpy as np

from .manifest import Manifest, Utterance

__all__ = [
    "MixSpec",
    "MixError",
    "mix",
    "describe",
    "CompositionReport",
    "CompositionRow",
    "RATIO_TOLERANCE",
]

RATIO_TOLERANCE = 0.05

BALANCE_MODES = ("repeat_real", "subsample_synthetic")


class MixError(ValueError):
    """The requested ratio cannot be met with the given manifests."""


@dataclass(frozen=True)
class MixSpec:
    real: Manifest
    synthetic: tuple[Manifest, ...]
    target_ratio: float  # real duration / synthetic duration
    balance_mode: str = "repeat_real"
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.target_ratio > 0):
            raise ValueError("target_ratio must be positive")
        if self.balance_mode not in BALANCE_MODES:
            raise ValueError(f"balance_mode must be one of {BALANCE_MODES}")


def _qualified(u: Utterance, set_name: str) -> Utterance:
    # synthetic sets generated from the same sentence list share utterance
    # ids, so ids are namespaced by their source set inside a mix
    return replace(u, id=f"{set_name}:{u.id}")


def _repeat_real(spec: MixSpec, real_dur: float, synth_dur: float) -> list[Utterance]:
    repeats = max(1, round(spec.target_ratio * synth_dur / real_dur))
    achieved = repeats * real_dur / synth_dur
    if abs(achieved - spec.target_ratio) / spec.target_ratio > RATIO_TOLERANCE:
        raise MixError(
            f"repeating real {repeats}x gives ratio {achieved:.4f}, "
            f"outside {RATIO_TOLERANCE:.0%} of target {spec.target_ratio:.4f}"
        )
    out: list[Utterance] = []
    for rep in range(1, repeats + 1):
        for u in spec.real.utterances:
            out.append(u if rep == 1 else replace(u, id=f"{u.id}.rep{rep}"))
    return out


def _subsample_synthetic(spec: MixSpec, real_dur: float, pool: list[Utterance]) -> list[Utterance]:
    wanted = real_dur / spec.target_ratio
    rng = np.random.default_rng(spec.seed)
    order = rng.permutation(len(pool))
    chosen: list[int] = []
    acc = 0.0
    for idx in order:
        u = pool[idx]
        if abs(acc + u.duration_s - wanted) <= abs(acc - wanted):
            chosen.append(int(idx))
            acc += u.duration_s
        if acc >= wanted:
            break
    if acc <= 0 or abs(real_dur / acc - spec.target_ratio) / spec.target_ratio > RATIO_TOLERANCE:
        raise MixError(
            f"subsampling reached ratio {real_dur / acc if acc else float('inf'):.4f}, "
            f"outside {RATIO_TOLERANCE:.0%} of target {spec.target_ratio:.4f}"
        )
    keep = set(chosen)
    return [u for i, u in enumerate(pool) if i in keep]


def mix(spec: MixSpec) -> Manifest:
    """Build the fine-tuning manifest.

    ``repeat_real`` duplicates the real set (copies get suffixed ids) until
    the ratio is met; ``subsample_synthetic`` drops synthetic utterances
    uniformly at random instead. The achieved ratio must land within 5% of
    the target or the mix fails. With no synthetic sets the real manifest
    passes through unchanged.
    """
    if not spec.real.utterances:
        raise MixError("real manifest is empty")
    for m in spec.synthetic:
        if not m.utterances:
            raise MixError(f"synthetic manifest {m.name!r} is empty")

    if not spec.synthetic:
        return Manifest(
            name=f"mix-{spec.real.name}",
            utterances=list(spec.real.utterances),
            created_by="dataset_mixer",
        )

    names = [m.name for m in spec.synthetic]
    if len(set(names)) != len(names):
        raise MixError(f"synthetic manifests must have distinct names, got {names}")

    real_dur = spec.real.total_duration_s
    pool = [_qualified(u, m.name) for m in spec.synthetic for u in m.utterances]
    synth_dur = sum(u.duration_s for u in pool)

    if spec.balance_mode == "repeat_real":
        real_part = _repeat_real(spec, real_dur, synth_dur)
        synth_part = pool
    else:
        real_part = list(spec.real.utterances)
        synth_part = _subsample_synthetic(spec, real_dur, pool)

    return Manifest(
        name=f"mix-{spec.real.name}",
        utterances=real_part + synth_part,
        created_by="dataset_mixer",
    )


@dataclass(frozen=True)
class CompositionRow:
    source: str
    severity_tag: str | None
    count: int
    duration_s: float


@dataclass(frozen=True)
class CompositionReport:
    rows: tuple[CompositionRow, ...]

    @property
    def total_count(self) -> int:
        return sum(r.count for r in self.rows)

    @property
    def total_duration_s(self) -> float:
        return sum(r.duration_s for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "source": r.source,
                    "severity_tag": r.severity_tag,
                    "count": r.count,
                    "duration_s": r.duration_s,
                }
                for r in self.rows
            ],
            "total_count": self.total_count,
            "total_duration_s": self.total_duration_s,
        }


def describe(m: Manifest) -> CompositionReport:
    """Composition of a manifest: count and duration per (source, severity)."""
    acc: dict[tuple[str, str | None], tuple[int, float]] = {}
    for u in m.utterances:
        key = (u.source, u.severity_tag)
        count, dur = acc.get(key, (0, 0.0))
        acc[key] = (count + 1, dur + u.duration_s)
    rows = tuple(
        CompositionRow(source=k[0], severity_tag=k[1], count=v[0], duration_s=v[1])
        for k, v in sorted(acc.items(), key=lambda kv: (kv[0][0], kv[0][1] or ""))
    )
    return CompositionReport(rows=rows)
