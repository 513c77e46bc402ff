"""Evaluation harness: transcribe manifests, pool WER/CER with bootstrap
intervals, compare systems, rank severities, render report tables.

CER is the primary key throughout (it tracks the manual correction effort
better than WER and is the steadier statistic at this corpus size); WER is
always reported alongside.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .clients import AsrRequest, ServiceError
from .manifest import Manifest, read_manifest
from .metrics import (
    DEFAULT_POLICY,
    ConfidenceInterval,
    NormalizationPolicy,
    bootstrap_ci,
    char_score,
    corpus_rate,
    word_score,
)

__all__ = [
    "CiSettings",
    "ExperimentConfig",
    "EvalRow",
    "MetricReport",
    "EvaluationAborted",
    "evaluate",
    "evaluate_manifest",
    "severity_rank",
    "RankResult",
    "compare",
    "ComparisonRow",
    "ComparisonReport",
    "report_render",
    "write_report",
    "read_report",
    "config_hash",
]


@dataclass(frozen=True)
class CiSettings:
    replicates: int = 1000
    alpha: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one evaluation run.

    ``metadata`` is free-form provenance (e.g. the training hyperparameters
    of the system under test); it is hashed into the report but never
    interpreted.
    """

    name: str
    eval_manifests: tuple[tuple[str, str], ...]  # (label, manifest path)
    asr_backend: dict = field(default_factory=dict)
    engine: str = "default"
    normalization: NormalizationPolicy = DEFAULT_POLICY
    ci: CiSettings = CiSettings()
    failure_tolerance: float = 0.05
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.eval_manifests:
            raise ValueError("config needs at least one evaluation manifest")

    def snapshot(self) -> dict:
        return {
            "name": self.name,
            "eval_manifests": [
                [label, path if isinstance(path, str) else f"<in-memory:{path.name}>"]
                for label, path in self.eval_manifests
            ],
            "asr_backend": self.asr_backend,
            "engine": self.engine,
            "normalization": {
                "lowercase": self.normalization.lowercase,
                "strip_punctuation": self.normalization.strip_punctuation,
                "collapse_whitespace": self.normalization.collapse_whitespace,
            },
            "ci": {"replicates": self.ci.replicates, "alpha": self.ci.alpha, "seed": self.ci.seed},
            "failure_tolerance": self.failure_tolerance,
            "metadata": self.metadata,
        }


def config_hash(snapshot: dict) -> str:
    return hashlib.sha256(json.dumps(snapshot, sort_keys=True, ensure_ascii=False).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EvalRow:
    set_name: str
    n_utterances: int
    word_errors: int
    word_units: int
    char_errors: int
    char_units: int
    wer: float
    cer: float
    wer_ci: ConfidenceInterval
    cer_ci: ConfidenceInterval


@dataclass(frozen=True)
class MetricReport:
    name: str
    rows: tuple[EvalRow, ...]
    config_snapshot: dict
    config_hash: str

    def row(self, set_name: str) -> EvalRow:
        for r in self.rows:
            if r.set_name == set_name:
                return r
        raise KeyError(set_name)

    @property
    def pooled_cer(self) -> float:
        units = sum(r.char_units for r in self.rows)
        if units == 0:
            raise ValueError("report has no character units")
        return sum(r.char_errors for r in self.rows) / units

    @property
    def pooled_wer(self) -> float:
        units = sum(r.word_units for r in self.rows)
        if units == 0:
            raise ValueError("report has no word units")
        return sum(r.word_errors for r in self.rows) / units


class EvaluationAborted(RuntimeError):
    """Too many backend failures; carries the rows finished so far."""

    def __init__(self, message: str, partial_rows: tuple[EvalRow, ...]):
        super().__init__(message)
        self.partial_rows = partial_rows


def evaluate_manifest(
    m: Manifest,
    client,
    set_name: str | None = None,
    engine: str = "default",
    policy: NormalizationPolicy = DEFAULT_POLICY,
    ci: CiSettings = CiSettings(),
    failure_tolerance: float = 0.05,
) -> EvalRow:
    """Transcribe one manifest and pool its scores.

    Raises :class:`EvaluationAborted` when backend failures exceed the
    tolerated fraction of utterances.
    """
    word_scores = []
    char_scores = []
    failures: list[str] = []
    max_failures = failure_tolerance * len(m.utterances)
    for u in m.utterances:
        try:
            resp = client.transcribe(AsrRequest(audio_path=u.audio_path, engine=engine))
        except ServiceError as exc:
            failures.append(f"{u.id}: {exc}")
            if len(failures) > max_failures:
                raise EvaluationAborted(
                    f"{len(failures)} backend failures on manifest {m.name!r} "
                    f"(tolerance {failure_tolerance:.0%}); first: {failures[0]}",
                    partial_rows=(),
                ) from exc
            continue
        word_scores.append(word_score(u.id, u.transcript, resp.transcript, policy))
        char_scores.append(char_score(u.id, u.transcript, resp.transcript, policy))

    wer_ci = bootstrap_ci(word_scores, ci.replicates, ci.alpha, ci.seed)
    cer_ci = bootstrap_ci(char_scores, ci.replicates, ci.alpha, ci.seed)
    return EvalRow(
        set_name=set_name if set_name is not None else m.name,
        n_utterances=len(word_scores),
        word_errors=sum(s.errors for s in word_scores),
        word_units=sum(s.ref_units for s in word_scores),
        char_errors=sum(s.errors for s in char_scores),
        char_units=sum(s.ref_units for s in char_scores),
        wer=corpus_rate(word_scores),
        cer=corpus_rate(char_scores),
        wer_ci=wer_ci,
        cer_ci=cer_ci,
    )


def evaluate(config: ExperimentConfig, client=None) -> MetricReport:
    """Run the full evaluation described by a config.

    Every listed manifest is transcribed through the ASR backend and scored
    against its own transcripts; the report embeds the config snapshot and
    its hash so results stay traceable to their settings.
    """
    if client is None:
        from .cli import build_asr_client  # default factory; tests inject clients directly

        client = build_asr_client(config.asr_backend)
    rows: list[EvalRow] = []
    for label, path in config.eval_manifests:
        m = path if isinstance(path, Manifest) else read_manifest(path)
        try:
            rows.append(
                evaluate_manifest(
                    m,
                    client,
                    set_name=label,
                    engine=config.engine,
                    policy=config.normalization,
                    ci=config.ci,
                    failure_tolerance=config.failure_tolerance,
                )
            )
        except EvaluationAborted as exc:
            raise EvaluationAborted(str(exc), partial_rows=tuple(rows)) from exc
    snapshot = config.snapshot()
    return MetricReport(
        name=config.name,
        rows=tuple(rows),
        config_snapshot=snapshot,
        config_hash=config_hash(snapshot),
    )


@dataclass(frozen=True)
class RankResult:
    ranking: tuple[tuple[str, float], ...]  # (name, pooled CER) ascending
    verdict: str  # "monotonic" | "tie" | "violations"
    violations: tuple[tuple[str, str], ...]


def severity_rank(
    reports: Sequence[tuple[str, MetricReport]],
    expected_order: Sequence[str] | None = None,
) -> RankResult:
    """Order systems by pooled CER and judge the order against expectation.

    The verdict is "monotonic" when the observed order equals the expected
    one (default: the input order), "tie" when equal rates had to be broken
    by name, and "violations" otherwise, listing each expected-before pair
    that came out strictly reversed.
    """
    if len(reports) < 2:
        raise ValueError("need at least two reports to rank")
    names = [name for name, _ in reports]
    if len(set(names)) != len(names):
        raise ValueError("report names must be unique")
    expected = list(expected_order) if expected_order is not None else list(names)
    if sorted(expected) != sorted(names):
        raise ValueError("expected_order must be a permutation of the report names")

    cer = {name: report.pooled_cer for name, report in reports}
    ranking = tuple(sorted(((n, cer[n]) for n in names), key=lambda item: (item[1], item[0])))

    violations = tuple(
        (x, y)
        for i, x in enumerate(expected)
        for y in expected[i + 1 :]
        if cer[x] > cer[y]
    )
    ties = len(set(cer.values())) < len(names)
    if violations:
        verdict = "violations"
    elif ties:
        verdict = "tie"
    else:
        verdict = "monotonic"
    return RankResult(ranking=ranking, verdict=verdict, violations=violations)


@dataclass(frozen=True)
class ComparisonRow:
    set_name: str
    wer_delta: float
    wer_relative: float | None
    cer_delta: float
    cer_relative: float | None
    wer_outside_baseline_ci: bool
    cer_outside_baseline_ci: bool


@dataclass(frozen=True)
class ComparisonReport:
    baseline: str
    candidate: str
    rows: tuple[ComparisonRow, ...]

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "candidate": self.candidate,
            "rows": [
                {
                    "set": r.set_name,
                    "wer_delta": r.wer_delta,
                    "wer_relative": r.wer_relative,
                    "cer_delta": r.cer_delta,
                    "cer_relative": r.cer_relative,
                    "wer_outside_baseline_ci": r.wer_outside_baseline_ci,
                    "cer_outside_baseline_ci": r.cer_outside_baseline_ci,
                }
                for r in self.rows
            ],
        }


def _relative(candidate: float, baseline: float) -> float | None:
    if baseline == 0:
        return None
    return (candidate - baseline) / baseline


def compare(baseline: MetricReport, candidate: MetricReport) -> ComparisonReport:
    """Per-set deltas of candidate against baseline.

    Relative deltas are (candidate - baseline) / baseline on point
    estimates; a set is flagged when the candidate's point lands outside
    the baseline's confidence interval.
    """
    base_sets = {r.set_name for r in baseline.rows}
    cand_sets = {r.set_name for r in candidate.rows}
    if base_sets != cand_sets:
        raise ValueError(f"reports cover different sets: {sorted(base_sets ^ cand_sets)}")
    rows = []
    for b in baseline.rows:
        c = candidate.row(b.set_name)
        rows.append(
            ComparisonRow(
                set_name=b.set_name,
                wer_delta=c.wer - b.wer,
                wer_relative=_relative(c.wer, b.wer),
                cer_delta=c.cer - b.cer,
                cer_relative=_relative(c.cer, b.cer),
                wer_outside_baseline_ci=not (b.wer_ci.low <= c.wer <= b.wer_ci.high),
                cer_outside_baseline_ci=not (b.cer_ci.low <= c.cer <= b.cer_ci.high),
            )
        )
    return ComparisonReport(baseline=baseline.name, candidate=candidate.name, rows=tuple(rows))


# --- report persistence -----------------------------------------------------


def _ci_to_dict(ci: ConfidenceInterval) -> dict:
    return {
        "point": ci.point,
        "low": ci.low,
        "high": ci.high,
        "alpha": ci.alpha,
        "replicates": ci.replicates,
        "seed": ci.seed,
    }


def _ci_from_dict(d: dict) -> ConfidenceInterval:
    return ConfidenceInterval(
        point=d["point"], low=d["low"], high=d["high"],
        alpha=d["alpha"], replicates=d["replicates"], seed=d["seed"],
    )


def write_report(report: MetricReport, path: str | Path) -> None:
    payload = {
        "schema_version": 1,
        "name": report.name,
        "config_hash": report.config_hash,
        "config": report.config_snapshot,
        "rows": [
            {
                "set": r.set_name,
                "n_utterances": r.n_utterances,
                "word_errors": r.word_errors,
                "word_units": r.word_units,
                "char_errors": r.char_errors,
                "char_units": r.char_units,
                "wer": r.wer,
                "cer": r.cer,
                "wer_ci": _ci_to_dict(r.wer_ci),
                "cer_ci": _ci_to_dict(r.cer_ci),
            }
            for r in report.rows
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def read_report(path: str | Path) -> MetricReport:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("schema_version") != 1:
        raise ValueError(f"{path}: unsupported report schema_version")
    rows = tuple(
        EvalRow(
            set_name=r["set"],
            n_utterances=r["n_utterances"],
            word_errors=r["word_errors"],
            word_units=r["word_units"],
            char_errors=r["char_errors"],
            char_units=r["char_units"],
            wer=r["wer"],
            cer=r["cer"],
            wer_ci=_ci_from_dict(r["wer_ci"]),
            cer_ci=_ci_from_dict(r["cer_ci"]),
        )
        for r in payload["rows"]
    )
    return MetricReport(
        name=payload["name"],
        rows=rows,
        config_snapshot=payload.get("config", {}),
        config_hash=payload.get("config_hash", ""),
    )


# --- rendering ---------------------------------------------------------------

RENDER_FORMATS = ("table", "delimited", "plot-data")


def report_render(report: MetricReport, format: str = "table", metric: str = "cer") -> str:
    """Render a report as a human table, an exact TSV, or plot-ready tuples.

    The delimited and plot-data formats use shortest round-trip float
    representations, so parsing the output recovers the report's numbers
    exactly. Rendering is pure: the same report gives identical bytes.
    """
    if format not in RENDER_FORMATS:
        raise ValueError(f"format must be one of {RENDER_FORMATS}")
    if metric not in ("cer", "wer"):
        raise ValueError("metric must be 'cer' or 'wer'")

    if format == "plot-data":
        lines = []
        for r in report.rows:
            ci = r.cer_ci if metric == "cer" else r.wer_ci
            point = r.cer if metric == "cer" else r.wer
            lines.append(f"{r.set_name}\t{point!r}\t{ci.low!r}\t{ci.high!r}")
        return "\n".join(lines) + "\n"

    if format == "delimited":
        header = "set\tn_utterances\twer\twer_low\twer_high\tcer\tcer_low\tcer_high"
        lines = [header]
        for r in report.rows:
            lines.append(
                f"{r.set_name}\t{r.n_utterances}\t{r.wer!r}\t{r.wer_ci.low!r}\t{r.wer_ci.high!r}"
                f"\t{r.cer!r}\t{r.cer_ci.low!r}\t{r.cer_ci.high!r}"
            )
        return "\n".join(lines) + "\n"

    # column-aligned table, percentages
    headers = ["set", "n", "WER%", "CER%", "CER 95% CI"]
    body = [
        [
            r.set_name,
            str(r.n_utterances),
            f"{100 * r.wer:.2f}",
            f"{100 * r.cer:.2f}",
            f"[{100 * r.cer_ci.low:.2f}, {100 * r.cer_ci.high:.2f}]",
        ]
        for r in report.rows
    ]
    widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h) for i, h in enumerate(headers)]
    def fmt(row: list[str]) -> str:
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
    lines = [f"# report: {report.name}", f"# config_hash: {report.config_hash}", fmt(headers)]
    lines.extend(fmt(row) for row in body)
    return "\n".join(lines) + "\n"
