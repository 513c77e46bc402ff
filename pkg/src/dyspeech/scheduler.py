"""Synthesis planning and execution.

A plan assigns every selected sentence a reference audio (round-robin over
the pool, so usage counts never differ by more than one), a model checkpoint
or severity setting, and generation parameters. Execution drives a TTS
client, tolerates a bounded fraction of failures, skips jobs whose output
already exists, and assembles the synthetic manifest in plan order.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .clients import ServiceError, TtsRequest
from .embeddings import SeveritySetting
from .manifest import Manifest, Utterance
from .textselect import SentenceCandidate

__all__ = [
    "CHECKPOINT_UNDERTRAINED",
    "CHECKPOINT_BEST",
    "CHECKPOINT_OVERTRAINED",
    "CHECKPOINT_CO_TRAINED",
    "KNOWN_CHECKPOINTS",
    "DEFAULT_TRAINING_NOTES",
    "CheckpointRef",
    "SynthesisJob",
    "SynthesisPlan",
    "PlanError",
    "ExecutionAborted",
    "JobFailure",
    "ExecutionResult",
    "build_plan",
    "write_plan",
    "read_plan",
    "execute_plan",
    "PROGRESS_FILENAME",
]

CHECKPOINT_UNDERTRAINED = "FT-Dys-Undertrained"
CHECKPOINT_BEST = "FT-Dys-Best"
CHECKPOINT_OVERTRAINED = "FT-Dys-Overtrained"
CHECKPOINT_CO_TRAINED = "FT-Dys-Co-trained"
KNOWN_CHECKPOINTS = (
    CHECKPOINT_UNDERTRAINED,
    CHECKPOINT_BEST,
    CHECKPOINT_OVERTRAINED,
    CHECKPOINT_CO_TRAINED,
)

# provenance notes recorded alongside plans; training itself is out of scope
DEFAULT_TRAINING_NOTES = {
    CHECKPOINT_UNDERTRAINED: "stopped at 2000 iterations, before the validation-loss minimum",
    CHECKPOINT_BEST: "validation-loss minimum at 3200 iterations",
    CHECKPOINT_OVERTRAINED: "3000 iterations past the validation-loss minimum (6200 total)",
    CHECKPOINT_CO_TRAINED: "joint training on typical and dysarthric speech with two speaker embeddings",
}

PROGRESS_FILENAME = "synthesis_progress.jsonl"

DEFAULT_TEMPERATURE = 0.9
DEFAULT_REPETITION_PENALTY = 6.0


class PlanError(ValueError):
    """Invalid inputs for plan construction or a malformed plan file."""


@dataclass(frozen=True)
class CheckpointRef:
    name: str
    training_note: str = ""

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("checkpoint name must be nonempty")

    @property
    def co_trained(self) -> bool:
        return self.name == CHECKPOINT_CO_TRAINED


@dataclass(frozen=True)
class SynthesisJob:
    sentence_id: str
    text: str
    reference_id: str
    checkpoint: CheckpointRef
    severity: SeveritySetting | None = None
    temperature: float = DEFAULT_TEMPERATURE
    repetition_penalty: float = DEFAULT_REPETITION_PENALTY

    def __post_init__(self) -> None:
        if not (self.temperature > 0):
            raise ValueError("temperature must be positive")
        if self.checkpoint.co_trained and self.severity is None:
            raise ValueError(f"checkpoint {self.checkpoint.name} requires a severity setting")
        if not self.checkpoint.co_trained and self.severity is not None:
            raise ValueError(f"checkpoint {self.checkpoint.name} does not take a severity setting")

    @property
    def severity_tag(self) -> str:
        if self.severity is not None:
            return f"co-trained-{self.severity.name}"
        return self.checkpoint.name


@dataclass(frozen=True)
class SynthesisPlan:
    jobs: tuple[SynthesisJob, ...]
    reference_pool: tuple[str, ...]

    def __post_init__(self) -> None:
        pool = set(self.reference_pool)
        for job in self.jobs:
            if job.reference_id not in pool:
                raise PlanError(f"job {job.sentence_id} references {job.reference_id!r} outside the pool")

    def reference_usage(self) -> dict[str, int]:
        counts = {ref: 0 for ref in self.reference_pool}
        for job in self.jobs:
            counts[job.reference_id] += 1
        return counts


def build_plan(
    sentences: Sequence[SentenceCandidate],
    references: Sequence[str],
    checkpoint: CheckpointRef,
    severity: SeveritySetting | None = None,
    temperature: float = DEFAULT_TEMPERATURE,
    repetition_penalty: float = DEFAULT_REPETITION_PENALTY,
) -> SynthesisPlan:
    """Pure function of (sentences, pool, config): job k gets reference
    k mod R, so every reference is used floor(N/R) or ceil(N/R) times."""
    if not sentences:
        raise PlanError("no sentences to synthesize")
    if not references:
        raise PlanError("empty reference pool")
    refs = tuple(references)
    jobs = tuple(
        SynthesisJob(
            sentence_id=f"s{cand.position:06d}",
            text=cand.text,
            reference_id=refs[k % len(refs)],
            checkpoint=checkpoint,
            severity=severity,
            temperature=temperature,
            repetition_penalty=repetition_penalty,
        )
        for k, cand in enumerate(sentences)
    )
    return SynthesisPlan(jobs=jobs, reference_pool=refs)


def _job_to_record(job: SynthesisJob) -> dict:
    return {
        "sentence_id": job.sentence_id,
        "text": job.text,
        "reference_id": job.reference_id,
        "checkpoint": {"name": job.checkpoint.name, "training_note": job.checkpoint.training_note},
        "severity": None if job.severity is None else {"name": job.severity.name, "weights": list(job.severity.weights)},
        "temperature": job.temperature,
        "repetition_penalty": job.repetition_penalty,
    }


def _job_from_record(rec: dict) -> SynthesisJob:
    sev = rec.get("severity")
    return SynthesisJob(
        sentence_id=rec["sentence_id"],
        text=rec["text"],
        reference_id=rec["reference_id"],
        checkpoint=CheckpointRef(rec["checkpoint"]["name"], rec["checkpoint"].get("training_note", "")),
        severity=None if sev is None else SeveritySetting(sev["name"], tuple(float(w) for w in sev["weights"])),
        temperature=float(rec["temperature"]),
        repetition_penalty=float(rec["repetition_penalty"]),
    )


def write_plan(plan: SynthesisPlan, path: str | Path) -> None:
    """Byte-stable serialization; identical plans yield identical files."""
    payload = {
        "schema_version": 1,
        "reference_pool": list(plan.reference_pool),
        "jobs": [_job_to_record(j) for j in plan.jobs],
    }
    Path(path).write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def read_plan(path: str | Path) -> SynthesisPlan:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise PlanError(f"cannot read plan {path}: {exc}") from exc
    if payload.get("schema_version") != 1:
        raise PlanError(f"{path}: unsupported plan schema_version {payload.get('schema_version')!r}")
    try:
        jobs = tuple(_job_from_record(rec) for rec in payload["jobs"])
        pool = tuple(payload["reference_pool"])
    except (KeyError, TypeError, ValueError) as exc:
        raise PlanError(f"{path}: malformed plan: {exc}") from exc
    return SynthesisPlan(jobs=jobs, reference_pool=pool)


@dataclass(frozen=True)
class JobFailure:
    sentence_id: str
    reason: str


@dataclass
class ExecutionResult:
    manifest: Manifest
    failures: list[JobFailure]
    skipped: int  # jobs satisfied by existing output


class ExecutionAborted(RuntimeError):
    """Too many jobs failed; carries what completed before the stop."""

    def __init__(self, failures: list[JobFailure], tolerance: float, total: int):
        super().__init__(
            f"{len(failures)} of {total} synthesis jobs failed, exceeding tolerance {tolerance:.0%}"
        )
        self.failures = failures


def _load_progress(out_dir: Path) -> dict[str, dict]:
    progress_path = out_dir / PROGRESS_FILENAME
    done: dict[str, dict] = {}
    if progress_path.exists():
        for line in progress_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            done[rec["utterance_id"]] = rec
    return done


def execute_plan(
    plan: SynthesisPlan,
    tts_client,
    out_dir: str | Path,
    manifest_name: str = "synthetic",
    failure_tolerance: float = 0.05,
    workers: int = 1,
) -> ExecutionResult:
    """Run every job through the TTS client and collect the output manifest.

    Completed jobs are recorded in a progress file inside ``out_dir``; a
    re-run skips jobs whose output file still exists, so interrupted
    generation resumes where it stopped. Individual failures are collected,
    and the run aborts only when failures exceed ``failure_tolerance`` of
    the planned jobs. The output manifest is ordered by job index no matter
    the completion order.
    """
    if not (0.0 <= failure_tolerance <= 1.0):
        raise ValueError("failure_tolerance must be in [0, 1]")
    if workers < 1:
        raise ValueError("workers must be at least 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    progress_path = out_dir / PROGRESS_FILENAME
    done = _load_progress(out_dir)

    total = len(plan.jobs)
    max_failures = failure_tolerance * total
    results: dict[int, dict] = {}
    failures: list[JobFailure] = []
    skipped = 0
    lock = threading.Lock()
    stop = threading.Event()

    pending: list[tuple[int, SynthesisJob]] = []
    for k, job in enumerate(plan.jobs):
        prior = done.get(job.sentence_id)
        if prior is not None and Path(prior["audio_path"]).exists():
            results[k] = prior
            skipped += 1
        else:
            pending.append((k, job))

    def run_one(item: tuple[int, SynthesisJob]) -> None:
        k, job = item
        if stop.is_set():
            return
        req = TtsRequest(
            utterance_id=job.sentence_id,
            text=job.text,
            reference_id=job.reference_id,
            checkpoint=job.checkpoint.name,
            severity_weights=None if job.severity is None else job.severity.weights,
            temperature=job.temperature,
            repetition_penalty=job.repetition_penalty,
        )
        try:
            resp = tts_client.synthesize(req)
        except ServiceError as exc:
            with lock:
                failures.append(JobFailure(job.sentence_id, str(exc)))
                if len(failures) > max_failures:
                    stop.set()
            return
        rec = {
            "utterance_id": job.sentence_id,
            "audio_path": resp.audio_path,
            "duration_s": resp.duration_s,
            "text": job.text,
            "severity_tag": job.severity_tag,
            "reference_id": job.reference_id,
        }
        with lock:
            results[k] = rec
            with open(progress_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(rec, ensure_ascii=False) + "\n")

    if workers == 1:
        for item in pending:
            run_one(item)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_one, pending))

    if len(failures) > max_failures:
        raise ExecutionAborted(failures, failure_tolerance, total)

    utterances = [
        Utterance(
            id=rec["utterance_id"],
            audio_path=rec["audio_path"],
            transcript=rec["text"],
            duration_s=rec["duration_s"],
            source="synthetic",
            label_kind="human",
            severity_tag=rec["severity_tag"],
        )
        for k, rec in sorted(results.items())
    ]
    manifest = Manifest(name=manifest_name, utterances=utterances, created_by="synth_scheduler")
    return ExecutionResult(manifest=manifest, failures=failures, skipped=skipped)
