"""Plan construction, round-robin balance, and resumable execution."""

import random

import pytest

from dyspeech.clients import RemoteError
from dyspeech.embeddings import SEVERITY_PRESETS
from dyspeech.mockworld import MockTtsService, MockWorldConfig
from dyspeech.scheduler import (
    CHECKPOINT_BEST,
    CHECKPOINT_CO_TRAINED,
    CheckpointRef,
    ExecutionAborted,
    PlanError,
    SynthesisJob,
    build_plan,
    execute_plan,
    read_plan,
    write_plan,
)
from dyspeech.textselect import SentenceCandidate


def _sentences(n):
    return [SentenceCandidate(i + 1, f"mondat száma {i + 1} ebben a tesztben") for i in range(n)]


def _refs(r):
    return [f"ref-{i:03d}" for i in range(r)]


def _best():
    return CheckpointRef(CHECKPOINT_BEST)


# --- planning -------------------------------------------------------------------


def test_round_robin_exact_division():
    plan = build_plan(_sentences(4), _refs(2), _best())
    assert list(plan.reference_usage().values()) == [2, 2]


def test_round_robin_assignment_order():
    plan = build_plan(_sentences(5), _refs(3), _best())
    assert [j.reference_id for j in plan.jobs] == [
        "ref-000", "ref-001", "ref-002", "ref-000", "ref-001",
    ]


def test_single_sentence_large_pool():
    plan = build_plan(_sentences(1), _refs(195), _best())
    usage = plan.reference_usage()
    assert sum(usage.values()) == 1
    assert usage["ref-000"] == 1


def test_usage_counts_for_full_scale_plan():
    plan = build_plan(_sentences(5000), _refs(195), _best())
    usage = set(plan.reference_usage().values())
    assert usage == {25, 26}  # floor(5000/195) and ceil


def test_balance_over_random_sweep():
    rng = random.Random(17)
    cases = [(rng.randint(1, 400), rng.randint(1, 60)) for _ in range(30)]
    for n, r in cases:
        plan = build_plan(_sentences(n), _refs(r), _best())
        counts = list(plan.reference_usage().values())
        assert max(counts) - min(counts) <= 1
        assert set(counts) <= {n // r, -(-n // r)}


def test_plan_requires_inputs():
    with pytest.raises(PlanError):
        build_plan([], _refs(3), _best())
    with pytest.raises(PlanError):
        build_plan(_sentences(3), [], _best())


def test_severity_only_with_co_trained_checkpoint():
    with pytest.raises(ValueError, match="severity"):
        build_plan(_sentences(1), _refs(1), _best(), severity=SEVERITY_PRESETS["A"])
    with pytest.raises(ValueError, match="severity"):
        build_plan(_sentences(1), _refs(1), CheckpointRef(CHECKPOINT_CO_TRAINED))
    plan = build_plan(
        _sentences(1), _refs(1), CheckpointRef(CHECKPOINT_CO_TRAINED), severity=SEVERITY_PRESETS["A"]
    )
    assert plan.jobs[0].severity_tag == "co-trained-A"


def test_default_generation_parameters():
    job = build_plan(_sentences(1), _refs(1), _best()).jobs[0]
    assert job.temperature == 0.9
    assert job.repetition_penalty == 6.0


def test_plan_file_round_trip_and_byte_stability(tmp_path):
    plan = build_plan(
        _sentences(7), _refs(3), CheckpointRef(CHECKPOINT_CO_TRAINED, "note"),
        severity=SEVERITY_PRESETS["C"],
    )
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    write_plan(plan, p1)
    write_plan(plan, p2)
    assert p1.read_bytes() == p2.read_bytes()
    back = read_plan(p1)
    assert back == plan
    write_plan(back, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_plan_rejects_job_outside_pool():
    job = SynthesisJob("s1", "text", "ref-x", _best())
    with pytest.raises(PlanError, match="outside the pool"):
        from dyspeech.scheduler import SynthesisPlan

        SynthesisPlan(jobs=(job,), reference_pool=("ref-0",))


# --- execution ------------------------------------------------------------------


class _CountingTts:
    """Wraps the mock TTS, counting calls and failing chosen utterances."""

    def __init__(self, out_dir, fail_ids=()):
        self.inner = MockTtsService(MockWorldConfig(), out_dir)
        self.calls = 0
        self.fail_ids = set(fail_ids)

    def synthesize(self, req):
        self.calls += 1
        if req.utterance_id in self.fail_ids:
            raise RemoteError("internal", f"injected failure for {req.utterance_id}")
        return self.inner.synthesize(req)


def test_execute_happy_path(tmp_path):
    plan = build_plan(_sentences(10), _refs(3), _best())
    tts = _CountingTts(tmp_path)
    result = execute_plan(plan, tts, tmp_path)
    assert len(result.manifest) == 10
    assert result.failures == []
    assert [u.id for u in result.manifest] == [j.sentence_id for j in plan.jobs]
    u = result.manifest.utterances[0]
    assert u.source == "synthetic"
    assert u.severity_tag == CHECKPOINT_BEST
    assert u.transcript == plan.jobs[0].text
    assert u.duration_s > 0


def test_execute_collects_failures(tmp_path):
    plan = build_plan(_sentences(10), _refs(3), _best())
    failing = plan.jobs[2].sentence_id
    tts = _CountingTts(tmp_path, fail_ids={failing})
    result = execute_plan(plan, tts, tmp_path, failure_tolerance=0.2)
    assert len(result.manifest) == 9
    assert [f.sentence_id for f in result.failures] == [failing]
    assert failing not in {u.id for u in result.manifest}


def test_execute_aborts_over_tolerance(tmp_path):
    plan = build_plan(_sentences(10), _refs(2), _best())
    fail = {j.sentence_id for j in plan.jobs[:3]}
    tts = _CountingTts(tmp_path, fail_ids=fail)
    with pytest.raises(ExecutionAborted):
        execute_plan(plan, tts, tmp_path, failure_tolerance=0.05)


def test_execute_resumes_from_existing_output(tmp_path):
    plan = build_plan(_sentences(20), _refs(4), _best())
    half = plan.jobs[:10]
    from dyspeech.scheduler import SynthesisPlan

    first = execute_plan(SynthesisPlan(jobs=half, reference_pool=plan.reference_pool), _CountingTts(tmp_path), tmp_path)
    assert len(first.manifest) == 10

    tts = _CountingTts(tmp_path)
    result = execute_plan(plan, tts, tmp_path)
    assert tts.calls == 10  # only the missing half was synthesized
    assert result.skipped == 10
    assert len(result.manifest) == 20
    assert [u.id for u in result.manifest] == [j.sentence_id for j in plan.jobs]


def test_execute_parallel_output_in_plan_order(tmp_path):
    plan = build_plan(_sentences(30), _refs(5), _best())
    result = execute_plan(plan, _CountingTts(tmp_path), tmp_path, workers=4)
    assert [u.id for u in result.manifest] == [j.sentence_id for j in plan.jobs]
