"""Build a synthetic speech corpus: select text, plan jobs, execute.

The plan is a pure function of its inputs: every sentence gets a reference
recording round-robin from the pool (usage counts never differ by more than
one), a checkpoint or severity setting, and the generation parameters.
Execution is resumable: re-running skips jobs whose output already exists.

Run from the repository root:  python demos/04_build_synthetic_corpus.py
"""

import random
from collections import Counter
from pathlib import Path

from dyspeech import SEVERITY_PRESETS, CheckpointRef, build_plan, execute_plan, stats
from dyspeech.clients import InProcessClient
from dyspeech.mockworld import MockTtsService, MockWorldConfig
from dyspeech.scheduler import CHECKPOINT_CO_TRAINED, read_plan, write_plan
from dyspeech.textselect import SelectionPolicy, filter_sentences, sample_sentences

out_root = Path(__file__).parent / "output" / "synthetic"
out_root.mkdir(parents=True, exist_ok=True)

# ---------------------------------------------------------------------------
# Text selection: 9-11 word sentences, target alphabet only, no
# abbreviations, then a seeded uniform sample.
# ---------------------------------------------------------------------------
words = ["alma", "körte", "szilva", "barack", "eper", "meggy", "cseresznye",
         "dió", "mák", "retek", "torma", "répa", "uborka"]
rng = random.Random(31)
corpus = []
for _ in range(300):
    n = rng.randint(6, 14)
    corpus.append(" ".join(rng.choice(words) for _ in range(n)) + ".")
corpus.append("sentences with the NATO acronym never survive the filter.")
corpus.append("rövid mondat.")

policy = SelectionPolicy(min_words=9, max_words=11, sample_size=60, seed=5)
candidates = filter_sentences(corpus, policy)
selected = sample_sentences(candidates, policy)
print(f"{len(corpus)} corpus lines -> {len(candidates)} candidates -> {len(selected)} sampled")

# ---------------------------------------------------------------------------
# Plan: round-robin references from the real training recordings, severity C
# through the co-trained checkpoint, standard generation parameters.
# ---------------------------------------------------------------------------
references = [f"train-{i:03d}" for i in range(13)]
plan = build_plan(
    selected,
    references,
    CheckpointRef(CHECKPOINT_CO_TRAINED),
    severity=SEVERITY_PRESETS["C"],
)
usage = Counter(plan.reference_usage().values())
print(f"planned {len(plan.jobs)} jobs; reference usage counts: {dict(usage)}")
plan_path = out_root / "plan_C.json"
write_plan(plan, plan_path)
assert read_plan(plan_path) == plan  # byte-stable, lossless plan files

# ---------------------------------------------------------------------------
# Execute against the mock TTS. The client speaks the same wire schema a
# subprocess server would; swap in a PipeClient to drive a real service.
# ---------------------------------------------------------------------------
audio_dir = out_root / "audio_C"
client = InProcessClient(tts=MockTtsService(MockWorldConfig(seed=3), audio_dir))
result = execute_plan(plan, client, audio_dir, manifest_name="synthetic-C")
s = stats(result.manifest)
print(f"synthesized {s.segments} utterances, {s.total_duration_min:.1f} min, "
      f"{len(result.failures)} failures")
print(f"severity tags: {sorted({u.severity_tag for u in result.manifest})}")

# re-running the same plan touches nothing: every job's output exists
again = execute_plan(plan, client, audio_dir, manifest_name="synthetic-C")
print(f"re-run: {again.skipped} jobs skipped, {len(again.manifest)} utterances unchanged")
