"""Mix fine-tuning data at a fixed ratio, evaluate, compare, export plot data.

The storyline: a tiny real dysarthric set plus two large synthetic sets are
mixed while holding the real/synthetic duration ratio constant; then two ASR
"systems" (a noisier and a cleaner mock backend standing in for before/after
fine-tuning) are evaluated on the same eval set and compared.

Run from the repository root:  python demos/05_mix_and_evaluate.py
"""

import random
from pathlib import Path

from dyspeech import (
    CheckpointRef,
    ExperimentConfig,
    Manifest,
    MixSpec,
    Utterance,
    build_plan,
    compare,
    describe,
    evaluate,
    execute_plan,
    mix,
    report_render,
    severity_rank,
)
from dyspeech.clients import InProcessClient
from dyspeech.harness import CiSettings, write_report
from dyspeech.mockworld import MockAsrService, MockTtsService, MockWorldConfig
from dyspeech.scheduler import CHECKPOINT_BEST, CHECKPOINT_OVERTRAINED
from dyspeech.textselect import SentenceCandidate

out_root = Path(__file__).parent / "output" / "experiment"
out_root.mkdir(parents=True, exist_ok=True)

words = ["alma", "körte", "szilva", "barack", "eper", "meggy", "dió", "mák", "retek"]
rng = random.Random(11)


def _sentences(n, offset=0):
    return [
        SentenceCandidate(offset + i + 1, " ".join(rng.choice(words) for _ in range(9)))
        for i in range(n)
    ]


# ---------------------------------------------------------------------------
# Ingredients: a small real set and two synthetic sets from different
# checkpoints of the personalized voice.
# ---------------------------------------------------------------------------
real = Manifest(
    name="train-real",
    utterances=[
        Utterance(f"real-{i:03d}", f"real/{i}.wav", " ".join(rng.choice(words) for _ in range(6)),
                  6.5, "real-dysarthric", "human")
        for i in range(30)
    ],
)

world = MockWorldConfig(seed=23)
synthetic_sets = []
for checkpoint, n in ((CHECKPOINT_BEST, 90), (CHECKPOINT_OVERTRAINED, 90)):
    audio_dir = out_root / f"audio_{checkpoint}"
    plan = build_plan(_sentences(n, offset=1000 * len(synthetic_sets)),
                      [u.id for u in real], CheckpointRef(checkpoint))
    client = InProcessClient(tts=MockTtsService(world, audio_dir))
    result = execute_plan(plan, client, audio_dir, manifest_name=f"synth-{checkpoint}")
    synthetic_sets.append(result.manifest)

# ---------------------------------------------------------------------------
# Mixing: hold real/synthetic duration ratio constant. With two synthetic
# sets the real side is repeated so the ratio survives.
# ---------------------------------------------------------------------------
synth_total = sum(m.total_duration_s for m in synthetic_sets[:1])
target = real.total_duration_s / synth_total
mixed = mix(MixSpec(real=real, synthetic=tuple(synthetic_sets), target_ratio=target))
print(f"target ratio {target:.4f}; composition of {mixed.name}:")
for row in describe(mixed).rows:
    print(f"  {row.source:>15} {str(row.severity_tag):>20}  {row.count:>4} utts  {row.duration_s:7.1f}s")

# ---------------------------------------------------------------------------
# Evaluation set: synthetic audio scored against its own input text. Two
# backends stand in for the before/after systems.
# ---------------------------------------------------------------------------
eval_plan = build_plan(_sentences(80, offset=9000), [u.id for u in real], CheckpointRef(CHECKPOINT_BEST))
eval_dir = out_root / "audio_eval"
eval_client = InProcessClient(tts=MockTtsService(world, eval_dir))
eval_manifest = execute_plan(eval_plan, eval_client, eval_dir, manifest_name="eval-set").manifest

reports = {}
for system, noise in (("zero-shot", 0.30), ("fine-tuned", 0.08)):
    config = ExperimentConfig(
        name=system,
        eval_manifests=(("eval-set", eval_manifest),),
        ci=CiSettings(replicates=1000, alpha=0.05, seed=1),
        metadata={"mixed_training_manifest": mixed.name},
    )
    backend = InProcessClient(asr=MockAsrService(MockWorldConfig(base_char_error_rate=noise, seed=17)))
    reports[system] = evaluate(config, backend)
    row = reports[system].rows[0]
    print(f"{system:>10}: WER {row.wer:.3f}  CER {row.cer:.3f} "
          f"[{row.cer_ci.low:.3f}, {row.cer_ci.high:.3f}]")
    write_report(reports[system], out_root / f"report_{system}.json")

# ---------------------------------------------------------------------------
# Comparison: deltas plus the outside-the-baseline-interval flag, the signal
# that an improvement is larger than resampling noise.
# ---------------------------------------------------------------------------
delta = compare(reports["zero-shot"], reports["fine-tuned"]).rows[0]
print(f"CER delta {delta.cer_delta:+.3f} ({delta.cer_relative:+.1%} relative), "
      f"outside baseline CI: {delta.cer_outside_baseline_ci}")

# ranking by CER works on any named report collection
ranked = severity_rank([("zero-shot", reports["zero-shot"]), ("fine-tuned", reports["fine-tuned"])],
                       expected_order=["fine-tuned", "zero-shot"])
print(f"ranking verdict: {ranked.verdict}; order: {[name for name, _ in ranked.ranking]}")

# plot-ready tuples: label, point, low, high
plot_path = out_root / "cer_plot_data.tsv"
plot_path.write_text(report_render(reports["fine-tuned"], format="plot-data"), encoding="utf-8")
print(f"plot data -> {plot_path}")
