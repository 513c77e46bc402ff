"""Pseudo-label curation: two ASR engines transcribe unlabeled audio, and
utterances where the engines agree within a small character distance are
kept with one engine's output as their label.

Everything runs against the deterministic mock world, so the demo needs no
model runtimes. Run from the repository root:

    python demos/02_curate_pseudo_labels.py
"""

from pathlib import Path

from dyspeech import Manifest, Utterance, stats, write_manifest
from dyspeech.agreement import TranscriptPair, agreement_filter, filter_report
from dyspeech.clients import AsrRequest, TtsRequest
from dyspeech.mockworld import MockAsrService, MockTtsService, MockWorldConfig

out_root = Path(__file__).parent / "output" / "pseudo_labels"
out_root.mkdir(parents=True, exist_ok=True)

# ---------------------------------------------------------------------------
# Fabricate an "unlabeled lecture corpus": mock audio files whose true text
# only the mock world knows. The manifest carries empty transcripts.
# ---------------------------------------------------------------------------
lecture_texts = [
    "a mai előadás témája a jelfeldolgozás alapjai",
    "először a mintavételezés szabályait tekintjük át",
    "a spektrum a jel frekvencia szerinti felbontása",
    "zajos környezetben a becslés bizonytalansága megnő",
    "a szűrő átviteli függvénye határozza meg a választ",
    "gyakorlaton mindenki megépíti a saját rendszerét",
    "a vizsgán a levezetések lépéseit is kérni fogom",
    "jövő héten a visszacsatolt rendszerekkel folytatjuk",
]
world = MockWorldConfig(seed=7)
tts = MockTtsService(world, out_root / "audio")
utterances = []
for i, text in enumerate(lecture_texts):
    uid = f"lecture-{i:03d}"
    resp = tts.synthesize(TtsRequest(utterance_id=uid, text=text, reference_id="mic", checkpoint="raw"))
    utterances.append(Utterance(uid, resp.audio_path, "", resp.duration_s, "lecture", "human"))
lectures = Manifest(name="lectures", utterances=utterances)

# ---------------------------------------------------------------------------
# Two engines with different error behavior transcribe the same audio. The
# engine hint changes the corruption seed, and we give engine B more noise:
# on some utterances the engines will disagree visibly.
# ---------------------------------------------------------------------------
engine_a = MockAsrService(MockWorldConfig(base_char_error_rate=0.02, seed=7))
engine_b = MockAsrService(MockWorldConfig(base_char_error_rate=0.10, seed=7))

pairs = []
for u in lectures:
    a = engine_a.transcribe(AsrRequest(u.audio_path, engine="engine_a")).transcript
    b = engine_b.transcribe(AsrRequest(u.audio_path, engine="engine_b")).transcript
    pairs.append(TranscriptPair(u.id, a, b))

# ---------------------------------------------------------------------------
# Filter: keep utterances whose transcription pair stays within 4 edited
# characters (after normalization) and adopt engine A's text as the label.
# ---------------------------------------------------------------------------
report = filter_report(pairs, lectures, max_edit=4)
print("edit-distance histogram:")
for d in sorted(report.histogram):
    print(f"  d={d:>2}: {'#' * report.histogram[d]}")
print(f"retention at max_edit=4: {report.retention:.0%} "
      f"({report.kept}/{report.total}, {report.kept_duration_s:.1f}s of audio)")

kept = agreement_filter(pairs, lectures, max_edit=4, label_source="engine_a")
for u in kept:
    print(f"  kept {u.id} [{u.label_kind}]: {u.transcript}")

manifest_path = out_root / "lectures_pseudo.jsonl"
write_manifest(kept, manifest_path)
s = stats(kept)
print(f"wrote {s.segments} pseudo-labeled utterances "
      f"({s.words} words, {s.chars} chars) -> {manifest_path}")
