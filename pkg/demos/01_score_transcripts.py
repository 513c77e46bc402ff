"""Scoring tour: normalization, alignment, pooled WER/CER, bootstrap CIs.

Run from the repository root:  python demos/01_score_transcripts.py
"""

from dyspeech import (
    NormalizationPolicy,
    align,
    bootstrap_ci,
    char_score,
    corpus_rate,
    normalize,
    word_score,
)

# ---------------------------------------------------------------------------
# Normalization: scoring never sees raw text. Lowercasing, punctuation
# stripping and whitespace collapsing are all on by default and idempotent.
# ---------------------------------------------------------------------------
raw = "Jó  Reggelt, Világ!"
print("raw:       ", repr(raw))
print("normalized:", repr(normalize(raw)))
print("cased:     ", repr(normalize(raw, NormalizationPolicy(lowercase=False))))
print()

# ---------------------------------------------------------------------------
# Alignment: the op list replays the reference into the hypothesis, and the
# counts behind WER/CER fall out of it.
# ---------------------------------------------------------------------------
ref_words = normalize("ma reggel hideg volt").split()
hyp_words = normalize("ma reggel nagyon hideg vol").split()
alignment = align(ref_words, hyp_words)
print(f"alignment of {ref_words} vs {hyp_words}:")
print(f"  S={alignment.substitutions} D={alignment.deletions} "
      f"I={alignment.insertions} hits={alignment.hits}")
for op in alignment.ops:
    print(f"  {op.kind:>4}  ref={op.ref_index}  hyp={op.hyp_index}")
print()

# ---------------------------------------------------------------------------
# A small evaluation set: per-utterance scores pool into corpus rates.
# The pooled (micro-averaged) rate weighs utterances by length, so one noisy
# short utterance cannot dominate, and rates above 100% stay representable.
# ---------------------------------------------------------------------------
pairs = [
    ("u01", "ma reggel hideg volt a város felett", "ma reggel hideg volt a város felett"),
    ("u02", "a vonat késett húsz percet", "a vonat késet húsz perc"),
    ("u03", "este sétáltunk a parton", "este sétáltunk parton"),
    ("u04", "zárva volt a bolt", "nyitva volt a kis bolt"),
]
word_scores = [word_score(uid, ref, hyp) for uid, ref, hyp in pairs]
char_scores = [char_score(uid, ref, hyp) for uid, ref, hyp in pairs]

print(f"{'utt':>4}  {'wer':>6}  {'cer':>6}")
for ws, cs in zip(word_scores, char_scores):
    print(f"{ws.utterance_id:>4}  {ws.errors / ws.ref_units:6.2f}  {cs.errors / cs.ref_units:6.2f}")
print(f"pooled WER {corpus_rate(word_scores):.3f}, pooled CER {corpus_rate(char_scores):.3f}")
print()

# ---------------------------------------------------------------------------
# Percentile bootstrap over utterances: resample the score list, recompute
# the pooled rate, take empirical quantiles. Seeded, hence reproducible.
# ---------------------------------------------------------------------------
ci = bootstrap_ci(char_scores, replicates=1000, alpha=0.05, seed=0)
print(f"CER {ci.point:.3f}, 95% CI [{ci.low:.3f}, {ci.high:.3f}] "
      f"({ci.replicates} replicates, seed {ci.seed})")
