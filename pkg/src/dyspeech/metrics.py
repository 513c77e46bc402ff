"""Text normalization, edit-distance alignment, WER/CER rates, and bootstrap
confidence intervals.

All functions here are pure: normalization is idempotent, alignment is a
deterministic dynamic program, and the bootstrap takes an explicit seed, so
everything is safe to call from concurrent code.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "NormalizationPolicy",
    "DEFAULT_POLICY",
    "normalize",
    "tokenize",
    "Alignment",
    "AlignOp",
    "align",
    "edit_distance",
    "UtteranceScore",
    "word_score",
    "char_score",
    "utterance_rate",
    "corpus_rate",
    "ConfidenceInterval",
    "bootstrap_ci",
    "DegenerateReferenceError",
    "DegenerateCorpusError",
]

_WS_RE = re.compile(r"\s+")


class DegenerateReferenceError(ValueError):
    """An error rate was requested against an empty reference."""


class DegenerateCorpusError(ValueError):
    """Corpus statistics were requested for no usable utterance scores."""


@dataclass(frozen=True)
class NormalizationPolicy:
    """How raw transcripts are canonicalized before any distance is computed.

    Punctuation (Unicode category P) is replaced by a space rather than
    deleted so that stripping never glues two words together. ``charset_hint``
    does not affect normalization; it only feeds :meth:`off_charset`
    diagnostics.
    """

    lowercase: bool = True
    strip_punctuation: bool = True
    collapse_whitespace: bool = True
    charset_hint: frozenset[str] = frozenset()

    def off_charset(self, text: str) -> set[str]:
        """Characters of the normalized text outside ``charset_hint``.

        Returns the empty set when no hint is configured.
        """
        if not self.charset_hint:
            return set()
        return {c for c in normalize(text, self) if c not in self.charset_hint and c != " "}


DEFAULT_POLICY = NormalizationPolicy()


def normalize(text: str, policy: NormalizationPolicy = DEFAULT_POLICY) -> str:
    """Apply the policy to raw text. Idempotent and deterministic.

    The result never carries leading/trailing whitespace; with
    ``collapse_whitespace`` enabled, interior runs become single spaces.
    """
    out = unicodedata.normalize("NFC", text)
    if policy.lowercase:
        out = out.lower()
    if policy.strip_punctuation:
        out = "".join(" " if unicodedata.category(c).startswith("P") else c for c in out)
    if policy.collapse_whitespace:
        out = _WS_RE.sub(" ", out)
    return out.strip()


def tokenize(text: str, policy: NormalizationPolicy = DEFAULT_POLICY) -> list[str]:
    """Word units of a raw text: whitespace tokens of the normalized form.

    This is the single word tokenizer shared by WER scoring, manifest
    statistics, and sentence-length filtering.
    """
    return normalize(text, policy).split()


class AlignOp(NamedTuple):
    kind: str  # "hit" | "sub" | "del" | "ins"
    ref_index: int | None
    hyp_index: int | None


@dataclass(frozen=True)
class Alignment:
    """Minimal-cost alignment of a hypothesis against a reference.

    Counts satisfy ``hits + substitutions + deletions == len(ref)`` and
    ``hits + substitutions + insertions == len(hyp)``; the op list replays
    the reference into the hypothesis.
    """

    substitutions: int
    deletions: int
    insertions: int
    hits: int
    ops: tuple[AlignOp, ...]

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def ref_length(self) -> int:
        return self.hits + self.substitutions + self.deletions

    @property
    def hyp_length(self) -> int:
        return self.hits + self.substitutions + self.insertions


def edit_distance(ref: Sequence, hyp: Sequence) -> int:
    """Levenshtein distance with unit costs, two-row dynamic program."""
    m, n = len(ref), len(hyp)
    if m == 0:
        return n
    if n == 0:
        return m
    prev = list(range(n + 1))
    for i in range(1, m + 1):
        cur = [i] + [0] * n
        ri = ref[i - 1]
        for j in range(1, n + 1):
            cost = 0 if ri == hyp[j - 1] else 1
            a = prev[j] + 1
            b = cur[j - 1] + 1
            c = prev[j - 1] + cost
            if b < a:
                a = b
            if c < a:
                a = c
            cur[j] = a
        prev = cur
    return prev[n]


def align(ref: Sequence, hyp: Sequence) -> Alignment:
    """Full alignment with backtrace. Ties prefer diagonal, then deletion.

    Accepts any unit sequences (words as lists of tokens, characters as
    plain strings). Empty sequences are allowed.
    """
    m, n = len(ref), len(hyp)
    # dist[i][j] = distance between ref[:i] and hyp[:j]
    dist = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        dist[i][0] = i
    for j in range(n + 1):
        dist[0][j] = j
    for i in range(1, m + 1):
        ri = ref[i - 1]
        row = dist[i]
        above = dist[i - 1]
        for j in range(1, n + 1):
            cost = 0 if ri == hyp[j - 1] else 1
            a = above[j] + 1
            b = row[j - 1] + 1
            c = above[j - 1] + cost
            if b < a:
                a = b
            if c < a:
                a = c
            row[j] = a

    ops: list[AlignOp] = []
    subs = dels = ins = hits = 0
    i, j = m, n
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0 and here == dist[i - 1][j - 1] + (0 if ref[i - 1] == hyp[j - 1] else 1):
            if ref[i - 1] == hyp[j - 1]:
                ops.append(AlignOp("hit", i - 1, j - 1))
                hits += 1
            else:
                ops.append(AlignOp("sub", i - 1, j - 1))
                subs += 1
            i -= 1
            j -= 1
        elif i > 0 and here == dist[i - 1][j] + 1:
            ops.append(AlignOp("del", i - 1, None))
            dels += 1
            i -= 1
        else:
            ops.append(AlignOp("ins", None, j - 1))
            ins += 1
            j -= 1
    ops.reverse()
    return Alignment(substitutions=subs, deletions=dels, insertions=ins, hits=hits, ops=tuple(ops))


@dataclass(frozen=True)
class UtteranceScore:
    """Per-utterance error tally feeding corpus pooling and the bootstrap."""

    utterance_id: str
    ref_units: int
    errors: int
    unit_kind: str  # "word" | "character"

    def __post_init__(self) -> None:
        if self.errors < 0 or self.ref_units < 0:
            raise ValueError("errors and ref_units must be non-negative")
        if self.unit_kind not in ("word", "character"):
            raise ValueError(f"unknown unit_kind: {self.unit_kind!r}")


def word_score(
    utterance_id: str,
    ref_text: str,
    hyp_text: str,
    policy: NormalizationPolicy = DEFAULT_POLICY,
) -> UtteranceScore:
    """Word-level score of one hypothesis. Both texts share the policy."""
    a = align(tokenize(ref_text, policy), tokenize(hyp_text, policy))
    return UtteranceScore(utterance_id, a.ref_length, a.errors, "word")


def char_score(
    utterance_id: str,
    ref_text: str,
    hyp_text: str,
    policy: NormalizationPolicy = DEFAULT_POLICY,
) -> UtteranceScore:
    """Character-level score; the normalized string, single inter-word spaces
    included, is the character sequence."""
    a = align(normalize(ref_text, policy), normalize(hyp_text, policy))
    return UtteranceScore(utterance_id, a.ref_length, a.errors, "character")


def utterance_rate(a: Alignment) -> float:
    """Error rate of one alignment: (S+D+I) / reference length. May exceed 1."""
    n = a.ref_length
    if n == 0:
        if a.errors == 0:
            return 0.0
        raise DegenerateReferenceError(
            "rate is undefined for an empty reference with a nonempty hypothesis"
        )
    return a.errors / n


def corpus_rate(scores: Sequence[UtteranceScore]) -> float:
    """Pooled (micro-averaged) rate: total errors over total reference units.

    This is deliberately not the mean of per-utterance rates, so long
    utterances weigh in proportionally and rates above 100% stay meaningful.
    """
    if not scores:
        raise DegenerateCorpusError("no utterance scores")
    total_ref = sum(s.ref_units for s in scores)
    if total_ref == 0:
        raise DegenerateCorpusError("all reference units are zero")
    return sum(s.errors for s in scores) / total_ref


@dataclass(frozen=True)
class ConfidenceInterval:
    point: float
    low: float
    high: float
    alpha: float
    replicates: int
    seed: int

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie strictly between 0 and 1")
        if not (self.low <= self.point <= self.high):
            raise ValueError("interval must bracket the point estimate")

    @property
    def width(self) -> float:
        return self.high - self.low


def bootstrap_ci(
    scores: Sequence[UtteranceScore],
    replicates: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
) -> ConfidenceInterval:
    """Percentile bootstrap over utterances.

    Resamples the score list with replacement ``replicates`` times,
    recomputes the pooled rate for each resample, and takes the alpha/2 and
    1-alpha/2 empirical quantiles. Deterministic for a fixed seed. Bounds
    are clamped to bracket the full-corpus point estimate.
    """
    if replicates < 100:
        raise ValueError("replicates must be at least 100")
    point = corpus_rate(scores)  # raises DegenerateCorpusError on bad input
    errors = np.array([s.errors for s in scores], dtype=np.float64)
    refs = np.array([s.ref_units for s in scores], dtype=np.float64)
    n = len(scores)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(replicates, n))
    err_sums = errors[idx].sum(axis=1)
    ref_sums = refs[idx].sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rates = np.where(
            ref_sums > 0, err_sums / ref_sums, np.where(err_sums == 0, 0.0, np.inf)
        )
    low, high = np.quantile(rates, [alpha / 2.0, 1.0 - alpha / 2.0])
    return ConfidenceInterval(
        point=point,
        low=min(float(low), point),
        high=max(float(high), point),
        alpha=alpha,
        replicates=replicates,
        seed=seed,
    )
