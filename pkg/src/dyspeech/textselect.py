"""Selection of synthesis text material from a large sentence corpus.

Sentences are screened for word-count bounds, for staying inside a
configured alphabet (a practical stand-in for "no foreign words"), and for
abbreviation patterns, then uniformly sampled down to the requested size.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .metrics import DEFAULT_POLICY, tokenize

__all__ = [
    "HUNGARIAN_LETTERS",
    "DEFAULT_ALLOWED_CHARSET",
    "SelectionPolicy",
    "SentenceCandidate",
    "SelectionShortfallError",
    "filter_sentences",
    "sample_sentences",
    "read_sentences",
    "write_sentences",
]

HUNGARIAN_LETTERS = "aábcdeéfghiíjklmnoóöőpqrstuúüűvwxyz"
_PUNCTUATION = ".,;:!?()-–—'\"„”"

DEFAULT_ALLOWED_CHARSET = frozenset(HUNGARIAN_LETTERS + HUNGARIAN_LETTERS.upper() + _PUNCTUATION)


class SelectionShortfallError(ValueError):
    """Fewer candidates than the requested sample size."""

    def __init__(self, available: int, requested: int):
        super().__init__(f"only {available} candidates available, need {requested}")
        self.available = available
        self.requested = requested


class SentenceCandidate(NamedTuple):
    position: int  # 1-based line number in the source corpus
    text: str


@dataclass(frozen=True)
class SelectionPolicy:
    min_words: int = 9
    max_words: int = 11
    allowed_charset: frozenset[str] = DEFAULT_ALLOWED_CHARSET
    reject_abbreviations: bool = True
    sample_size: int = 5000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.min_words > self.max_words:
            raise ValueError("min_words must not exceed max_words")
        if self.sample_size <= 0:
            raise ValueError("sample_size must be positive")


def _looks_abbreviated(sentence: str) -> bool:
    tokens = sentence.split()
    last = len(tokens) - 1
    for i, tok in enumerate(tokens):
        if "." in tok[:-1]:  # internal period, e.g. "e.g." or "1.5"
            return True
        if tok.endswith(".") and i < last:  # "stb." mid-sentence
            return True
        letters = "".join(c for c in tok if c.isalpha())
        if len(letters) >= 2 and letters.isupper():  # acronyms
            return True
    return False


def filter_sentences(lines: Iterable[str], policy: SelectionPolicy) -> list[SentenceCandidate]:
    """Screen a sentence-per-line stream against the policy.

    Word counts use the shared scoring tokenizer, so "9-11 words" means the
    same thing here as it does in WER reporting. Blank lines are skipped but
    still advance the position counter.
    """
    kept: list[SentenceCandidate] = []
    for position, raw in enumerate(lines, 1):
        sentence = raw.strip()
        if not sentence:
            continue
        n_words = len(tokenize(sentence, DEFAULT_POLICY))
        if not (policy.min_words <= n_words <= policy.max_words):
            continue
        if any((not c.isspace()) and c not in policy.allowed_charset for c in sentence):
            continue
        if policy.reject_abbreviations and _looks_abbreviated(sentence):
            continue
        kept.append(SentenceCandidate(position, sentence))
    return kept


def sample_sentences(
    candidates: list[SentenceCandidate], policy: SelectionPolicy
) -> list[SentenceCandidate]:
    """Uniform sample without replacement, stable-ordered by corpus position.

    Deterministic for a fixed ``policy.seed``.
    """
    n = len(candidates)
    if n < policy.sample_size:
        raise SelectionShortfallError(available=n, requested=policy.sample_size)
    if n == policy.sample_size:
        return list(candidates)
    rng = np.random.default_rng(policy.seed)
    chosen = sorted(rng.choice(n, size=policy.sample_size, replace=False).tolist())
    return [candidates[i] for i in chosen]


def write_sentences(selected: Iterable[SentenceCandidate], path: str | Path) -> None:
    """Numbered sentence list: ``<position>\\t<sentence>`` per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for cand in selected:
            f.write(f"{cand.position}\t{cand.text}\n")


def read_sentences(path: str | Path) -> list[SentenceCandidate]:
    out: list[SentenceCandidate] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            pos_str, text = line.split("\t", 1)
            out.append(SentenceCandidate(int(pos_str), text))
        except ValueError as exc:
            raise ValueError(f"{path}: line {lineno}: expected '<number>\\t<sentence>'") from exc
    return out
