"""Dual-ASR agreement filter behavior."""

import random

import pytest

from dyspeech.agreement import (
    ConsistencyError,
    TranscriptPair,
    agreement_filter,
    filter_report,
    pair_transcripts,
    read_transcripts,
)
from dyspeech.manifest import Manifest, Utterance
from dyspeech.metrics import edit_distance, normalize


def _source_for(ids):
    return Manifest(
        name="lectures",
        utterances=[
            Utterance(uid, f"{uid}.wav", "", 2.0 + i, "lecture", "human")
            for i, uid in enumerate(sorted(ids))
        ],
    )


def test_identical_transcripts_kept():
    pairs = [TranscriptPair("u1", "jó reggelt", "jó reggelt")]
    kept = agreement_filter(pairs, _source_for(["u1"]), max_edit=4)
    assert [u.id for u in kept] == ["u1"]
    assert kept.utterances[0].label_kind == "pseudo"


def test_five_char_difference_rejected_at_four():
    pairs = [TranscriptPair("u1", "aaaaa", "bbbbb")]
    kept = agreement_filter(pairs, _source_for(["u1"]), max_edit=4)
    assert len(kept) == 0
    kept = agreement_filter(pairs, _source_for(["u1"]), max_edit=5)
    assert len(kept) == 1


def test_distance_is_computed_on_normalized_text():
    # raw texts differ in case and punctuation only
    pairs = [TranscriptPair("u1", "Jó reggelt!", "jó   reggelt")]
    kept = agreement_filter(pairs, _source_for(["u1"]), max_edit=0)
    assert len(kept) == 1


def test_label_source_selects_engine():
    pairs = [TranscriptPair("u1", "alma a", "alma b")]
    src = _source_for(["u1"])
    a = agreement_filter(pairs, src, max_edit=4, label_source="engine_a")
    b = agreement_filter(pairs, src, max_edit=4, label_source="engine_b")
    assert a.utterances[0].transcript == "alma a"
    assert b.utterances[0].transcript == "alma b"
    with pytest.raises(ValueError):
        agreement_filter(pairs, src, label_source="engine_c")


def _constructed_corpus():
    """20 pairs with known normalized distances 0..10 (distance = i // 2)."""
    pairs = []
    for i in range(20):
        d = i // 2
        base = "abcdefghijklmnop"
        pairs.append(TranscriptPair(f"u{i:02d}", base, base[: len(base) - d]))
    return pairs


def test_kept_set_equals_oracle_distance_threshold():
    pairs = _constructed_corpus()
    src = _source_for([p.utterance_id for p in pairs])
    kept = agreement_filter(pairs, src, max_edit=4)
    expected = {
        p.utterance_id
        for p in pairs
        if edit_distance(normalize(p.transcript_a), normalize(p.transcript_b)) <= 4
    }
    assert {u.id for u in kept} == expected
    assert expected == {f"u{i:02d}" for i in range(10)}  # distances 0..4


def test_monotone_in_max_edit():
    rng = random.Random(31)
    pairs = []
    for i in range(60):
        a = "".join(rng.choice("abcd ") for _ in range(rng.randint(0, 15)))
        b = "".join(rng.choice("abcd ") for _ in range(rng.randint(0, 15)))
        pairs.append(TranscriptPair(f"u{i:02d}", a, b))
    src = _source_for([p.utterance_id for p in pairs])
    previous: set[str] = set()
    for max_edit in range(0, 16):
        kept = {u.id for u in agreement_filter(pairs, src, max_edit=max_edit)}
        assert previous <= kept
        previous = kept
    everything = {u.id for u in agreement_filter(pairs, src, max_edit=10**9)}
    assert everything == {p.utterance_id for p in pairs}


def test_filter_is_order_independent():
    pairs = _constructed_corpus()
    src = _source_for([p.utterance_id for p in pairs])
    shuffled = pairs[:]
    random.Random(1).shuffle(shuffled)
    a = agreement_filter(pairs, src, max_edit=4)
    b = agreement_filter(shuffled, src, max_edit=4)
    assert a.utterances == b.utterances


def test_unknown_utterance_id_is_consistency_error():
    pairs = [TranscriptPair("ghost", "a", "a")]
    with pytest.raises(ConsistencyError, match="ghost"):
        agreement_filter(pairs, _source_for(["u1"]), max_edit=4)


def test_report_all_identical_pairs():
    pairs = [TranscriptPair(f"u{i}", "ugyanaz", "ugyanaz") for i in range(5)]
    report = filter_report(pairs, _source_for([p.utterance_id for p in pairs]), max_edit=4)
    assert report.retention == 1.0
    assert report.histogram == {0: 5}
    assert report.kept_duration_s == pytest.approx(sum(2.0 + i for i in range(5)))


def test_report_disjoint_transcripts_zero_retention():
    pairs = [TranscriptPair("u1", "aaaa", "bbbb")]
    report = filter_report(pairs, _source_for(["u1"]), max_edit=0)
    assert report.retention == 0.0
    assert report.kept == 0


def test_report_histogram_conserves_input_size():
    rng = random.Random(13)
    pairs = [
        TranscriptPair(
            f"u{i:03d}",
            "".join(rng.choice("ab ") for _ in range(rng.randint(0, 10))),
            "".join(rng.choice("ab ") for _ in range(rng.randint(0, 10))),
        )
        for i in range(120)
    ]
    report = filter_report(pairs, _source_for([p.utterance_id for p in pairs]), max_edit=3)
    assert sum(report.histogram.values()) == len(pairs)
    assert report.total == len(pairs)


def test_report_to_dict_is_json_shaped():
    pairs = [TranscriptPair("u1", "a", "a")]
    d = filter_report(pairs, _source_for(["u1"]), max_edit=4).to_dict()
    assert d["kept"] == 1 and d["retention"] == 1.0


# --- transcript file parsing ---------------------------------------------------


def test_read_transcripts_and_pairing(tmp_path):
    fa = tmp_path / "a.txt"
    fb = tmp_path / "b.txt"
    fa.write_text("u1 jó reggelt\nu2 szép napot\nu3\n", encoding="utf-8")
    fb.write_text("u2 szép napot\nu1 jó reggelt\nu3 halló\n", encoding="utf-8")
    a = read_transcripts(fa)
    b = read_transcripts(fb)
    assert a["u3"] == ""  # empty transcript allowed
    pairs = pair_transcripts(a, b)
    assert [p.utterance_id for p in pairs] == ["u1", "u2", "u3"]


def test_pair_transcripts_requires_matching_ids():
    with pytest.raises(ValueError, match="disagree"):
        pair_transcripts({"u1": "a"}, {"u2": "a"})


def test_read_transcripts_rejects_duplicates(tmp_path):
    f = tmp_path / "dup.txt"
    f.write_text("u1 a\nu1 b\n", encoding="utf-8")
    with pytest.raises(ValueError, match="duplicate"):
        read_transcripts(f)
