"""Packed-sequence formatting, ordered scoring, and the lexical baseline head."""

import io

import numpy as np
import pytest

from vocalign.crossenc import (
    CLS,
    SEP,
    LexicalOverlapClassifier,
    evaluate_ordered,
    format_pair,
    predict_pair,
    score_pairs,
    segments,
    write_score_dump,
)
from vocalign.errors import EncoderError
from vocalign.metrics import confusion, metrics
from vocalign.pairs import POS, RAN_NOSIM, make_pair

from conftest import make_store


def _split(text):
    return text.split()


class _ConstantHead:
    """Stub head returning a fixed probability for every packed pair."""

    name = "constant"

    def __init__(self, value):
        self.value = value

    def tokenize(self, text):
        return text.split()

    def classify_pair(self, tokens, segment_ids):
        return self.value


class _FirstSegmentWinsHead:
    """Asymmetric stub: 1.0 iff the first segment sorts before the second."""

    name = "asymmetric"

    def tokenize(self, text):
        return text.split()

    def classify_pair(self, tokens, segment_ids):
        first, second = segments(tokens)
        return 1.0 if " ".join(first) < " ".join(second) else 0.0


class _TableHead:
    """Stub head scored from an explicit (first, second) lookup table."""

    name = "table"

    def __init__(self, table):
        self.table = table

    def tokenize(self, text):
        return text.split()

    def classify_pair(self, tokens, segment_ids):
        first, second = segments(tokens)
        return self.table[(" ".join(first), " ".join(second))]


class _ExplodingHead:
    name = "exploding"

    def tokenize(self, text):
        return text.split()

    def classify_pair(self, tokens, segment_ids):
        raise RuntimeError("weights on fire")


def test_format_empty_pair():
    tokens, seg = format_pair("", "", _split)
    assert tokens == [CLS, SEP, SEP]
    assert seg == [0, 0, 1]


def test_format_no_truncation_needed():
    tokens, seg = format_pair("migraine disorder", "headache", _split)
    assert tokens == [CLS, "migraine", "disorder", SEP, "headache", SEP]
    assert seg == [0, 0, 0, 0, 1, 1]


def test_format_trims_longer_segment_first():
    long_i = " ".join(f"a{k}" for k in range(100))
    long_j = " ".join(f"b{k}" for k in range(100))
    tokens, seg = format_pair(long_i, long_j, _split, max_len=64)
    assert len(tokens) == 64
    first, second = segments(tokens)
    assert (len(first), len(second)) == (31, 30)
    assert first == [f"a{k}" for k in range(31)]
    assert second == [f"b{k}" for k in range(30)]
    assert seg == [0] * 33 + [1] * 31


def test_format_never_empties_nonempty_segment():
    tokens, _ = format_pair("", "x y z", _split, max_len=4)
    assert tokens == [CLS, SEP, "x", SEP]
    with pytest.raises(ValueError, match="emptying"):
        format_pair("x", "y", _split, max_len=4)


def test_format_rejects_tiny_max_len():
    with pytest.raises(ValueError, match="max_len"):
        format_pair("a", "b", _split, max_len=2)


def test_format_structural_invariants_fuzz():
    rng = np.random.default_rng(11)
    vocab = [f"t{k}" for k in range(40)]
    for _ in range(200):
        n_i, n_j = int(rng.integers(0, 30)), int(rng.integers(0, 30))
        str_i = " ".join(rng.choice(vocab, size=n_i))
        str_j = " ".join(rng.choice(vocab, size=n_j))
        max_len = int(rng.integers(8, 48))
        tokens, seg = format_pair(str_i, str_j, _split, max_len=max_len)
        assert len(tokens) <= max_len
        assert len(tokens) == len(seg)
        assert tokens[0] == CLS and tokens[-1] == SEP
        assert tokens.count(SEP) == 2
        switch = tokens.index(SEP) + 1
        assert seg == [0] * switch + [1] * (len(tokens) - switch)
        first, second = segments(tokens)
        assert (n_i > 0) == (len(first) > 0)
        assert (n_j > 0) == (len(second) > 0)
        # Truncation keeps prefixes, never reorders.
        assert first == str_i.split()[: len(first)]
        assert second == str_j.split()[: len(second)]


def test_segments_rejects_malformed():
    with pytest.raises(ValueError):
        segments(["a", SEP, "b", SEP])
    with pytest.raises(ValueError):
        segments([CLS, "a", SEP, "b"])


def test_predict_pair_threshold_and_invert():
    assert predict_pair(_ConstantHead(0.9), "a", "b") == (0.9, 1)
    assert predict_pair(_ConstantHead(0.1), "a", "b") == (0.1, 0)
    score, pred = predict_pair(_ConstantHead(0.9), "a", "b", invert_scores=True)
    assert score == pytest.approx(0.1)
    assert pred == 0
    assert predict_pair(_ConstantHead(0.5), "a", "b")[1] == 1  # tie counts positive


def test_predict_pair_wraps_encoder_failure():
    with pytest.raises(EncoderError, match=r"pair \('left atrium', 'right atrium'\)"):
        predict_pair(_ExplodingHead(), "left atrium", "right atrium")


def _four_pair_fixture():
    store = make_store(
        [
            ("A1", "alpha", "S1", "C1"),
            ("A2", "alpha", "S2", "C1"),
            ("A3", "beta", "S1", "C2"),
            ("A4", "gamma", "S2", "C2"),
        ]
    )
    pairs = [
        make_pair("A1", "A2", 1, POS),
        make_pair("A3", "A4", 1, POS),
        make_pair("A1", "A3", 0, RAN_NOSIM),
        make_pair("A2", "A4", 0, RAN_NOSIM),
    ]
    return store, pairs


def test_hand_worked_confusion():
    store, pairs = _four_pair_fixture()
    head = _TableHead(
        {
            ("alpha", "alpha"): 0.9,  # true positive
            ("beta", "gamma"): 0.1,  # false negative
            ("alpha", "beta"): 0.9,  # false positive
            ("alpha", "gamma"): 0.1,  # true negative
        }
    )
    row = evaluate_ordered(head, pairs, store, "ij", model="table")
    assert row.precision == pytest.approx(0.5)
    assert row.recall == pytest.approx(0.5)
    assert row.accuracy == pytest.approx(0.5)
    assert row.config == "order=ij"
    assert row.model == "table"


def test_score_pairs_orders_inputs():
    store, pairs = _four_pair_fixture()
    head = _FirstSegmentWinsHead()
    ij = score_pairs(head, pairs, store, "ij")
    ji = score_pairs(head, pairs, store, "ji")
    # (A3, A4) = ("beta", "gamma"): beta < gamma so ij scores 1, ji scores 0.
    rec_ij = next(r for r in ij if (r.aui1, r.aui2) == ("A3", "A4"))
    rec_ji = next(r for r in ji if (r.aui1, r.aui2) == ("A3", "A4"))
    assert (rec_ij.score, rec_ji.score) == (1.0, 0.0)
    assert rec_ij.order == "ij" and rec_ji.order == "ji"


def test_symmetric_head_gives_identical_rows_both_orders():
    store, pairs = _four_pair_fixture()
    head = LexicalOverlapClassifier()
    row_ij = evaluate_ordered(head, pairs, store, "ij", model="lexical")
    row_ji = evaluate_ordered(head, pairs, store, "ji", model="lexical")
    assert (row_ij.accuracy, row_ij.precision, row_ij.recall, row_ij.f1) == (
        row_ji.accuracy,
        row_ji.precision,
        row_ji.recall,
        row_ji.f1,
    )
    ij_scores = [r.score for r in score_pairs(head, pairs, store, "ij")]
    ji_scores = [r.score for r in score_pairs(head, pairs, store, "ji")]
    assert ij_scores == ji_scores


def test_asymmetric_head_differs_between_orders():
    store, pairs = _four_pair_fixture()
    head = _FirstSegmentWinsHead()
    row_ij = evaluate_ordered(head, pairs, store, "ij")
    row_ji = evaluate_ordered(head, pairs, store, "ji")
    assert (row_ij.accuracy, row_ij.precision, row_ij.recall, row_ij.f1) != (
        row_ji.accuracy,
        row_ji.precision,
        row_ji.recall,
        row_ji.f1,
    )


def test_evaluate_matches_brute_force_confusion():
    store, pairs = _four_pair_fixture()
    head = LexicalOverlapClassifier()
    records = score_pairs(head, pairs, store, "ij")
    tp = sum(1 for r in records if r.label == 1 and r.pred == 1)
    fp = sum(1 for r in records if r.label == 0 and r.pred == 1)
    fn = sum(1 for r in records if r.label == 1 and r.pred == 0)
    tn = sum(1 for r in records if r.label == 0 and r.pred == 0)
    cm = confusion([r.score for r in records], [r.label for r in records], 0.5)
    assert (cm.tp, cm.fp, cm.fn, cm.tn) == (tp, fp, fn, tn)
    row = evaluate_ordered(head, pairs, store, "ij")
    expected = metrics(cm, model="", config="order=ij", threshold=0.5)
    assert row == expected


def test_evaluate_rejects_empty():
    store, _ = _four_pair_fixture()
    with pytest.raises(ValueError):
        evaluate_ordered(LexicalOverlapClassifier(), [], store, "ij")


def test_score_pairs_rejects_unknown_order():
    store, pairs = _four_pair_fixture()
    with pytest.raises(ValueError, match="order"):
        score_pairs(LexicalOverlapClassifier(), pairs, store, "both")


def test_score_pairs_deterministic():
    store, pairs = _four_pair_fixture()
    head = LexicalOverlapClassifier()
    assert score_pairs(head, pairs, store, "ij") == score_pairs(head, pairs, store, "ij")


def test_lexical_head_properties():
    head = LexicalOverlapClassifier()
    same, seg = format_pair("deep vein", "deep vein", head)
    assert head.classify_pair(same, seg) == 1.0
    disjoint, seg = format_pair("deep vein", "shallow artery", head)
    assert head.classify_pair(disjoint, seg) == 0.0
    empty, seg = format_pair("", "", head)
    assert head.classify_pair(empty, seg) == 1.0
    ab, _ = format_pair("deep vein", "vein thrombosis", head)
    ba, _ = format_pair("vein thrombosis", "deep vein", head)
    assert head.classify_pair(ab, []) == head.classify_pair(ba, [])


def test_score_dump_format(tmp_path):
    store, pairs = _four_pair_fixture()
    records = score_pairs(LexicalOverlapClassifier(), pairs, store, "ij")
    sink = io.StringIO()
    write_score_dump(records, sink)
    lines = sink.getvalue().splitlines()
    assert lines[0] == "aui1\taui2\torder\tscore\tlabel\tpred"
    assert len(lines) == 5
    for line, rec in zip(lines[1:], records):
        fields = line.split("\t")
        assert fields[0] == rec.aui1 and fields[1] == rec.aui2
        assert float(fields[3]) == rec.score
        assert fields[5] in ("0", "1")
    path = tmp_path / "scores.tsv"
    write_score_dump(records, path)
    assert path.read_text(encoding="utf-8").splitlines() == lines
