"""Confusion counting, derived metrics, sweeps, and table rendering."""

import csv
import io

import numpy as np
import pytest

from vocalign.metrics import ConfusionMatrix, MetricsRow, confusion, metrics, render, threshold_sweep


def test_confusion_simple():
    cm = confusion([0.9, 0.2], [1, 0], 0.5)
    assert (cm.tp, cm.fp, cm.fn, cm.tn) == (1, 0, 0, 1)


def test_confusion_all_false_positives():
    cm = confusion([1.0] * 5, [0] * 5, 0.5)
    assert cm.fp == 5


def test_confusion_hand_enumerated():
    cm = confusion([0.9, 0.2, 0.8, 0.3], [1, 0, 0, 1], 0.5)
    assert (cm.tp, cm.fp, cm.fn, cm.tn) == (1, 1, 1, 1)


def test_confusion_threshold_tie_counts_positive():
    cm = confusion([0.5], [1], 0.5)
    assert cm.tp == 1


def test_confusion_rejects_length_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        confusion([0.5], [1, 0], 0.5)


def test_confusion_rejects_empty():
    with pytest.raises(ValueError):
        confusion([], [], 0.5)


def test_confusion_rejects_bad_label():
    with pytest.raises(ValueError):
        confusion([0.5], [2], 0.5)


def test_metrics_balanced_square():
    row = metrics(ConfusionMatrix(tp=1, fp=1, fn=1, tn=1))
    assert (row.accuracy, row.precision, row.recall, row.f1) == (0.5, 0.5, 0.5, 0.5)
    assert row.degenerate == ()


def test_metrics_degenerate_precision():
    row = metrics(ConfusionMatrix(tp=0, fp=0, fn=2, tn=2))
    assert row.precision == 0.0
    assert "precision" in row.degenerate
    assert "f1" in row.degenerate


def test_metrics_perfect():
    row = metrics(ConfusionMatrix(tp=3, fp=0, fn=0, tn=7))
    assert (row.accuracy, row.precision, row.recall, row.f1) == (1.0, 1.0, 1.0, 1.0)


def test_metrics_rejects_empty_matrix():
    with pytest.raises(ValueError):
        metrics(ConfusionMatrix())


def test_metrics_f1_is_harmonic_mean():
    rng = np.random.default_rng(4)
    for _ in range(50):
        cm = ConfusionMatrix(*(int(x) for x in rng.integers(0, 30, size=4)))
        if cm.total == 0:
            continue
        row = metrics(cm)
        if row.precision + row.recall > 0:
            expected = 2 * row.precision * row.recall / (row.precision + row.recall)
            assert row.f1 == pytest.approx(expected)
        assert 0.0 <= row.accuracy <= 1.0
        assert 0.0 <= row.f1 <= 1.0


def _brute_force(scores, labels, threshold):
    tp = sum(1 for s, y in zip(scores, labels) if s >= threshold and y == 1)
    fp = sum(1 for s, y in zip(scores, labels) if s >= threshold and y == 0)
    fn = sum(1 for s, y in zip(scores, labels) if s < threshold and y == 1)
    tn = sum(1 for s, y in zip(scores, labels) if s < threshold and y == 0)
    return tp, fp, fn, tn


def test_confusion_matches_brute_force_recount():
    rng = np.random.default_rng(9)
    for _ in range(20):
        n = int(rng.integers(1, 500))
        scores = rng.random(n).tolist()
        labels = rng.integers(0, 2, size=n).tolist()
        t = float(rng.random())
        cm = confusion(scores, labels, t)
        assert (cm.tp, cm.fp, cm.fn, cm.tn) == _brute_force(scores, labels, t)


def test_label_prediction_swap_symmetry():
    rng = np.random.default_rng(14)
    scores = rng.random(200).tolist()
    labels = rng.integers(0, 2, size=200).tolist()
    cm = confusion(scores, labels, 0.5)
    flipped = confusion([1.0 - s for s in scores], [1 - y for y in labels], 0.5 + 1e-12)
    assert (flipped.tp, flipped.fp, flipped.fn, flipped.tn) == (cm.tn, cm.fn, cm.fp, cm.tp)
    assert metrics(flipped).accuracy == pytest.approx(metrics(cm).accuracy)


def test_sweep_extremes():
    scores = [0.1, 0.4, 0.9]
    labels = [0, 1, 1]
    rows = threshold_sweep(scores, labels, [0.0])
    assert rows[0].recall == 1.0
    rows = threshold_sweep(scores, labels, [1.0 + 1e-9])
    assert rows[0].recall == 0.0


def test_sweep_recall_non_increasing():
    rng = np.random.default_rng(6)
    scores = rng.random(100).tolist()
    labels = rng.integers(0, 2, size=100).tolist()
    thresholds = sorted(rng.random(15).tolist())
    recalls = [row.recall for row in threshold_sweep(scores, labels, thresholds)]
    assert recalls == sorted(recalls, reverse=True)


def test_sweep_rejects_empty_thresholds():
    with pytest.raises(ValueError):
        threshold_sweep([0.5], [1], [])


def test_merge_is_associative_fold():
    a = ConfusionMatrix(1, 2, 3, 4)
    b = ConfusionMatrix(5, 6, 7, 8)
    c = ConfusionMatrix(9, 1, 1, 1)
    assert a.merge(b).merge(c) == a.merge(b.merge(c))


BASELINE_ROW = MetricsRow(
    model="BioWordVec",
    config="-",
    accuracy=0.9938,
    precision=0.8872,
    recall=0.9274,
    f1=0.9069,
    threshold=0.5,
)


def test_render_reference_row_digits_verbatim():
    text = render([BASELINE_ROW], "markdown")
    assert "| BioWordVec | - | 0.9938 | 0.8872 | 0.9274 | 0.9069 |" in text


def test_render_empty_is_header_only():
    text = render([], "csv")
    assert text == "model,config,accuracy,precision,recall,f1\n"
    md = render([], "markdown")
    assert md.count("\n") == 2  # header + separator


def test_render_csv_round_trip():
    text = render([BASELINE_ROW], "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["model", "config", "accuracy", "precision", "recall", "f1"]
    assert rows[1] == ["BioWordVec", "-", "0.9938", "0.8872", "0.9274", "0.9069"]
    assert [float(v) for v in rows[1][2:]] == [0.9938, 0.8872, 0.9274, 0.9069]


def test_render_rejects_unknown_style():
    with pytest.raises(ValueError):
        render([], "html")
