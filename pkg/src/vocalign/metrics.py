"""Confusion-matrix metrics, threshold sweeps, and table rendering.

Predictions follow the score >= threshold convention everywhere. Any
metric whose denominator is zero is reported as 0.0 and flagged as
degenerate instead of NaN, so rendered tables stay comparable.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

__all__ = [
    "ConfusionMatrix",
    "MetricsRow",
    "confusion",
    "metrics",
    "threshold_sweep",
    "render",
]

RENDER_COLUMNS = ("model", "config", "accuracy", "precision", "recall", "f1")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            tn=self.tn + other.tn,
        )


@dataclass(frozen=True)
class MetricsRow:
    model: str
    config: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    threshold: float
    degenerate: tuple[str, ...] = field(default=())


def confusion(
    scores: Sequence[float], labels: Sequence[int], threshold: float
) -> ConfusionMatrix:
    """Count tp/fp/fn/tn with pred = score >= threshold."""
    if len(scores) != len(labels):
        raise ValueError(f"length mismatch: {len(scores)} scores vs {len(labels)} labels")
    if not scores:
        raise ValueError("cannot build a confusion matrix from zero pairs")
    tp = fp = fn = tn = 0
    for score, label in zip(scores, labels):
        if label not in (0, 1):
            raise ValueError(f"labels must be 0 or 1, got {label!r}")
        pred = 1 if score >= threshold else 0
        if pred == 1 and label == 1:
            tp += 1
        elif pred == 1:
            fp += 1
        elif label == 1:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def metrics(
    cm: ConfusionMatrix,
    model: str = "",
    config: str = "",
    threshold: float = 0.5,
) -> MetricsRow:
    """accuracy/precision/recall/F1 from counts; 0/0 cells become 0.0
    and are listed in the row's degenerate tuple."""
    if cm.total == 0:
        raise ValueError("metrics need a non-empty confusion matrix")
    degenerate: list[str] = []

    def ratio(num: int, den: int, name: str) -> float:
        if den == 0:
            degenerate.append(name)
            return 0.0
        return num / den

    accuracy = (cm.tp + cm.tn) / cm.total
    precision = ratio(cm.tp, cm.tp + cm.fp, "precision")
    recall = ratio(cm.tp, cm.tp + cm.fn, "recall")
    if precision + recall == 0.0:
        degenerate.append("f1")
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricsRow(
        model=model,
        config=config,
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        threshold=threshold,
        degenerate=tuple(degenerate),
    )


def threshold_sweep(
    scores: Sequence[float],
    labels: Sequence[int],
    thresholds: Sequence[float],
    model: str = "",
    config: str = "",
) -> list[MetricsRow]:
    """One MetricsRow per threshold; recall is non-increasing in the
    threshold by construction of the >= rule."""
    if not thresholds:
        raise ValueError("thresholds must be non-empty")
    return [metrics(confusion(scores, labels, t), model, config, t) for t in thresholds]


def render(rows: Sequence[MetricsRow], style: str = "markdown") -> str:
    """Render rows as a markdown or csv table, metrics fixed to 4 decimals."""
    if style not in ("markdown", "csv"):
        raise ValueError(f"style must be 'markdown' or 'csv', got {style!r}")
    cells = [
        (
            row.model,
            row.config,
            f"{row.accuracy:.4f}",
            f"{row.precision:.4f}",
            f"{row.recall:.4f}",
            f"{row.f1:.4f}",
        )
        for row in rows
    ]
    if style == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(RENDER_COLUMNS)
        writer.writerows(cells)
        return buf.getvalue()
    lines = [
        "| " + " | ".join(RENDER_COLUMNS) + " |",
        "|" + "|".join(" --- " for _ in RENDER_COLUMNS) + "|",
    ]
    for row in cells:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"
