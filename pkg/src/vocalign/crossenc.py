"""Zero-shot cross-encoder pair classification.

A pair of atom strings is packed into a single sequence
``[CLS] tok(str_i) [SEP] tok(str_j) [SEP]`` with segment ids switching
from 0 to 1 right after the first [SEP]; a pair-classification head
(next-sentence-style) scores it, and a high "related" probability maps
to label 1 (synonymous). Because cross-encoders are not symmetric in
their inputs, evaluation runs in a declared order — (i,j) or (j,i) —
and records which one it used.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

from .atoms import AtomStore
from .errors import EncoderError
from .metrics import MetricsRow, confusion, metrics
from .pairs import LabeledPair

__all__ = [
    "ORDERS",
    "PairClassifierEncoder",
    "LexicalOverlapClassifier",
    "ScoreRecord",
    "CrossEncoderRun",
    "format_pair",
    "predict_pair",
    "score_pairs",
    "evaluate_ordered",
    "write_score_dump",
]

ORDERS = ("ij", "ji")
CLS = "[CLS]"
SEP = "[SEP]"


@runtime_checkable
class PairClassifierEncoder(Protocol):
    """Tokenizer plus a pair head returning P(related) in [0,1]."""

    def tokenize(self, text: str) -> list[str]: ...

    def classify_pair(self, tokens: Sequence[str], segment_ids: Sequence[int]) -> float: ...


@dataclass(frozen=True)
class ScoreRecord:
    aui1: str
    aui2: str
    order: str
    score: float
    label: int
    pred: int


@dataclass(frozen=True)
class CrossEncoderRun:
    model: str
    order: str
    threshold: float
    row: MetricsRow


class LexicalOverlapClassifier:
    """Dependency-free pair head: token Jaccard of the two segments.

    A symmetric, deterministic baseline so the packed-sequence protocol
    can run without a pre-trained transformer.
    """

    name = "lexical"

    def tokenize(self, text: str) -> list[str]:
        from .lexsim import word_tokens

        return word_tokens(text)

    def classify_pair(self, tokens: Sequence[str], segment_ids: Sequence[int]) -> float:
        first, second = segments(tokens)
        a, b = frozenset(first), frozenset(second)
        if not a and not b:
            return 1.0
        union = a | b
        return len(a & b) / len(union) if union else 0.0


def segments(tokens: Sequence[str]) -> tuple[list[str], list[str]]:
    """Split a packed sequence back into its two raw-token segments."""
    seps = [i for i, t in enumerate(tokens) if t == SEP]
    if tokens[:1] != [CLS] or len(seps) != 2 or seps[1] != len(tokens) - 1:
        raise ValueError("not a packed [CLS] a [SEP] b [SEP] sequence")
    return list(tokens[1 : seps[0]]), list(tokens[seps[0] + 1 : seps[1]])


def _tokenize(tokenizer, text: str) -> list[str]:
    if hasattr(tokenizer, "tokenize"):
        return list(tokenizer.tokenize(text))
    return list(tokenizer(text))


def format_pair(
    str_i: str, str_j: str, tokenizer, max_len: int = 64
) -> tuple[list[str], list[int]]:
    """Build the packed token sequence and its segment ids.

    Over-length inputs are trimmed token-by-token from the longer
    segment (ties trim the second) until the total fits max_len; a
    segment that started non-empty is never trimmed to nothing —
    max_len values too small for that raise instead.
    """
    if max_len < 3:
        raise ValueError(f"max_len must be >= 3, got {max_len}")
    seg_i = _tokenize(tokenizer, str_i)
    seg_j = _tokenize(tokenizer, str_j)
    budget = max_len - 3
    while len(seg_i) + len(seg_j) > budget:
        target = seg_i if len(seg_i) > len(seg_j) else seg_j
        if len(target) <= 1:
            other = seg_j if target is seg_i else seg_i
            if len(other) > 1:
                target = other
            else:
                raise ValueError(
                    f"max_len {max_len} cannot hold both segments without emptying one"
                )
        target.pop()
    tokens = [CLS, *seg_i, SEP, *seg_j, SEP]
    segment_ids = [0] * (len(seg_i) + 2) + [1] * (len(seg_j) + 1)
    return tokens, segment_ids


def predict_pair(
    encoder: PairClassifierEncoder,
    str_i: str,
    str_j: str,
    threshold: float = 0.5,
    max_len: int = 64,
    invert_scores: bool = False,
) -> tuple[float, int]:
    """Score one ordered pair; label 1 (synonymous) iff score >= threshold.

    invert_scores flips the head's polarity (1 - p) for heads trained
    with "related" as the low class.
    """
    tokens, segment_ids = format_pair(str_i, str_j, encoder, max_len)
    try:
        score = float(encoder.classify_pair(tokens, segment_ids))
    except Exception as e:
        raise EncoderError(f"encoder failed on pair ({str_i!r}, {str_j!r}): {e}") from e
    if invert_scores:
        score = 1.0 - score
    return score, (1 if score >= threshold else 0)


def score_pairs(
    encoder: PairClassifierEncoder,
    pairs: Sequence[LabeledPair],
    store: AtomStore,
    order: str,
    threshold: float = 0.5,
    max_len: int = 64,
    invert_scores: bool = False,
) -> list[ScoreRecord]:
    """Score every pair in canonical order, feeding the encoder the two
    strings in the declared order ("ij" or "ji")."""
    if order not in ORDERS:
        raise ValueError(f"order must be one of {ORDERS}, got {order!r}")
    records: list[ScoreRecord] = []
    for pair in sorted(pairs):
        s1, s2 = store.get(pair.a).string, store.get(pair.b).string
        first, second = (s1, s2) if order == "ij" else (s2, s1)
        score, pred = predict_pair(encoder, first, second, threshold, max_len, invert_scores)
        records.append(
            ScoreRecord(
                aui1=pair.a, aui2=pair.b, order=order, score=score, label=pair.label, pred=pred
            )
        )
    return records


def evaluate_ordered(
    encoder: PairClassifierEncoder,
    pairs: Sequence[LabeledPair],
    store: AtomStore,
    order: str,
    threshold: float = 0.5,
    max_len: int = 64,
    invert_scores: bool = False,
    model: str = "",
) -> MetricsRow:
    """Accuracy/precision/recall/F1 of the encoder over labeled pairs in
    one declared input order."""
    if not pairs:
        raise ValueError("evaluate_ordered needs at least one pair")
    records = score_pairs(encoder, pairs, store, order, threshold, max_len, invert_scores)
    cm = confusion([r.score for r in records], [r.label for r in records], threshold)
    return metrics(cm, model=model, config=f"order={order}", threshold=threshold)


def write_score_dump(records: Sequence[ScoreRecord], sink) -> None:
    """TSV dump (aui1 aui2 order score label pred) for threshold sweeps."""
    stream = open(sink, "w", encoding="utf-8", newline="\n") if isinstance(sink, (str, Path)) else sink
    close = isinstance(sink, (str, Path))
    try:
        stream.write("aui1\taui2\torder\tscore\tlabel\tpred\n")
        for r in records:
            stream.write(
                f"{r.aui1}\t{r.aui2}\t{r.order}\t{r.score!r}\t{r.label}\t{r.pred}\n"
            )
    finally:
        if close:
            stream.close()
