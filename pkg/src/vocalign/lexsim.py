"""Lexical similarity between atom strings.

Similarity is word-token Jaccard: lowercase, split on any character that
is not alphanumeric, collapse duplicates. It is deliberately coarse; its
only jobs are the three-way negative stratification (zero / some / high
similarity) and ranking hard negatives. An inverted token index makes
candidate retrieval complete: any atom with nonzero Jaccard to an anchor
shares at least one token with it, so it sits in some shared bucket.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .atoms import AtomStore

__all__ = [
    "word_tokens",
    "word_tokenize",
    "jaccard",
    "SimilarityIndex",
    "build_index",
    "top_n_similar_negatives",
]

# unicode letters and digits; underscore is a separator like any other symbol
_SPLIT = re.compile(r"[\W_]+", re.UNICODE)


def word_tokens(text: str) -> list[str]:
    """Ordered lowercase word tokens (duplicates kept)."""
    return [t for t in _SPLIT.split(text.lower()) if t]


def word_tokenize(text: str) -> frozenset[str]:
    """Token set for similarity: lowercase words, duplicates collapsed."""
    return frozenset(word_tokens(text))


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    """|a ∩ b| / |a ∪ b|; 0.0 when both sets are empty."""
    if not a and not b:
        return 0.0
    inter = len(a & b)
    if inter == 0:
        return 0.0
    return inter / len(a | b)


@dataclass(frozen=True)
class SimilarityIndex:
    """Inverted token index over a store, immutable after build."""

    token_sets: dict[str, frozenset[str]]  # aui -> tokens
    buckets: dict[str, frozenset[str]]  # token -> auis containing it

    def candidates(self, aui: str) -> set[str]:
        """All AUIs sharing at least one token with ``aui`` (self excluded)."""
        found: set[str] = set()
        for token in self.token_sets[aui]:
            found |= self.buckets[token]
        found.discard(aui)
        return found

    def similarity(self, a: str, b: str) -> float:
        return jaccard(self.token_sets[a], self.token_sets[b])


def build_index(store: AtomStore) -> SimilarityIndex:
    token_sets: dict[str, frozenset[str]] = {}
    buckets: dict[str, set[str]] = {}
    for atom in store:
        tokens = word_tokenize(atom.string)
        token_sets[atom.aui] = tokens
        for token in tokens:
            buckets.setdefault(token, set()).add(atom.aui)
    return SimilarityIndex(
        token_sets=token_sets,
        buckets={t: frozenset(a) for t, a in buckets.items()},
    )


def top_n_similar_negatives(
    index: SimilarityIndex,
    store: AtomStore,
    anchor: str,
    n: int,
) -> list[tuple[str, float]]:
    """The n most lexically similar non-synonyms of ``anchor``.

    Returns (aui, jaccard) sorted by score descending, aui ascending;
    only strictly positive scores qualify, so fewer than n may come back.
    """
    if anchor not in index.token_sets:
        raise KeyError(f"unknown anchor AUI {anchor!r}")
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return []
    anchor_cui = store.get(anchor).cui
    anchor_tokens = index.token_sets[anchor]
    scored = []
    for aui in index.candidates(anchor):
        if store.get(aui).cui == anchor_cui:
            continue
        score = jaccard(anchor_tokens, index.token_sets[aui])
        if score > 0.0:
            scored.append((aui, score))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:n]
