"""Shared fixtures: a small hand-written concept store and random-store
generators for oracle-equivalence tests."""

from __future__ import annotations

import numpy as np
import pytest

from vocalign.atoms import Atom, AtomStore

# one concept, six lexical variants, two source vocabularies — the
# canonical worked example used across the test suite
HEADACHE_ROWS = [
    ("A0066000", "Headache", "MSH", "C0018681"),
    ("A0066008", "Headaches", "MSH", "C0018681"),
    ("A1641924", "Cranial Pains", "MSH", "C0018681"),
    ("A26628141", "Cephalodynia", "MSH", "C0018681"),
    ("A2957278", "Cephalodynia", "SNOMEDCT_US", "C0018681"),
    ("A3487586", "Headache (finding)", "SNOMEDCT_US", "C0018681"),
]


def make_store(rows) -> AtomStore:
    return AtomStore(Atom(aui=a, string=s, src=src, cui=c) for a, s, src, c in rows)


@pytest.fixture
def headache_store() -> AtomStore:
    return make_store(HEADACHE_ROWS)


_TOKEN_POOL = [f"tok{i}" for i in range(30)]


def random_store(rng: np.random.Generator, n_atoms: int, n_concepts: int | None = None) -> AtomStore:
    """Random store over a small shared token pool: plenty of overlapping
    and non-overlapping strings, at least two concepts."""
    if n_concepts is None:
        n_concepts = max(2, n_atoms // 3)
    rows = []
    for i in range(n_atoms):
        k = int(rng.integers(1, 5))
        words = rng.choice(_TOKEN_POOL, size=k, replace=False)
        rows.append(
            (
                f"A{i:05d}",
                " ".join(words),
                f"SRC{int(rng.integers(0, 3))}",
                f"C{int(rng.integers(0, n_concepts)):05d}",
            )
        )
    store = make_store(rows)
    if len(store.cuis) < 2:  # pragma: no cover - vanishingly unlikely
        rows[-1] = (rows[-1][0], rows[-1][1], rows[-1][2], "C_EXTRA")
        store = make_store(rows)
    return store
