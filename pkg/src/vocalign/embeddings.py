"""Token embedding tables: static vector files and contextual extraction.

A table maps token strings to fixed-length vectors and carries two
synthetic rows: an OOV vector (the mean of all real entries) and an
all-zero pad vector. Tables come from two interchangeable routes —
loading a word2vec-style text file, or running a contextual encoder
over an atom-string corpus and pooling per-token occurrence vectors
under one of six extraction strategies (FIRST/LAST/AVERAGE occurrence
x last-layer/mean-of-last-four-layers). Both routes serialize to the
same text format, so downstream consumers cannot tell them apart.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import EncoderError, VectorFileError

__all__ = [
    "OCCURRENCES",
    "LAYER_POOLS",
    "ExtractionStrategy",
    "all_strategies",
    "EmbeddingTable",
    "ContextualEncoder",
    "ArithmeticMockEncoder",
    "load_static_table",
    "write_table",
    "random_table",
    "extract_contextual_table",
    "lookup",
]

OCCURRENCES = ("FIRST", "LAST", "AVERAGE")
LAYER_POOLS = ("LAST_LAYER", "AVG_LAST4")


@dataclass(frozen=True)
class ExtractionStrategy:
    """One of the six occurrence x layer-pooling combinations."""

    occurrence: str
    layer_pool: str

    def __post_init__(self):
        if self.occurrence not in OCCURRENCES:
            raise ValueError(f"occurrence must be one of {OCCURRENCES}, got {self.occurrence!r}")
        if self.layer_pool not in LAYER_POOLS:
            raise ValueError(f"layer_pool must be one of {LAYER_POOLS}, got {self.layer_pool!r}")

    @property
    def name(self) -> str:
        return f"{self.occurrence}.{self.layer_pool}"


def all_strategies() -> list[ExtractionStrategy]:
    return [ExtractionStrategy(occ, pool) for occ in OCCURRENCES for pool in LAYER_POOLS]


class EmbeddingTable:
    """token → vector map with derived OOV (mean entry) and zero pad rows.

    Vectors are float64 so the text serialization round-trips bit-exactly
    (shortest-repr floats). The OOV mean is computed over tokens in
    sorted order, making it independent of insertion order.
    """

    def __init__(self, entries: dict[str, np.ndarray], dim: int):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim
        self.entries: dict[str, np.ndarray] = {}
        for token, vec in entries.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (dim,):
                raise VectorFileError(
                    f"vector for token {token!r} has length {arr.shape}, expected ({dim},)"
                )
            self.entries[token] = arr
        self.pad_vector = np.zeros(dim, dtype=np.float64)
        if self.entries:
            stacked = np.stack([self.entries[t] for t in sorted(self.entries)])
            self.oov_vector = stacked.mean(axis=0)
        else:
            self.oov_vector = np.zeros(dim, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def vector(self, token: str) -> np.ndarray:
        return self.entries.get(token, self.oov_vector)

    def tokens(self) -> list[str]:
        return sorted(self.entries)


@runtime_checkable
class ContextualEncoder(Protocol):
    """Anything that turns a string into per-layer hidden states.

    encode() returns an array of shape (num_layers, len(tokens),
    hidden_dim) and must be deterministic for a fixed input.
    """

    num_layers: int
    hidden_dim: int

    def tokenize(self, text: str) -> list[str]: ...

    def encode(self, tokens: Sequence[str]) -> np.ndarray: ...


class ArithmeticMockEncoder:
    """Deterministic fixture: hidden[layer, position] = (layer + position)
    repeated across the hidden dimension, whitespace tokenization."""

    def __init__(self, hidden_dim: int = 2, num_layers: int = 4):
        self.hidden_dim = hidden_dim
        self.num_layers = num_layers

    def tokenize(self, text: str) -> list[str]:
        return text.split()

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        layers = np.arange(self.num_layers, dtype=np.float64)[:, None, None]
        positions = np.arange(len(tokens), dtype=np.float64)[None, :, None]
        return np.broadcast_to(
            layers + positions, (self.num_layers, len(tokens), self.hidden_dim)
        ).copy()


def load_static_table(source) -> EmbeddingTable:
    """Parse a word2vec text file: `count dim` header, then one
    `token v1 ... vdim` row per line, space-separated."""
    stream = open(source, encoding="utf-8") if isinstance(source, (str, Path)) else source
    close = isinstance(source, (str, Path))
    try:
        header = stream.readline().split()
        if len(header) != 2:
            raise VectorFileError(f"bad vector file header: expected 'count dim', got {header!r}")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise VectorFileError(f"non-integer vector file header: {header!r}") from None
        if count < 0 or dim < 1:
            raise VectorFileError(f"bad vector file header values: count={count} dim={dim}")
        entries: dict[str, np.ndarray] = {}
        for lineno, raw in enumerate(stream, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            fields = line.split(" ")
            token = fields[0]
            if token in entries:
                raise VectorFileError(f"line {lineno}: duplicate token {token!r}")
            if len(fields) - 1 != dim:
                raise VectorFileError(
                    f"line {lineno}: token {token!r} has {len(fields) - 1} values, expected {dim}"
                )
            try:
                vec = np.array([float(v) for v in fields[1:]], dtype=np.float64)
            except ValueError:
                raise VectorFileError(f"line {lineno}: non-numeric value for token {token!r}") from None
            entries[token] = vec
        if len(entries) != count:
            raise VectorFileError(f"header declared {count} vectors but file has {len(entries)}")
        return EmbeddingTable(entries, dim)
    finally:
        if close:
            stream.close()


def write_table(table: EmbeddingTable, sink) -> None:
    """Serialize in the same text format load_static_table reads, tokens
    sorted, floats in shortest round-trip form."""
    stream = open(sink, "w", encoding="utf-8", newline="\n") if isinstance(sink, (str, Path)) else sink
    close = isinstance(sink, (str, Path))
    try:
        stream.write(f"{len(table)} {table.dim}\n")
        for token in table.tokens():
            if " " in token:
                raise VectorFileError(f"token {token!r} contains a space")
            values = " ".join(repr(float(v)) for v in table.entries[token])
            stream.write(f"{token} {values}\n")
    finally:
        if close:
            stream.close()


def random_table(tokens, dim: int, seed: int, scale: float = 0.1) -> EmbeddingTable:
    """Seeded random-normal table over the given tokens — the no-
    pretrained-vectors route (each token still gets a distinct vector)."""
    rng = np.random.default_rng(seed)
    ordered = sorted(set(tokens))
    matrix = rng.normal(0.0, scale, size=(len(ordered), dim))
    return EmbeddingTable({t: matrix[i] for i, t in enumerate(ordered)}, dim)


def _pool_layers(hidden: np.ndarray, layer_pool: str) -> np.ndarray:
    if layer_pool == "LAST_LAYER":
        return hidden[-1]
    return hidden[-4:].mean(axis=0)


def extract_contextual_table(
    encoder: ContextualEncoder,
    corpus: Sequence[str],
    strategy: ExtractionStrategy,
    max_tokens: int = 30,
) -> EmbeddingTable:
    """Run the encoder over every corpus string (truncated to max_tokens
    subword tokens) and pool each token's occurrence vectors.

    FIRST/LAST keep the first/last occurrence in corpus order; AVERAGE
    keeps a running elementwise mean over all occurrences.
    """
    if len(corpus) == 0:
        raise ValueError("cannot extract a table from an empty corpus")
    if strategy.layer_pool == "AVG_LAST4" and encoder.num_layers < 4:
        raise EncoderError(
            f"AVG_LAST4 needs at least 4 encoder layers, got {encoder.num_layers}"
        )
    vectors: dict[str, np.ndarray] = {}
    counts: dict[str, int] = {}
    for text in corpus:
        tokens = encoder.tokenize(text)[:max_tokens]
        if not tokens:
            continue
        hidden = encoder.encode(tokens)
        pooled = _pool_layers(np.asarray(hidden, dtype=np.float64), strategy.layer_pool)
        for pos, token in enumerate(tokens):
            vec = pooled[pos]
            if strategy.occurrence == "FIRST":
                vectors.setdefault(token, vec)
            elif strategy.occurrence == "LAST":
                vectors[token] = vec
            else:
                n = counts.get(token, 0) + 1
                counts[token] = n
                prev = vectors.get(token)
                vectors[token] = vec.copy() if prev is None else prev + (vec - prev) / n
    return EmbeddingTable(vectors, encoder.hidden_dim)


def lookup(table: EmbeddingTable, tokens: Sequence[str], max_tokens: int) -> np.ndarray:
    """(max_tokens, dim) matrix: per-token vectors, OOV for unknowns,
    zero-padded on the right, truncated past max_tokens."""
    out = np.tile(table.pad_vector, (max_tokens, 1))
    for i, token in enumerate(tokens[:max_tokens]):
        out[i] = table.vector(token)
    return out
