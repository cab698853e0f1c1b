"""Labeled pair generation: positives, stratified negatives, splits, files.

Negatives are drawn in three strata: TOPN_SIM (per-anchor hardest lexical
negatives), RAN_SIM (uniform over non-synonymous pairs that share at
least one token), and RAN_NOSIM (uniform over pairs with zero token
overlap). Stores up to ENUMERATION_LIMIT atoms get exact stratum
enumeration and uniform sampling without replacement, which makes the
achieved sets reproducible and checkable against a brute-force oracle;
larger stores fall back to seeded rejection sampling capped at 50x the
requested count per stratum. Exhausted strata redistribute their
shortfall to RAN_NOSIM and the final shortfall is reported, never
silently absorbed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .atoms import AtomStore
from .errors import PairFileError
from .lexsim import SimilarityIndex, top_n_similar_negatives

__all__ = [
    "POS",
    "TOPN_SIM",
    "RAN_SIM",
    "RAN_NOSIM",
    "SPLIT_TAGS",
    "LabeledPair",
    "DatasetSpec",
    "PairGenResult",
    "generate_positives",
    "generate_negatives",
    "split_train_test",
    "write_pairs",
    "read_pairs",
]

POS = "POS"
TOPN_SIM = "TOPN_SIM"
RAN_SIM = "RAN_SIM"
RAN_NOSIM = "RAN_NOSIM"
SPLIT_TAGS = (POS, TOPN_SIM, RAN_SIM, RAN_NOSIM)
NEGATIVE_TAGS = (TOPN_SIM, RAN_SIM, RAN_NOSIM)

# above this atom count, stratum sampling switches from exact enumeration
# to capped rejection sampling (bounded runtime on adversarial stores)
ENUMERATION_LIMIT = 2000
REJECTION_CAP_FACTOR = 50

PAIR_HEADER = ("aui1", "aui2", "str1", "str2", "src1", "src2", "label", "split")


@dataclass(frozen=True, order=True)
class LabeledPair:
    """Canonical unordered atom pair: a < b, label 1 iff synonymous."""

    a: str
    b: str
    label: int
    split_tag: str

    def __post_init__(self):
        if self.a >= self.b:
            raise ValueError(f"pair not canonical: {self.a!r} >= {self.b!r}")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if self.split_tag not in SPLIT_TAGS:
            raise ValueError(f"unknown split tag {self.split_tag!r}")
        if (self.split_tag == POS) != (self.label == 1):
            raise ValueError("split tag POS must coincide with label 1")

    @property
    def key(self) -> tuple[str, str]:
        return (self.a, self.b)


def make_pair(x: str, y: str, label: int, split_tag: str) -> LabeledPair:
    a, b = (x, y) if x < y else (y, x)
    return LabeledPair(a=a, b=b, label=label, split_tag=split_tag)


@dataclass(frozen=True)
class DatasetSpec:
    """Knobs for pair generation; the defaults mirror the full-scale
    train split's roughly 7.6 negatives per positive."""

    negative_ratio: float = 7.6
    topn: int = 10
    stratum_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    seed: int = 0
    cross_source_only: bool = True
    test_fraction: float = 0.2

    def __post_init__(self):
        if self.negative_ratio <= 0:
            raise ValueError("negative_ratio must be > 0")
        if self.topn < 0:
            raise ValueError("topn must be >= 0")
        if len(self.stratum_weights) != 3 or any(w < 0 for w in self.stratum_weights):
            raise ValueError("stratum_weights must be 3 non-negative values")
        if abs(sum(self.stratum_weights) - 1.0) > 1e-9:
            raise ValueError("stratum_weights must sum to 1")


@dataclass
class PairGenResult:
    """Outcome of negative generation, including exhaustion bookkeeping."""

    pairs: list[LabeledPair]
    requested: int
    quotas: dict[str, int]
    counts: dict[str, int] = field(default_factory=dict)
    shortfall: dict[str, int] = field(default_factory=dict)

    @property
    def exhausted(self) -> bool:
        return sum(self.shortfall.values()) > 0


def generate_positives(store: AtomStore, cross_source_only: bool = True) -> set[LabeledPair]:
    """All unordered same-cui pairs with distinct AUIs (label 1).

    With cross_source_only, pairs whose atoms come from the same source
    vocabulary are dropped, matching the task's cross-source framing.
    """
    positives: set[LabeledPair] = set()
    for cui in store.cuis:
        members = store.members(cui)
        for x, y in itertools.combinations(members, 2):
            if cross_source_only and store.get(x).src == store.get(y).src:
                continue
            positives.add(make_pair(x, y, 1, POS))
    return positives


def _apportion(total: int, weights: tuple[float, float, float]) -> list[int]:
    """Largest-remainder split of ``total`` into integer quotas."""
    raw = [total * w for w in weights]
    base = [int(r) for r in raw]
    leftover = total - sum(base)
    remainders = sorted(range(3), key=lambda i: (-(raw[i] - base[i]), i))
    for i in remainders[:leftover]:
        base[i] += 1
    return base


def _mine_topn_pool(
    store: AtomStore, index: SimilarityIndex, topn: int
) -> dict[tuple[str, str], float]:
    pool: dict[tuple[str, str], float] = {}
    for anchor in sorted(store.auis):
        for aui, score in top_n_similar_negatives(index, store, anchor, topn):
            key = (anchor, aui) if anchor < aui else (aui, anchor)
            pool[key] = score
    return pool


def _enumerate_strata(
    store: AtomStore, index: SimilarityIndex
) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
    """Exact eligible pair sets: (similar negatives, zero-overlap negatives).

    Similar pairs come from the inverted index buckets, so a pair appears
    iff the two token sets intersect; everything else with a differing
    cui lands in the zero-overlap list. O(n^2) in the worst case.
    """
    similar: set[tuple[str, str]] = set()
    for bucket in index.buckets.values():
        members = sorted(bucket)
        for x, y in itertools.combinations(members, 2):
            if store.get(x).cui != store.get(y).cui:
                similar.add((x, y))
    auis = sorted(store.auis)
    nosim = [
        (x, y)
        for x, y in itertools.combinations(auis, 2)
        if store.get(x).cui != store.get(y).cui and (x, y) not in similar
    ]
    return sorted(similar), nosim


def _sample_without_replacement(
    eligible: list[tuple[str, str]],
    count: int,
    rng: np.random.Generator,
    exclude: set[tuple[str, str]],
) -> list[tuple[str, str]]:
    usable = [p for p in eligible if p not in exclude]
    if count >= len(usable):
        return usable
    idx = rng.choice(len(usable), size=count, replace=False)
    return [usable[i] for i in sorted(idx)]


def _rejection_sample(
    store: AtomStore,
    index: SimilarityIndex,
    count: int,
    rng: np.random.Generator,
    want_similar: bool,
    exclude: set[tuple[str, str]],
) -> list[tuple[str, str]]:
    auis = sorted(store.auis)
    n = len(auis)
    chosen: list[tuple[str, str]] = []
    taken: set[tuple[str, str]] = set()
    attempts = 0
    cap = REJECTION_CAP_FACTOR * count
    while len(chosen) < count and attempts < cap:
        attempts += 1
        i, j = rng.integers(0, n, size=2)
        if i == j:
            continue
        x, y = auis[i], auis[j]
        key = (x, y) if x < y else (y, x)
        if key in taken or key in exclude:
            continue
        if store.get(x).cui == store.get(y).cui:
            continue
        shares = bool(index.token_sets[x] & index.token_sets[y])
        if shares != want_similar:
            continue
        taken.add(key)
        chosen.append(key)
    return chosen


def generate_negatives(
    store: AtomStore,
    index: SimilarityIndex,
    spec: DatasetSpec,
    positives_count: int,
) -> PairGenResult:
    """floor(negative_ratio * positives_count) label-0 pairs, stratified.

    Deterministic given spec.seed. Raises if the store cannot yield any
    negative pair (fewer than two distinct concepts).
    """
    if len(store.cuis) < 2:
        raise ValueError("no negative pairs exist: store has fewer than two concepts")
    total = int(spec.negative_ratio * positives_count)
    quotas = dict(zip(NEGATIVE_TAGS, _apportion(total, spec.stratum_weights)))
    rng = np.random.default_rng([spec.seed, 0])

    counts: dict[str, int] = {}
    shortfall: dict[str, int] = {}
    pairs: list[LabeledPair] = []
    chosen: set[tuple[str, str]] = set()

    # hardest negatives: per-anchor top-N pool, cut globally by score
    pool = _mine_topn_pool(store, index, spec.topn)
    ranked = sorted(pool.items(), key=lambda item: (-item[1], item[0]))
    topn_take = [key for key, _ in ranked[: quotas[TOPN_SIM]]]
    counts[TOPN_SIM] = len(topn_take)
    shortfall[TOPN_SIM] = max(0, quotas[TOPN_SIM] - len(topn_take))
    chosen.update(topn_take)
    pairs.extend(make_pair(a, b, 0, TOPN_SIM) for a, b in topn_take)

    carry = shortfall[TOPN_SIM]
    if len(store) <= ENUMERATION_LIMIT:
        similar, nosim = _enumerate_strata(store, index)
        sim_take = _sample_without_replacement(similar, quotas[RAN_SIM], rng, chosen)
        counts[RAN_SIM] = len(sim_take)
        shortfall[RAN_SIM] = max(0, quotas[RAN_SIM] - len(sim_take))
        carry += shortfall[RAN_SIM]
        chosen.update(sim_take)
        pairs.extend(make_pair(a, b, 0, RAN_SIM) for a, b in sim_take)

        want = quotas[RAN_NOSIM] + carry
        nosim_take = _sample_without_replacement(nosim, want, rng, chosen)
        counts[RAN_NOSIM] = len(nosim_take)
        shortfall[RAN_NOSIM] = max(0, want - len(nosim_take))
        pairs.extend(make_pair(a, b, 0, RAN_NOSIM) for a, b in nosim_take)
    else:
        sim_take = _rejection_sample(store, index, quotas[RAN_SIM], rng, True, chosen)
        counts[RAN_SIM] = len(sim_take)
        shortfall[RAN_SIM] = max(0, quotas[RAN_SIM] - len(sim_take))
        carry += shortfall[RAN_SIM]
        chosen.update(sim_take)
        pairs.extend(make_pair(a, b, 0, RAN_SIM) for a, b in sim_take)

        want = quotas[RAN_NOSIM] + carry
        nosim_take = _rejection_sample(store, index, want, rng, False, chosen)
        counts[RAN_NOSIM] = len(nosim_take)
        shortfall[RAN_NOSIM] = max(0, want - len(nosim_take))
        pairs.extend(make_pair(a, b, 0, RAN_NOSIM) for a, b in nosim_take)

    pairs.sort()
    return PairGenResult(
        pairs=pairs,
        requested=total,
        quotas=quotas,
        counts=counts,
        shortfall=shortfall,
    )


def split_train_test(
    pairs: set[LabeledPair] | list[LabeledPair], spec: DatasetSpec
) -> tuple[set[LabeledPair], set[LabeledPair]]:
    """Per-stratum split: floor(test_fraction * |stratum|) pairs held out.

    Deterministic given spec.seed; train and test are disjoint and their
    union is the input.
    """
    if not (0.0 < spec.test_fraction < 1.0):
        raise ValueError(f"test_fraction must be in (0,1), got {spec.test_fraction}")
    rng = np.random.default_rng([spec.seed, 1])
    by_tag: dict[str, list[LabeledPair]] = {tag: [] for tag in SPLIT_TAGS}
    for pair in sorted(pairs):
        by_tag[pair.split_tag].append(pair)
    train: set[LabeledPair] = set()
    test: set[LabeledPair] = set()
    for tag in SPLIT_TAGS:
        group = by_tag[tag]
        if not group:
            continue
        k = int(len(group) * spec.test_fraction)
        perm = rng.permutation(len(group))
        picked = set(perm[:k].tolist())
        for i, pair in enumerate(group):
            (test if i in picked else train).add(pair)
    return train, test


def write_pairs(pairs, store: AtomStore, sink) -> None:
    """Write canonical-order TSV; every aui must resolve in the store."""
    stream = open(sink, "w", encoding="utf-8", newline="\n") if isinstance(sink, (str, Path)) else sink
    close = isinstance(sink, (str, Path))
    try:
        stream.write("\t".join(PAIR_HEADER) + "\n")
        for pair in sorted(pairs):
            try:
                atom_a, atom_b = store.get(pair.a), store.get(pair.b)
            except KeyError as e:
                raise PairFileError(f"pair references unknown atom: {e}") from None
            for s in (atom_a.string, atom_b.string):
                if "\t" in s:
                    raise PairFileError(f"tab inside atom string {s!r}")
            stream.write(
                "\t".join(
                    (
                        pair.a,
                        pair.b,
                        atom_a.string,
                        atom_b.string,
                        atom_a.src,
                        atom_b.src,
                        str(pair.label),
                        pair.split_tag,
                    )
                )
                + "\n"
            )
    finally:
        if close:
            stream.close()


def read_pairs(source) -> list[LabeledPair]:
    """Parse a pair TSV back into LabeledPairs (strings are not re-checked
    against a store; the aui columns are authoritative)."""
    stream = open(source, encoding="utf-8") if isinstance(source, (str, Path)) else source
    close = isinstance(source, (str, Path))
    pairs: list[LabeledPair] = []
    try:
        header = stream.readline().rstrip("\n")
        if header.split("\t") != list(PAIR_HEADER):
            raise PairFileError(f"bad pair file header: {header!r}")
        for lineno, raw in enumerate(stream, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != len(PAIR_HEADER):
                raise PairFileError(
                    f"line {lineno}: expected {len(PAIR_HEADER)} fields, got {len(fields)}"
                )
            a, b, _s1, _s2, _src1, _src2, label_s, tag = fields
            if label_s not in ("0", "1"):
                raise PairFileError(f"line {lineno}: bad label {label_s!r}")
            try:
                pairs.append(LabeledPair(a=a, b=b, label=int(label_s), split_tag=tag))
            except ValueError as e:
                raise PairFileError(f"line {lineno}: {e}") from None
    finally:
        if close:
            stream.close()
    return pairs
