"""Seeded synthetic atom corpus for end-to-end runs without licensed data.

Each concept gets a unique pseudoword base (three syllables, collision
checked) and 2-5 lexical-variant atoms built from shared surface
templates: appended/prepended modifiers, a second modifier, a
parenthetical qualifier, a case variant, or the bare base. Modifiers
are drawn from one global pool, so different concepts collide on them —
that is what gives the negative strata lexically-hard members — while
the base token is never altered, so every synonymous pair shares at
least one informative token. Atoms round-robin over three pseudo-source
vocabularies, guaranteeing cross-source positives.

Run as a module to write a corpus file:
    python -m vocalign.synthetic --out toy.psv
"""

from __future__ import annotations

import argparse

import numpy as np

from .atoms import Atom, AtomStore, write_atoms

__all__ = ["MODIFIERS", "SOURCES", "generate_corpus"]

SOURCES = ("TOYA", "TOYB", "TOYC")

_SYLLABLES = [
    c + v
    for c in ("b", "d", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z")
    for v in ("a", "e", "i", "o", "u")
]

MODIFIERS = (
    "disorder",
    "disease",
    "syndrome",
    "finding",
    "lesion",
    "chronic",
    "acute",
    "severe",
    "mild",
    "unspecified",
    "benign",
    "primary",
)


def _pseudoword(rng: np.random.Generator, taken: set[str]) -> str:
    while True:
        word = "".join(rng.choice(_SYLLABLES) for _ in range(3))
        if word not in taken and word not in MODIFIERS:
            taken.add(word)
            return word


def _variant(rng: np.random.Generator, base: str) -> str:
    m1, m2 = rng.choice(MODIFIERS, size=2, replace=False)
    template = rng.integers(0, 6)
    if template == 0:
        return f"{base} {m1}"
    if template == 1:
        return f"{base} {m1} {m2}"
    if template == 2:
        return f"{m1} {base}"
    if template == 3:
        return f"{base} ({m1})"
    if template == 4:
        return f"{base.capitalize()} {m1}"
    return base


def generate_corpus(
    concepts: int = 200,
    seed: int = 7,
    min_atoms: int = 2,
    max_atoms: int = 5,
    sources: tuple[str, ...] = SOURCES,
) -> AtomStore:
    """Deterministic toy store: ``concepts`` concepts, 2-5 variant atoms
    each, round-robined over ``sources``."""
    if concepts < 2:
        raise ValueError("need at least 2 concepts for a usable corpus")
    if not (1 <= min_atoms <= max_atoms):
        raise ValueError(f"bad atom count range [{min_atoms}, {max_atoms}]")
    rng = np.random.default_rng(seed)
    taken: set[str] = set()
    atoms: list[Atom] = []
    serial = 0
    for c in range(concepts):
        base = _pseudoword(rng, taken)
        cui = f"C{c:07d}"
        count = int(rng.integers(min_atoms, max_atoms + 1))
        strings = {base if count > 2 and rng.random() < 0.3 else f"{base} {rng.choice(MODIFIERS)}"}
        while len(strings) < count:
            strings.add(_variant(rng, base))
        for i, string in enumerate(sorted(strings)):
            serial += 1
            atoms.append(
                Atom(
                    aui=f"A{serial:07d}",
                    string=string,
                    src=sources[i % len(sources)],
                    cui=cui,
                )
            )
    return AtomStore(atoms)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--out", required=True, help="output atom file path")
    parser.add_argument("--concepts", type=int, default=200)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    store = generate_corpus(concepts=args.concepts, seed=args.seed)
    write_atoms(store, args.out)
    print(f"wrote {len(store)} atoms / {len(store.cuis)} concepts to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
