"""Atom ingestion, validation and indexing.

An atom is one occurrence of a term in one source vocabulary. Two atoms
are synonymous iff they share a concept identifier (cui), which makes the
cui the label oracle for pair generation. Atom files are UTF-8,
pipe-delimited ``AUI|STR|SRC|CUI``, one record per line, ``#`` comments
ignored, no escaping (a pipe inside a field is rejected via the field
count).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

from .errors import AtomFileError

__all__ = [
    "Atom",
    "AtomStore",
    "ValidationReport",
    "ingest",
    "write_atoms",
    "concept_members",
    "validate",
]


@dataclass(frozen=True)
class Atom:
    """One term occurrence: unique atom id, its string, source, concept."""

    aui: str
    string: str
    src: str
    cui: str


class AtomStore:
    """Immutable collection of atoms with cui and src indices.

    Ingestion order is preserved (it defines corpus order downstream);
    the cui/src buckets are sorted lexicographically by aui so that
    every derived ordering is deterministic across runs and platforms.
    """

    def __init__(self, atoms: Iterable[Atom]):
        by_aui: dict[str, Atom] = {}
        for atom in atoms:
            if atom.aui in by_aui:
                raise AtomFileError(f"duplicate AUI {atom.aui!r}")
            if not atom.string.strip():
                raise AtomFileError(f"empty string for AUI {atom.aui!r}")
            by_aui[atom.aui] = atom
        self._by_aui = by_aui
        by_cui: dict[str, list[str]] = {}
        by_src: dict[str, list[str]] = {}
        for atom in by_aui.values():
            by_cui.setdefault(atom.cui, []).append(atom.aui)
            by_src.setdefault(atom.src, []).append(atom.aui)
        self._by_cui = {cui: tuple(sorted(auis)) for cui, auis in by_cui.items()}
        self._by_src = {src: tuple(sorted(auis)) for src, auis in by_src.items()}

    def __len__(self) -> int:
        return len(self._by_aui)

    def __contains__(self, aui: str) -> bool:
        return aui in self._by_aui

    def __iter__(self):
        return iter(self._by_aui.values())

    def get(self, aui: str) -> Atom:
        try:
            return self._by_aui[aui]
        except KeyError:
            raise KeyError(f"unknown AUI {aui!r}") from None

    @property
    def auis(self) -> tuple[str, ...]:
        return tuple(self._by_aui)

    @property
    def cuis(self) -> tuple[str, ...]:
        return tuple(self._by_cui)

    @property
    def sources(self) -> tuple[str, ...]:
        return tuple(self._by_src)

    def members(self, cui: str) -> tuple[str, ...]:
        """AUIs sharing ``cui`` in lexicographic order; empty if unknown."""
        return self._by_cui.get(cui, ())

    def source_members(self, src: str) -> tuple[str, ...]:
        return self._by_src.get(src, ())


@dataclass(frozen=True)
class ValidationReport:
    atoms: int
    concepts: int
    sources: int
    singleton_concepts: int
    per_source: dict[str, int] = field(default_factory=dict)


def _open_source(source) -> TextIO:
    if isinstance(source, (str, Path)):
        return open(source, encoding="utf-8")
    return source


def ingest(source) -> AtomStore:
    """Parse an atom file (path, or open text stream) into an AtomStore.

    Rejects wrong field counts, duplicate AUIs, empty strings, and tab
    characters inside fields (tabs would corrupt downstream pair files).
    Blank lines and ``#`` comments are skipped.
    """
    stream = _open_source(source)
    close = isinstance(source, (str, Path))
    atoms: list[Atom] = []
    seen: set[str] = set()
    try:
        for lineno, raw in enumerate(stream, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("|")
            if len(fields) != 4:
                raise AtomFileError(
                    f"line {lineno}: expected 4 pipe-delimited fields, got {len(fields)}"
                )
            aui, string, src, cui = fields
            if "\t" in line:
                raise AtomFileError(f"line {lineno}: tab character inside a field")
            if aui in seen:
                raise AtomFileError(f"line {lineno}: duplicate AUI {aui!r}")
            if not string.strip():
                raise AtomFileError(f"line {lineno}: empty string for AUI {aui!r}")
            if not aui or not src or not cui:
                raise AtomFileError(f"line {lineno}: empty identifier field")
            seen.add(aui)
            atoms.append(Atom(aui=aui, string=string, src=src, cui=cui))
    finally:
        if close:
            stream.close()
    return AtomStore(atoms)


def write_atoms(store: AtomStore, sink) -> None:
    """Serialize a store back to the pipe-delimited atom format."""
    stream = open(sink, "w", encoding="utf-8", newline="\n") if isinstance(sink, (str, Path)) else sink
    close = isinstance(sink, (str, Path))
    try:
        for atom in store:
            for value in (atom.aui, atom.string, atom.src, atom.cui):
                if "|" in value:
                    raise AtomFileError(f"pipe inside field for AUI {atom.aui!r}")
            stream.write(f"{atom.aui}|{atom.string}|{atom.src}|{atom.cui}\n")
    finally:
        if close:
            stream.close()


def dumps(store: AtomStore) -> str:
    buf = io.StringIO()
    write_atoms(store, buf)
    return buf.getvalue()


def concept_members(store: AtomStore, cui: str) -> list[str]:
    """All AUIs of a concept in lexicographic order ([] if cui unknown)."""
    return list(store.members(cui))


def validate(store: AtomStore) -> ValidationReport:
    singletons = sum(1 for cui in store.cuis if len(store.members(cui)) == 1)
    per_source = {src: len(store.source_members(src)) for src in sorted(store.sources)}
    return ValidationReport(
        atoms=len(store),
        concepts=len(store.cuis),
        sources=len(store.sources),
        singleton_concepts=singletons,
        per_source=per_source,
    )
