"""Quadruple facts, TSV ingestion and the indexes the miner walks."""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .chronal import TimeInterval

log = logging.getLogger(__name__)

DEFAULT_TYPE_PROPERTY = "type"


class GraphFormatError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Fact:
    id: int
    subject: str
    property: str
    object: str
    interval: Optional[TimeInterval] = None

    @property
    def temporal(self) -> bool:
        return self.interval is not None

    def key(self):
        return (self.subject, self.property, self.object, self.interval)

    def to_line(self) -> str:
        if self.interval is None:
            start = end = "-"
        else:
            start, end = str(self.interval.start), str(self.interval.end)
        return "\t".join((self.subject, self.property, self.object, start, end))


@dataclass
class LoadReport:
    lines: int = 0
    facts: int = 0
    comments: int = 0
    duplicates: int = 0
    skipped: list[tuple[int, str]] = field(default_factory=list)  # (1-based line number, reason)

    def summary(self) -> str:
        return (
            f"{self.facts} facts from {self.lines} lines "
            f"({self.duplicates} duplicates, {len(self.skipped)} skipped)"
        )


class KnowledgeGraph:
    """Immutable indexed fact store.

    ``out_index[e]`` holds the facts with subject ``e``; ``in_index[e]`` the
    facts whose object is ``e`` when ``e`` is itself an entity, i.e. occurs
    as a subject somewhere. Type-property facts feed ``class_index``.
    """

    def __init__(self, facts: Iterable[Fact], type_property: str = DEFAULT_TYPE_PROPERTY):
        self.type_property = type_property
        self.facts: list[Fact] = sorted(facts, key=lambda f: f.id)
        self.by_id: dict[int, Fact] = {}
        self.out_index: dict[str, list[Fact]] = defaultdict(list)
        self.in_index: dict[str, list[Fact]] = defaultdict(list)
        self.class_index: dict[str, set[str]] = defaultdict(set)
        self.property_catalog: dict[str, list[int]] = {}  # property -> [temporal, non-temporal]
        self.subjects: list[str] = []
        self.report = LoadReport()

        for f in self.facts:
            if f.id in self.by_id:
                raise ValueError(f"duplicate fact id {f.id}")
            self.by_id[f.id] = f
            if f.subject not in self.out_index:
                self.subjects.append(f.subject)
            self.out_index[f.subject].append(f)
            counts = self.property_catalog.setdefault(f.property, [0, 0])
            counts[0 if f.temporal else 1] += 1
            if f.property == type_property:
                self.class_index[f.subject].add(f.object)
        for f in self.facts:
            if f.object in self.out_index:
                self.in_index[f.object].append(f)
        self.out_index = dict(self.out_index)
        self.in_index = dict(self.in_index)
        self.class_index = dict(self.class_index)
        self._subject_set = frozenset(self.out_index)

    def __len__(self) -> int:
        return len(self.facts)

    def is_entity(self, symbol: str) -> bool:
        return symbol in self._subject_set

    def out_facts(self, e: str) -> list[Fact]:
        return self.out_index.get(e, [])

    def in_facts(self, e: str) -> list[Fact]:
        return self.in_index.get(e, [])

    def classes_of(self, e: str) -> frozenset[str] | set[str]:
        return self.class_index.get(e, frozenset())

    def temporal_properties(self) -> list[str]:
        return sorted(p for p, (t, _) in self.property_catalog.items() if t)

    def fact_keys(self) -> set:
        return {f.key() for f in self.facts}


def classes_of(g: KnowledgeGraph, e: str):
    return g.classes_of(e)


def parse_line(line: str) -> tuple[str, str, str, Optional[TimeInterval]]:
    parts = line.rstrip("\r\n").split("\t")
    if len(parts) < 5:
        raise GraphFormatError(f"expected 5 tab-separated fields, got {len(parts)}")
    s, p, o, start, end = (x.strip() for x in parts[:5])
    if not s or not p or not o:
        raise GraphFormatError("empty subject, property or object")
    if start == "-" and end == "-":
        return s, p, o, None
    try:
        interval = TimeInterval.parse(start, end)
    except ValueError as e:
        raise GraphFormatError(str(e)) from None
    return s, p, o, interval


def parse_quads(
    lines: Iterable[str],
    type_property: str = DEFAULT_TYPE_PROPERTY,
    strict: bool = False,
) -> KnowledgeGraph:
    report = LoadReport()
    seen: set = set()
    facts: list[Fact] = []
    for idx, line in enumerate(lines):
        report.lines += 1
        if not line.strip() or line.startswith("#"):
            report.comments += 1
            continue
        try:
            s, p, o, interval = parse_line(line)
        except GraphFormatError as e:
            if strict:
                raise GraphFormatError(f"line {idx + 1}: {e}") from None
            report.skipped.append((idx + 1, str(e)))
            log.warning("line %d skipped: %s", idx + 1, e)
            continue
        k = (s, p, o, interval)
        if k in seen:
            report.duplicates += 1
            continue
        seen.add(k)
        facts.append(Fact(idx, s, p, o, interval))
    report.facts = len(facts)
    g = KnowledgeGraph(facts, type_property)
    g.report = report
    return g


def load_graph(
    path: str | Path,
    type_property: str = DEFAULT_TYPE_PROPERTY,
    strict: bool = False,
) -> KnowledgeGraph:
    """Read a quad TSV file. Malformed lines are skipped and listed in ``g.report``
    unless ``strict`` is set, in which case the first one raises."""
    with open(path, encoding="utf-8") as fh:
        return parse_quads(fh, type_property, strict)


def dump_graph(g: KnowledgeGraph, path: str | Path) -> None:
    # Gaps in the id sequence are padded with comment lines so ids survive a reload.
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_graph(g))


def format_graph(g: KnowledgeGraph) -> str:
    out = []
    nxt = 0
    for f in g.facts:
        while nxt < f.id:
            out.append("#")
            nxt += 1
        out.append(f.to_line())
        nxt += 1
    return "".join(line + "\n" for line in out)
