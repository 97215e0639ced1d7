"""Apply mined constraints to a graph: enumerate conflicting fact pairs and
measure how many annotated wrong facts they cover."""
from __future__ import annotations

import json
import logging
import multiprocessing
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .chronal import NEG
from .kg import KnowledgeGraph
from .metrics import classify_subgraph
from .miner import TemporalConstraint
from .patterns import GraphPattern, Match, matches_at, validate_match

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Conflict:
    constraint_id: str
    fact_ids: tuple[int, ...]  # (t1 fact, t2 fact[, connecting fact])
    subjects: tuple[str, ...]

    def to_json(self) -> str:
        return json.dumps(
            {"constraint_id": self.constraint_id, "fact_ids": list(self.fact_ids), "subjects": list(self.subjects)},
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "Conflict":
        d = json.loads(line)
        return cls(d["constraint_id"], tuple(int(i) for i in d["fact_ids"]), tuple(d.get("subjects", ())))


def resolvable(g: KnowledgeGraph, tc: TemporalConstraint) -> Optional[str]:
    """None if the constraint can be applied to ``g``, else the reason it cannot."""
    for p, _ in tc.pattern.slots:
        if p not in g.property_catalog:
            return f"property {p!r} not in graph"
    known = set()
    for cs in g.class_index.values():
        known |= cs
    for var, cls in tc.class_restrictions.items():
        if var not in ("x", "y", "z", "w"):
            return f"unknown variable {var!r}"
        if cls not in known:
            return f"class {cls!r} not in graph"
    return None


def _admits(g: KnowledgeGraph, tc: TemporalConstraint, m: Match) -> bool:
    if not tc.class_restrictions:
        return True
    b = m.bindings()
    return all(c in g.classes_of(b[v]) for v, c in tc.class_restrictions.items())


def violations(g: KnowledgeGraph, tc: TemporalConstraint, subjects: Optional[Iterable[str]] = None) -> Iterator[Match]:
    for x in g.subjects if subjects is None else subjects:
        for m in matches_at(g, tc.pattern, x):
            if _admits(g, tc, m) and classify_subgraph(tc.head, m) is NEG:
                yield m


def to_conflict(tc: TemporalConstraint, m: Match) -> Conflict:
    subjects = (m.x,) if m.y is None else (m.x, m.y)
    return Conflict(tc.id, tuple(m.fact_ids), subjects)


@dataclass
class DetectReport:
    conflicts: int = 0
    per_constraint: Counter = field(default_factory=Counter)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def histogram(self) -> dict[str, int]:
        return dict(sorted(self.per_constraint.items(), key=lambda kv: (-kv[1], kv[0])))

    def footer(self) -> dict:
        return {"conflicts": self.conflicts, "skipped_constraints": len(self.skipped), "per_constraint": self.histogram()}


def detect(
    g: KnowledgeGraph,
    constraints: Iterable[TemporalConstraint],
    report: Optional[DetectReport] = None,
) -> Iterator[Conflict]:
    """Stream every Negative body match of every constraint, constraint by
    constraint in the given order. Unresolvable constraints are skipped and
    listed in ``report``."""
    report = report if report is not None else DetectReport()
    for tc in constraints:
        why = resolvable(g, tc)
        if why:
            log.warning("skipping constraint %s: %s", tc.id, why)
            report.skipped.append((tc.id, why))
            continue
        for m in violations(g, tc):
            report.conflicts += 1
            report.per_constraint[tc.id] += 1
            yield to_conflict(tc, m)


_WORKER_GRAPH: Optional[KnowledgeGraph] = None


def _init_worker(g):
    global _WORKER_GRAPH
    _WORKER_GRAPH = g


def _detect_subjects(args):
    tc, subjects = args
    return [to_conflict(tc, m) for m in violations(_WORKER_GRAPH, tc, subjects)]


def detect_parallel(
    g: KnowledgeGraph,
    constraints: Iterable[TemporalConstraint],
    workers: int,
    report: Optional[DetectReport] = None,
) -> Iterator[Conflict]:
    """Same output, in the same order, as :func:`detect`, with each
    constraint's subjects split into contiguous chunks across processes."""
    if workers <= 1:
        yield from detect(g, constraints, report)
        return
    report = report if report is not None else DetectReport()
    size = max(1, -(-len(g.subjects) // workers))
    chunks = [g.subjects[i:i + size] for i in range(0, len(g.subjects), size)]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(workers, mp_context=ctx, initializer=_init_worker, initargs=(g,)) as ex:
        for tc in constraints:
            why = resolvable(g, tc)
            if why:
                log.warning("skipping constraint %s: %s", tc.id, why)
                report.skipped.append((tc.id, why))
                continue
            # map() keeps chunk order, so the merged stream matches the serial one
            for part in ex.map(_detect_subjects, [(tc, c) for c in chunks]):
                for c in part:
                    report.conflicts += 1
                    report.per_constraint[tc.id] += 1
                    yield c


def revalidate(g: KnowledgeGraph, tc: TemporalConstraint, c: Conflict) -> bool:
    """Does ``c`` still hold: facts match the body (with classes) and the head is Negative?"""
    if c.constraint_id != tc.id:
        return False
    try:
        facts = [g.by_id[i] for i in c.fact_ids]
    except KeyError:
        return False
    gp: GraphPattern = tc.pattern
    if gp.shape == "A":
        if len(facts) != 2 or len(c.subjects) != 1:
            return False
        m = Match(c.subjects[0], facts[0], facts[1])
    else:
        if len(facts) != 3 or len(c.subjects) != 2:
            return False
        m = Match(c.subjects[0], facts[0], facts[1], facts[2], c.subjects[1])
    return validate_match(gp, m) and _admits(g, tc, m) and classify_subgraph(tc.head, m) is NEG


# -- recall -----------------------------------------------------------------


class AnnotationError(ValueError):
    pass


def load_annotations(path, g: Optional[KnowledgeGraph] = None) -> dict[int, str]:
    """``fact_id<TAB>correct|wrong`` per line; ids unknown to ``g`` are rejected."""
    ann: dict[int, str] = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\r\n").split("\t")
            if len(parts) < 2:
                raise AnnotationError(f"{path}:{n}: expected fact_id and label")
            try:
                fid = int(parts[0])
            except ValueError:
                raise AnnotationError(f"{path}:{n}: bad fact id {parts[0]!r}") from None
            lab = parts[1].strip()
            if lab not in ("correct", "wrong"):
                raise AnnotationError(f"{path}:{n}: label must be correct or wrong, got {lab!r}")
            if g is not None and fid not in g.by_id:
                raise AnnotationError(f"{path}:{n}: fact id {fid} not in graph")
            ann[fid] = lab
    return ann


@dataclass
class RecallResult:
    recall: float
    wrong: int
    hits: list[int]
    missed: list[int]

    def to_dict(self) -> dict:
        return {"recall": self.recall, "wrong_facts": self.wrong, "hits": self.hits, "missed": self.missed}

    def text(self) -> str:
        return f"recall {100 * self.recall:.2f}% ({len(self.hits)}/{self.wrong} wrong facts in at least one conflict)"


def recall(conflicts: Iterable[Conflict], ann: dict[int, str]) -> RecallResult:
    """Share of wrong facts appearing in at least one conflict."""
    wrong = {i for i, lab in ann.items() if lab == "wrong"}
    hit = set()
    for c in conflicts:
        hit.update(i for i in c.fact_ids if i in wrong)
    return RecallResult(
        len(hit) / len(wrong) if wrong else 0.0,
        len(wrong),
        sorted(hit),
        sorted(wrong - hit),
    )
