"""Demote predicted properties whose hypothetical fact conflicts with the graph,
and score rankings with MRR and Hits@k."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .chronal import TimeInterval
from .detector import violations
from .kg import Fact, KnowledgeGraph
from .miner import TemporalConstraint

log = logging.getLogger(__name__)

HYPOTHETICAL_ID = -1


@dataclass
class PredictionCase:
    subject: str
    object: str
    interval: Optional[TimeInterval]
    candidates: list[str]
    gold: str
    raw: Optional[str] = field(default=None, repr=False, compare=False)  # source line, echoed when unchanged

    def validate(self) -> "PredictionCase":
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError("duplicate candidates")
        if self.gold not in self.candidates:
            raise ValueError(f"gold {self.gold!r} not among candidates")
        return self

    def rank(self, order: Optional[Sequence[str]] = None) -> int:
        return list(self.candidates if order is None else order).index(self.gold) + 1

    @classmethod
    def from_json(cls, line: str) -> "PredictionCase":
        d = json.loads(line)
        start, end = d.get("t_start", "-"), d.get("t_end", "-")
        start = "-" if start in (None, "") else str(start)
        end = "-" if end in (None, "") else str(end)
        interval = None if start == end == "-" else TimeInterval.parse(start, end)
        cands = d["candidates"]
        if not isinstance(cands, list) or not all(isinstance(c, str) for c in cands):
            raise ValueError("candidates must be a list of property ids")
        return cls(str(d["subject"]), str(d["object"]), interval, list(cands), str(d["gold"]), line.rstrip("\n"))

    def to_json(self, order: Optional[Sequence[str]] = None, demoted: Sequence[str] = ()) -> str:
        if self.interval is None:
            start = end = "-"
        else:
            start, end = str(self.interval.start), str(self.interval.end)
        d = {
            "subject": self.subject,
            "object": self.object,
            "t_start": start,
            "t_end": end,
            "candidates": list(self.candidates if order is None else order),
            "gold": self.gold,
        }
        if demoted:
            d["conflicting"] = list(demoted)
        return json.dumps(d, ensure_ascii=False)


def load_predictions(path) -> tuple[list[PredictionCase], list[tuple[int, str]]]:
    """Valid cases plus (line number, reason) for each malformed line."""
    cases, bad = [], []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                cases.append(PredictionCase.from_json(line).validate())
            except (ValueError, KeyError, TypeError) as e:
                bad.append((n, str(e)))
                log.warning("%s:%d: skipped prediction: %s", path, n, e)
    return cases, bad


class OverlayGraph:
    """Read-only view of ``g`` with one extra fact; ``g`` itself is untouched."""

    def __init__(self, g: KnowledgeGraph, fact: Fact):
        self.base = g
        self.fact = fact
        self.type_property = g.type_property
        self.property_catalog = g.property_catalog
        self.class_index = g.class_index
        self._new_entity = not g.is_entity(fact.subject)

    def is_entity(self, e: str) -> bool:
        return e == self.fact.subject or self.base.is_entity(e)

    def out_facts(self, e: str) -> list[Fact]:
        fs = self.base.out_facts(e)
        return fs + [self.fact] if e == self.fact.subject else fs

    def in_facts(self, e: str) -> list[Fact]:
        if e == self.fact.subject and self._new_entity:
            # the subject only becomes an entity through the overlay fact
            fs = [f for f in self.base.facts if f.object == e]
        else:
            fs = self.base.in_facts(e)
        if e == self.fact.object and self.is_entity(e):
            fs = fs + [self.fact]
        return fs

    def classes_of(self, e: str):
        return self.base.classes_of(e)


def _anchors(view: OverlayGraph, f: Fact) -> list[str]:
    """Subjects whose matches can contain ``f``: its ends plus entities one
    non-temporal hop away (shape B places ``f`` on the far subject)."""
    ends = [f.subject] + ([f.object] if view.is_entity(f.object) else [])
    out: dict[str, None] = dict.fromkeys(ends)
    for e in ends:
        for h in view.out_facts(e):
            if not h.temporal and view.is_entity(h.object):
                out.setdefault(h.object, None)
        for h in view.in_facts(e):
            if not h.temporal:
                out.setdefault(h.subject, None)
    return list(out)


def conflicts_for_fact(g: KnowledgeGraph, constraints: Iterable[TemporalConstraint], f: Fact) -> list[tuple[str, tuple[int, ...]]]:
    """(constraint id, fact ids) of every conflict the hypothetical ``f`` takes part in."""
    view = OverlayGraph(g, f)
    anchors = _anchors(view, f)
    out = []
    for tc in constraints:
        if f.property not in {p for p, _ in tc.pattern.slots}:
            continue
        for m in violations(view, tc, anchors):
            ids = tuple(m.fact_ids)
            if f.id in ids:
                out.append((tc.id, ids))
    return out


def _hypothesis(case: PredictionCase, prop: str) -> Fact:
    return Fact(HYPOTHETICAL_ID, case.subject, prop, case.object, case.interval)


def conflicting_candidates(g: KnowledgeGraph, constraints: Sequence[TemporalConstraint], case: PredictionCase) -> list[str]:
    return [p for p in case.candidates if conflicts_for_fact(g, constraints, _hypothesis(case, p))]


def rerank(g: KnowledgeGraph, constraints: Sequence[TemporalConstraint], case: PredictionCase) -> list[str]:
    """Stable partition: clean candidates first, conflicting ones after, each in input order."""
    bad = set(conflicting_candidates(g, constraints, case))
    return [p for p in case.candidates if p not in bad] + [p for p in case.candidates if p in bad]


@dataclass
class RankMetrics:
    mrr: float
    hits1: float
    hits3: float
    hits10: float
    cases: int
    rejected: int = 0

    def to_dict(self) -> dict:
        return {
            "MRR": self.mrr,
            "Hits@1": self.hits1,
            "Hits@3": self.hits3,
            "Hits@10": self.hits10,
            "cases": self.cases,
            "rejected": self.rejected,
        }

    def table(self) -> str:
        head = f"{'MRR':>8} {'Hits@1':>8} {'Hits@3':>8} {'Hits@10':>8}"
        row = f"{self.mrr:8.2f} {self.hits1:8.2f} {self.hits3:8.2f} {self.hits10:8.2f}"
        tail = f"cases: {self.cases}, rejected: {self.rejected}"
        return "\n".join((head, row, tail))


def rank_metrics(cases: Iterable[tuple[Sequence[str], str]]) -> RankMetrics:
    """MRR and Hits@1/3/10 in percent, rounded to two decimals. Cases whose
    gold is missing from the list are counted as rejected and left out."""
    ranks, rejected = [], 0
    for ranked, gold in cases:
        ranked = list(ranked)
        if gold not in ranked:
            rejected += 1
            continue
        ranks.append(ranked.index(gold) + 1)
    if not ranks:
        return RankMetrics(0.0, 0.0, 0.0, 0.0, 0, rejected)
    n = len(ranks)

    def pct(x: float) -> float:
        return round(100.0 * x / n, 2)

    return RankMetrics(
        pct(sum(1.0 / r for r in ranks)),
        pct(sum(r <= 1 for r in ranks)),
        pct(sum(r <= 3 for r in ranks)),
        pct(sum(r <= 10 for r in ranks)),
        n,
        rejected,
    )
