"""Structural patterns A and B, their property instantiations, and matching.

Shape A binds two temporal facts around one subject ``x``::

    (x, p1, y, t1), (x, p2, z, t2)

Shape B binds temporal facts on two subjects joined by a non-temporal link::

    (x, p1, z, t1), (x, p0, y), (y, p2, w, t2)

Any slot may be reversed, in which case the pattern variable sits in the
fact's object position and the fact is reached through the in-index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional

from .chronal import INTERVAL_PREDICATES, TemporalPredicate
from .kg import Fact, KnowledgeGraph

# (property, reversed)
Slot = tuple[str, bool]

ORDER_HEADS = (
    TemporalPredicate.BEFORE,
    TemporalPredicate.START,
    TemporalPredicate.FINISH,
    TemporalPredicate.INCLUDE,
)
SAME_SLOT_HEADS = (TemporalPredicate.DISJOINT, TemporalPredicate.MUTEX)

assert set(ORDER_HEADS) | {TemporalPredicate.DISJOINT} == set(INTERVAL_PREDICATES)


def slot_str(slot: Slot) -> str:
    p, rev = slot
    return ("~" + p) if rev else p


@dataclass(frozen=True, order=True)
class GraphPattern:
    shape: str  # "A" or "B"
    slots: tuple[Slot, ...]  # A: (slot1, slot2); B: (slot0, slot1, slot2)

    def __post_init__(self):
        if self.shape == "A" and len(self.slots) != 2:
            raise ValueError("shape A takes two slots")
        if self.shape == "B" and len(self.slots) != 3:
            raise ValueError("shape B takes three slots")
        if self.shape not in ("A", "B"):
            raise ValueError(f"unknown shape {self.shape!r}")

    @property
    def distinct_objects(self) -> bool:
        return self.shape == "A" and self.slots[0] == self.slots[1]

    @property
    def temporal_slots(self) -> tuple[Slot, Slot]:
        return (self.slots[0], self.slots[1]) if self.shape == "A" else (self.slots[1], self.slots[2])

    @property
    def properties(self) -> frozenset[str]:
        return frozenset(p for p, _ in self.slots)

    @property
    def variables(self) -> tuple[str, ...]:
        """Variables a class restriction may bind; ``yz`` restricts y and z together."""
        if self.shape == "B":
            return ("x", "y", "z", "w")
        return ("x", "yz") if self.distinct_objects else ("x", "y", "z")

    def heads(self) -> tuple[TemporalPredicate, ...]:
        if self.distinct_objects:
            return SAME_SLOT_HEADS
        return ORDER_HEADS

    def signature(self) -> str:
        return self.shape + "|" + ",".join(slot_str(s) for s in self.slots)


class Match(NamedTuple):
    x: str
    f1: Fact  # temporal fact bound to t1
    f2: Fact  # temporal fact bound to t2
    link: Optional[Fact] = None  # shape B connecting fact
    y: Optional[str] = None  # shape B second subject

    def bindings(self) -> dict[str, str]:
        if self.link is None:
            return {"x": self.x, "y": _other(self.f1, self.x), "z": _other(self.f2, self.x)}
        return {
            "x": self.x,
            "y": self.y,
            "z": _other(self.f1, self.x),
            "w": _other(self.f2, self.y),
        }

    @property
    def fact_ids(self) -> list[int]:
        ids = [self.f1.id, self.f2.id]
        if self.link is not None:
            ids.append(self.link.id)
        return ids


def _other(f: Fact, end: str) -> str:
    return f.object if f.subject == end else f.subject


def incident(g: KnowledgeGraph, x: str, dropped: frozenset = frozenset(), temporal: Optional[bool] = True):
    """(slot, fact, other end) for facts touching ``x``, in fact-id order per direction.

    ``temporal`` selects temporal facts (True), non-temporal (False) or all (None).
    The type property never fills a slot.
    """
    tp = g.type_property
    out = []
    for f in g.out_facts(x):
        if f.property == tp or f.property in dropped:
            continue
        if temporal is None or f.temporal == temporal:
            out.append(((f.property, False), f, f.object))
    for f in g.in_facts(x):
        if f.property == tp or f.property in dropped:
            continue
        if temporal is None or f.temporal == temporal:
            out.append(((f.property, True), f, f.subject))
    return out


def _group(items) -> dict[Slot, list[tuple[Fact, str]]]:
    groups: dict[Slot, list] = {}
    for slot, f, other in items:
        groups.setdefault(slot, []).append((f, other))
    return groups


class MatchCounter:
    """Counts candidate pairings examined while matching (cost-model proxy)."""

    def __init__(self):
        self.pairs = 0


def subject_matches(
    g: KnowledgeGraph,
    x: str,
    dropped: frozenset = frozenset(),
    shapes: str = "AB",
    counter: Optional[MatchCounter] = None,
) -> dict[GraphPattern, list[Match]]:
    """All matches anchored at subject ``x``, grouped by graph pattern.

    Patterns appear in first-discovery order, matches in a fixed order, so
    iteration is deterministic.
    """
    result: dict[GraphPattern, list[Match]] = {}
    here = _group(incident(g, x, dropped))
    slots = list(here)
    pairs = 0
    if "A" in shapes:
        for i, s1 in enumerate(slots):
            facts1 = here[s1]
            # same slot: unordered pairs with distinct objects, ordered by fact id
            ordered = sorted(facts1, key=lambda t: t[0].id)
            same = []
            for a in range(len(ordered)):
                fa, oa = ordered[a]
                for b in range(a + 1, len(ordered)):
                    fb, ob = ordered[b]
                    pairs += 1
                    if oa != ob:
                        same.append(Match(x, fa, fb))
            if same:
                result[GraphPattern("A", (s1, s1))] = same
            for s2 in slots[i + 1:]:
                facts2 = here[s2]
                fwd = [Match(x, fa, fb) for fa, _ in facts1 for fb, _ in facts2 if fa.id != fb.id]
                pairs += len(facts1) * len(facts2)
                if fwd:
                    rev = [Match(x, fb, fa) for fb, _ in facts2 for fa, _ in facts1 if fa.id != fb.id]
                    result[GraphPattern("A", (s1, s2))] = fwd
                    result[GraphPattern("A", (s2, s1))] = rev
    if "B" in shapes and here:
        for s0, link, y in incident(g, x, dropped, temporal=False):
            if y == x or not g.is_entity(y):
                continue
            there = _group(incident(g, y, dropped))
            for s1, facts1 in here.items():
                for s2, facts2 in there.items():
                    ms = []
                    for fa, _ in facts1:
                        for fb, _ in facts2:
                            pairs += 1
                            if fa.id != fb.id:
                                ms.append(Match(x, fa, fb, link, y))
                    if ms:
                        result.setdefault(GraphPattern("B", (s0, s1, s2)), []).extend(ms)
    if counter is not None:
        counter.pairs += pairs
    return result


def is_single_object_bearer(g: KnowledgeGraph, x: str, slot: Slot, admissible=None) -> bool:
    """True when ``x`` has the slot's property (in that direction) with exactly one
    distinct other end. ``admissible`` optionally filters the other ends."""
    p, rev = slot
    facts = g.in_facts(x) if rev else g.out_facts(x)
    others = set()
    for f in facts:
        if f.property != p:
            continue
        other = f.subject if rev else f.object
        if admissible is not None and not admissible(other):
            continue
        others.add(other)
        if len(others) > 1:
            return False
    return len(others) == 1


def instantiate_patterns(g: KnowledgeGraph, shapes: str = "AB") -> Iterator[GraphPattern]:
    """Graph patterns with at least one match in ``g``, in discovery order."""
    seen: set[GraphPattern] = set()
    for x in g.subjects:
        for gp in subject_matches(g, x, shapes=shapes):
            if gp not in seen:
                seen.add(gp)
                yield gp


def _slot_facts(g: KnowledgeGraph, x: str, slot: Slot, temporal: bool, dropped=frozenset()):
    p, rev = slot
    if p in dropped:
        return []
    facts = g.in_facts(x) if rev else g.out_facts(x)
    return [
        (f, f.subject if rev else f.object)
        for f in facts
        if f.property == p and f.temporal == temporal
    ]


def matches_at(g: KnowledgeGraph, gp: GraphPattern, x: str, dropped=frozenset()) -> list[Match]:
    """Matches of one pattern anchored at ``x`` (same order as ``subject_matches``)."""
    if gp.shape == "A":
        s1, s2 = gp.slots
        f1s = _slot_facts(g, x, s1, True, dropped)
        if s1 == s2:
            ordered = sorted(f1s, key=lambda t: t[0].id)
            return [
                Match(x, fa, fb)
                for a, (fa, oa) in enumerate(ordered)
                for fb, ob in ordered[a + 1:]
                if oa != ob
            ]
        f2s = _slot_facts(g, x, s2, True, dropped)
        return [Match(x, fa, fb) for fa, _ in f1s for fb, _ in f2s if fa.id != fb.id]
    s0, s1, s2 = gp.slots
    f1s = _slot_facts(g, x, s1, True, dropped)
    if not f1s:
        return []
    out = []
    for link, y in _slot_facts(g, x, s0, False, dropped):
        if y == x or not g.is_entity(y):
            continue
        for fa, _ in f1s:
            for fb, _ in _slot_facts(g, y, s2, True, dropped):
                if fa.id != fb.id:
                    out.append(Match(x, fa, fb, link, y))
    return out


def match_subgraphs(g: KnowledgeGraph, gp: GraphPattern, subjects: Optional[Iterable[str]] = None) -> Iterator[Match]:
    """Every matched subgraph of ``gp``; all matches of one subject are contiguous."""
    for x in g.subjects if subjects is None else subjects:
        yield from matches_at(g, gp, x)


def validate_match(gp: GraphPattern, m: Match) -> bool:
    """Re-check a match against its pattern's property ids, directions and objects."""

    def fits(f: Fact, slot: Slot, anchor: str, temporal: bool) -> bool:
        p, rev = slot
        if f.property != p or f.temporal != temporal:
            return False
        return (f.object if rev else f.subject) == anchor

    if gp.shape == "A":
        if m.link is not None or m.f1.id == m.f2.id:
            return False
        if not (fits(m.f1, gp.slots[0], m.x, True) and fits(m.f2, gp.slots[1], m.x, True)):
            return False
        if gp.distinct_objects:
            b = m.bindings()
            return b["y"] != b["z"] and m.f1.id < m.f2.id
        return True
    if m.link is None or m.y is None or m.x == m.y:
        return False
    s0, s1, s2 = gp.slots
    return (
        fits(m.link, s0, m.x, False)
        and _other(m.link, m.x) == m.y
        and fits(m.f1, s1, m.x, True)
        and fits(m.f2, s2, m.y, True)
        and m.f1.id != m.f2.id
    )
