"""Brute-force reference miner and canonical fixtures.

Nothing here reuses the engine's matching, counting or refinement code; only
the time algebra and the fact data model are shared. Graphs are scanned with
plain nested loops over the fact list, which is slow but easy to audit.
"""
from __future__ import annotations

from itertools import combinations, product

from .chronal import TemporalPredicate, TimeInterval, eval_predicate
from .kg import Fact, KnowledgeGraph, parse_quads

# Fig. 5 style career of one player: four intervals quoted in the worked
# example plus two chosen so the 15 pairwise disjointness checks split
# 10 positive / 4 negative / 1 unknown.
BECKHAM_TSV = """\
Beckham\tmember_of_sports_team\tManchester_United_FC\t1992-08\t2003-07
Beckham\tmember_of_sports_team\tReal_Madrid_CF\t2003-07\t2007-11
Beckham\tmember_of_sports_team\tEngland_national_football_team\t1996\t2009
Beckham\tmember_of_sports_team\tAC_Milan\t2009-01\t2009-07
Beckham\tmember_of_sports_team\tLA_Galaxy\t2008-01\t2012-12
Beckham\tmember_of_sports_team\tParis_Saint-Germain_FC\t2013-01\t2013-05
"""

EXAMPLE1_TSV = """\
Lionel_Messi\tmember_of_sports_team\tFC_Barcelona\t1988\t1992
Lionel_Messi\tmember_of_sports_team\tArgentina_national_football_team\t1989\t1990
"""


def beckham_fixture() -> KnowledgeGraph:
    return parse_quads(BECKHAM_TSV.splitlines(), strict=True)


def example1_fixture() -> KnowledgeGraph:
    return parse_quads(EXAMPLE1_TSV.splitlines(), strict=True)


_ORDER = (
    TemporalPredicate.BEFORE,
    TemporalPredicate.START,
    TemporalPredicate.FINISH,
    TemporalPredicate.INCLUDE,
)
_SAME = (TemporalPredicate.DISJOINT, TemporalPredicate.MUTEX)


def _value(head, f1: Fact, f2: Fact) -> int:
    # 1 positive, -1 negative, 0 unknown
    if head is TemporalPredicate.MUTEX:
        return -1
    v = eval_predicate(head, f1.interval, f2.interval)
    return {"positive": 1, "negative": -1}.get(str(v), 0)


class _Brute:
    def __init__(self, g: KnowledgeGraph):
        self.facts = sorted(g.facts, key=lambda f: f.id)
        tp = g.type_property
        self.subjects = []
        for f in self.facts:
            if f.subject not in self.subjects:
                self.subjects.append(f.subject)
        self.rank = {x: i for i, x in enumerate(self.subjects)}
        self.classes = {}
        for f in self.facts:
            if f.property == tp:
                self.classes.setdefault(f.subject, set()).add(f.object)
        self.data = [f for f in self.facts if f.property != tp]
        self.temporal_props = {f.property for f in self.facts if f.interval is not None}

    def cls(self, e):
        return self.classes.get(e, set())

    def touching(self, x, temporal):
        """(slot, fact, other) triples; out-edges first, then in-edges, id order."""
        res = []
        for f in self.data:
            if (f.interval is not None) == temporal and f.subject == x:
                res.append(((f.property, False), f, f.object))
        for f in self.data:
            if (f.interval is not None) == temporal and f.object == x and x in self.rank:
                res.append(((f.property, True), f, f.subject))
        return res

    def all_matches(self):
        """pattern key -> list of (x, f1, f2, link, y) in subject order."""
        found = {}

        def add(key, m):
            found.setdefault(key, []).append(m)

        for x in self.subjects:
            inc = self.touching(x, True)
            for (s1, f1, o1), (s2, f2, o2) in product(inc, inc):
                if f1.id == f2.id and s1 == s2:
                    continue
                if s1 == s2:
                    if f1.id < f2.id and o1 != o2:
                        add(("A", (s1, s1)), (x, f1, f2, None, None))
                elif f1.id != f2.id:
                    add(("A", (s1, s2)), (x, f1, f2, None, None))
            for s0, link, y in self.touching(x, False):
                if y == x or y not in self.rank:
                    continue
                for s1, f1, _ in inc:
                    for s2, f2, _ in self.touching(y, True):
                        if f1.id != f2.id:
                            add(("B", (s0, s1, s2)), (x, f1, f2, link, y))
        for key, ms in found.items():
            ms.sort(key=lambda m: self.rank[m[0]])
        return found

    def others(self, x, slot):
        p, rev = slot
        out = set()
        for f in self.data:
            if f.property != p:
                continue
            if not rev and f.subject == x:
                out.add(f.object)
            if rev and f.object == x and x in self.rank:
                out.add(f.subject)
        return out

    def bindings(self, key, m):
        x, f1, f2, link, y = m

        def other(f, end):
            return f.object if f.subject == end else f.subject

        if key[0] == "A":
            return {"x": x, "y": other(f1, x), "z": other(f2, x)}
        return {"x": x, "y": y, "z": other(f1, x), "w": other(f2, y)}

    def stats(self, key, head, level, restriction=None):
        """(positives, negatives, unknowns) with no short-circuiting."""
        restriction = restriction or {}
        ms = self.matches[key]

        def ok(m):
            b = self.bindings(key, m)
            return all(c in self.cls(b[v]) for v, c in restriction.items())

        pos = neg = unk = 0
        per_subject = {}
        for m in ms:
            if ok(m):
                per_subject.setdefault(m[0], []).append(_value(head, m[1], m[2]))
        if level == "fact":
            for vals in per_subject.values():
                for v in vals:
                    pos += v == 1
                    neg += v == -1
                    unk += v == 0
        else:
            for vals in per_subject.values():
                if -1 in vals:
                    neg += 1
                elif 0 in vals:
                    unk += 1
                else:
                    pos += 1
        if head is TemporalPredicate.MUTEX:
            slot = key[1][0]
            for x in self.subjects:
                if x in per_subject:
                    continue
                if "x" in restriction and restriction["x"] not in self.cls(x):
                    continue
                objs = [o for o in self.others(x, slot) if "y" not in restriction or restriction["y"] in self.cls(o)]
                if len(objs) == 1:
                    pos += 1
        return pos, neg, unk

    def combos(self, key, head, max_vars, cap):
        shape, slots = key
        if shape == "B":
            variables = ["x", "y", "z", "w"]
        elif slots[0] == slots[1]:
            variables = ["x", "yz"]
        else:
            variables = ["x", "y", "z"]
        tally = {}

        def classes_for(v, b):
            if v == "yz":
                return sorted(self.cls(b["y"]) & self.cls(b["z"]))
            return sorted(self.cls(b[v]))

        def count(b):
            for k in range(1, min(max_vars, len(variables)) + 1):
                for vs in combinations(variables, k):
                    for cs in product(*[classes_for(v, b) for v in vs]):
                        combo = tuple(zip(vs, cs))
                        tally[combo] = tally.get(combo, 0) + 1

        for m in self.matches[key]:
            count(self.bindings(key, m))
        if head is TemporalPredicate.MUTEX:
            matched = {m[0] for m in self.matches[key]}
            for x in self.subjects:
                if x in matched:
                    continue
                objs = self.others(x, slots[0])
                if len(objs) == 1:
                    (o,) = objs
                    count({"x": x, "y": o, "z": o})
        ranked = sorted(tally.items(), key=lambda kv: (-kv[1], kv[0]))[:cap]
        out = []
        for combo, _ in ranked:
            r = {}
            for v, c in combo:
                if v == "yz":
                    r["y"] = c
                    r["z"] = c
                else:
                    r[v] = c
            out.append(r)
        return out


def _slot_text(slot):
    return ("~" if slot[1] else "") + slot[0]


def _record(key, head, level, pos, neg, restriction=None, parent=None):
    shape, slots = key
    rid = f"{head.value}|{shape}|" + ",".join(_slot_text(s) for s in slots)
    if restriction:
        rid += "|" + ",".join(f"{v}={c}" for v, c in sorted(restriction.items()))
    return {
        "id": rid,
        "head": head.value,
        "shape": shape,
        "properties": [[p, rev] for p, rev in slots],
        "distinct_objects": shape == "A" and slots[0] == slots[1],
        "class_restrictions": dict(sorted((restriction or {}).items())),
        "support": pos,
        "confidence": pos / (pos + neg),
        "confidence_level": level,
        "provenance": "base" if parent is None else f"refined-from:{parent}",
    }


def oracle_mine(g: KnowledgeGraph, cfg) -> list[dict]:
    """Exhaustive mining; returns plain records in the miner's output order.

    ``cfg`` is a MiningConfig; its pruning and worker settings are ignored.
    """
    b = _Brute(g)
    b.matches = {k: v for k, v in b.all_matches().items() if k[0] in cfg.shapes}
    out = []
    for key in b.matches:
        shape, slots = key
        heads = _SAME if shape == "A" and slots[0] == slots[1] else _ORDER
        for head in heads:
            pos, neg, _ = b.stats(key, head, cfg.level)
            if pos < cfg.freq or pos + neg == 0:
                continue
            conf = pos / (pos + neg)
            if conf > cfg.accept:
                out.append(_record(key, head, cfg.level, pos, neg))
            elif conf > cfg.refine:
                parent = _record(key, head, cfg.level, pos, neg)["id"]
                for r in b.combos(key, head, cfg.max_refine_vars, cfg.max_refinements):
                    rp, rn, _ = b.stats(key, head, cfg.level, r)
                    if rp + rn and rp >= cfg.freq and rp / (rp + rn) > cfg.accept:
                        out.append(_record(key, head, cfg.level, rp, rn, r, parent))
    out.sort(key=lambda r: (-r["confidence"], -r["support"], r["id"]))
    return out


def pairwise_values(g: KnowledgeGraph, head: TemporalPredicate) -> list[tuple[Fact, Fact, str]]:
    """Evaluate ``head`` on every unordered pair of temporal facts, by id order."""
    fs = [f for f in sorted(g.facts, key=lambda f: f.id) if isinstance(f.interval, TimeInterval)]
    return [(a, b, str(eval_predicate(head, a.interval, b.interval))) for a, b in combinations(fs, 2)]


def oracle_conflicts(g: KnowledgeGraph, records: list[dict]) -> set[tuple[str, tuple[int, ...]]]:
    """(constraint id, fact ids) of every match whose head is Negative."""
    b = _Brute(g)
    b.matches = b.all_matches()
    out = set()
    for r in records:
        key = (r["shape"], tuple((p, bool(rev)) for p, rev in r["properties"]))
        head = TemporalPredicate(r["head"])
        restr = r["class_restrictions"]
        for m in b.matches.get(key, []):
            bind = b.bindings(key, m)
            if not all(c in b.cls(bind[v]) for v, c in restr.items()):
                continue
            if _value(head, m[1], m[2]) == -1:
                ids = (m[1].id, m[2].id) + ((m[3].id,) if m[3] is not None else ())
                out.add((r["id"], ids))
    return out
