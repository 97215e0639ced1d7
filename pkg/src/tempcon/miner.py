"""Temporal constraint mining with class refinement and two-stage pruning."""
from __future__ import annotations

import json
import logging
import multiprocessing
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Iterable, Optional

from .chronal import POS, UNK, Logic3, TemporalPredicate
from .kg import KnowledgeGraph
from .metrics import ENTITY, LEVELS, ConstraintStats, classify_subgraph, entity_value
from .patterns import (
    GraphPattern,
    Match,
    MatchCounter,
    Slot,
    incident,
    is_single_object_bearer,
    matches_at,
    subject_matches,
)

log = logging.getLogger(__name__)

MUTEX = TemporalPredicate.MUTEX
Key = tuple[GraphPattern, TemporalPredicate]


@dataclass
class MiningConfig:
    freq: int = 100  # support threshold
    accept: float = 0.9  # final confidence threshold
    refine: float = 0.5  # lenient threshold; candidates above it are refined by class
    alpha: float = 0.5
    beta: float = 0.8
    gamma: float = 5.0
    level: str = ENTITY
    pruning: bool = True
    deterministic: bool = True
    workers: int = 1
    shapes: str = "AB"
    max_refine_vars: int = 2
    max_refinements: int = 256

    def validate(self) -> "MiningConfig":
        if self.level not in LEVELS:
            raise ValueError(f"confidence level must be one of {LEVELS}")
        if min(self.freq, self.accept, self.refine) < 0:
            raise ValueError("thresholds must be nonnegative")
        if self.refine > self.accept:
            raise ValueError("refine threshold must not exceed the accept threshold")
        if min(self.alpha, self.beta, self.gamma) <= 0:
            raise ValueError("alpha, beta and gamma must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not self.shapes or set(self.shapes) - {"A", "B"}:
            raise ValueError("shapes must be a combination of A and B")
        return self

    @property
    def effective_workers(self) -> int:
        return 1 if self.deterministic else self.workers


@dataclass
class TemporalConstraint:
    head: TemporalPredicate
    pattern: GraphPattern
    stats: ConstraintStats
    class_restrictions: dict[str, str] = field(default_factory=dict)
    parent: Optional[str] = None
    reported_confidence: Optional[float] = None  # set when read back from JSONL

    @property
    def id(self) -> str:
        cid = f"{self.head.value}|{self.pattern.signature()}"
        if self.class_restrictions:
            cid += "|" + ",".join(f"{v}={c}" for v, c in sorted(self.class_restrictions.items()))
        return cid

    @property
    def provenance(self) -> str:
        return "base" if self.parent is None else f"refined-from:{self.parent}"

    @property
    def support(self) -> int:
        return self.stats.support

    @property
    def confidence(self) -> Optional[float]:
        if self.reported_confidence is not None:
            return self.reported_confidence
        return self.stats.confidence

    def record(self) -> dict:
        """Plain-data view used for field-by-field comparisons."""
        return {
            "id": self.id,
            "head": self.head.value,
            "shape": self.pattern.shape,
            "properties": [[p, rev] for p, rev in self.pattern.slots],
            "distinct_objects": self.pattern.distinct_objects,
            "class_restrictions": dict(sorted(self.class_restrictions.items())),
            "support": self.support,
            "confidence": self.confidence,
            "confidence_level": self.stats.level,
            "provenance": self.provenance,
        }

    def sort_key(self):
        return (-(self.confidence or 0.0), -self.support, self.id)

    def to_json(self) -> str:
        # fixed field order; confidence printed with 6 decimals
        slots = [{"property": p, "reversed": rev} for p, rev in self.pattern.slots]
        parts = [
            ("id", json.dumps(self.id, ensure_ascii=False)),
            ("head", json.dumps(self.head.value)),
            ("shape", json.dumps(self.pattern.shape)),
            ("properties", json.dumps(slots, ensure_ascii=False)),
            ("distinct_objects", json.dumps(self.pattern.distinct_objects)),
            ("class_restrictions", json.dumps(dict(sorted(self.class_restrictions.items())), ensure_ascii=False)),
            ("support", str(self.support)),
            ("confidence", f"{self.confidence:.6f}"),
            ("confidence_level", json.dumps(self.stats.level)),
            ("provenance", json.dumps(self.provenance, ensure_ascii=False)),
        ]
        return "{" + ", ".join(f'"{k}": {v}' for k, v in parts) + "}"

    @classmethod
    def from_json(cls, line: str | dict) -> "TemporalConstraint":
        d = json.loads(line) if isinstance(line, str) else line
        slots = tuple((s["property"], bool(s["reversed"])) for s in d["properties"])
        gp = GraphPattern(d["shape"], slots)
        st = ConstraintStats(d.get("confidence_level", ENTITY))
        st.positives = st.instantiations = int(d.get("support", 0))
        conf = d.get("confidence")
        prov = d.get("provenance", "base")
        parent = prov.split(":", 1)[1] if prov.startswith("refined-from:") else None
        tc = cls(
            TemporalPredicate(d["head"]),
            gp,
            st,
            dict(d.get("class_restrictions") or {}),
            parent,
            None if conf is None else float(conf),
        )
        if d.get("id") and d["id"] != tc.id:
            raise ValueError(f"constraint id {d['id']!r} does not match its body ({tc.id!r})")
        return tc


def write_constraints(constraints: Iterable[TemporalConstraint], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for tc in constraints:
            fh.write(tc.to_json() + "\n")


def read_constraints(path) -> list[TemporalConstraint]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if line.strip():
                try:
                    out.append(TemporalConstraint.from_json(line))
                except (KeyError, ValueError, TypeError) as e:
                    raise ValueError(f"{path}:{n}: bad constraint: {e}") from None
    return out


class PruneState:
    """Running per-candidate and per-property counters for the two pruning stages."""

    def __init__(self, cfg: MiningConfig):
        self.cfg = cfg
        self.n: Counter = Counter()  # decided observations per key
        self.mu: Counter = Counter()  # positive observations per key
        self.bad: set[Key] = set()
        self.appearances: Counter = Counter()  # property -> matched subgraphs containing it
        self.alive: Counter = Counter()  # property -> keys involving it not yet bad
        self.dropped: set[str] = set()
        self._registered: set[GraphPattern] = set()

    def register(self, gp: GraphPattern) -> None:
        if gp in self._registered:
            return
        self._registered.add(gp)
        for p in gp.properties:
            self.alive[p] += len(gp.heads())

    def observe(self, key: Key, value: Logic3) -> bool:
        """Record one classification; returns True when the key is (now) bad."""
        if value is not UNK:
            self.n[key] += 1
            if value is POS:
                self.mu[key] += 1
        return stage1_prune(self, key, self.cfg) == "bad"

    def mark_bad(self, key: Key) -> None:
        if key in self.bad:
            return
        self.bad.add(key)
        for p in key[0].properties:
            self.alive[p] -= 1


def stage1_prune(prune: PruneState, key: Key, cfg: MiningConfig) -> str:
    """``bad`` once enough decided observations put the running confidence
    below ``beta * refine``; bad is permanent."""
    if key in prune.bad:
        return "bad"
    n = prune.n[key]
    if n >= cfg.alpha * cfg.freq and prune.mu[key] / n < cfg.beta * cfg.refine:
        prune.mark_bad(key)
        return "bad"
    return "keep"


def stage2_prune(prune: PruneState, prop: str, cfg: MiningConfig) -> str:
    """``drop-edges`` when the property appeared in at least ``gamma * freq``
    matched subgraphs and every candidate involving it is bad."""
    if prop in prune.dropped:
        return "drop-edges"
    if prune.appearances[prop] >= cfg.gamma * cfg.freq and prune.alive[prop] <= 0:
        prune.dropped.add(prop)
        log.debug("pruned property %s", prop)
        return "drop-edges"
    return "keep"


@dataclass
class PassResult:
    stats: dict[Key, ConstraintStats]
    matched: set[GraphPattern]
    bad: set[Key] = field(default_factory=set)
    dropped: set[str] = field(default_factory=set)
    work: int = 0  # predicate classifications performed
    pairs: int = 0  # candidate fact pairings examined while matching

    def merge(self, other: "PassResult") -> "PassResult":
        for k, st in other.stats.items():
            self.stats[k] = self.stats[k] + st if k in self.stats else st
        self.matched |= other.matched
        self.bad |= other.bad
        self.dropped |= other.dropped
        self.work += other.work
        self.pairs += other.pairs
        return self

    def candidates(self, cfg: MiningConfig) -> list[tuple[Key, ConstraintStats]]:
        return [
            (k, st)
            for k, st in self.stats.items()
            if k not in self.bad and k[0] in self.matched and st.support >= cfg.freq
        ]


def _bearer_slots(g: KnowledgeGraph, x: str, dropped) -> list[Slot]:
    seen: dict[Slot, None] = {}
    for slot, _, _ in incident(g, x, dropped, temporal=None):
        seen.setdefault(slot, None)
    return [s for s in seen if g.property_catalog[s[0]][0] and is_single_object_bearer(g, x, s)]


def candidate_pass(
    g: KnowledgeGraph,
    cfg: MiningConfig,
    prune: Optional[PruneState] = None,
    subjects: Optional[Iterable[str]] = None,
) -> PassResult:
    """One subject-major sweep accumulating stats for every (pattern, head).

    With ``prune`` given, bad keys are skipped before classification and
    dropped properties are skipped while matching.
    """
    level = cfg.level
    stats: dict[Key, ConstraintStats] = {}
    matched: set[GraphPattern] = set()
    counter = MatchCounter()
    work = [0]
    no_drop: frozenset = frozenset()

    def bump(key):
        st = stats.get(key)
        if st is None:
            st = stats[key] = ConstraintStats(level)
        return st

    for x in g.subjects if subjects is None else subjects:
        dropped = prune.dropped if prune is not None else no_drop
        groups = subject_matches(g, x, dropped, cfg.shapes, counter)
        touched: set[str] = set()
        for gp, ms in groups.items():
            matched.add(gp)
            if prune is not None:
                prune.register(gp)
                for p in gp.properties:
                    prune.appearances[p] += len(ms)
                touched |= gp.properties
            for head in gp.heads():
                key = (gp, head)
                if prune is not None and key in prune.bad:
                    continue
                st = bump(key)
                if level == ENTITY:
                    v = entity_value(head, ms, work)
                    st.add(v)
                    if prune is not None:
                        prune.observe(key, v)
                    continue
                for m in ms:
                    work[0] += 1
                    v = classify_subgraph(head, m)
                    st.add(v)
                    if prune is not None and prune.observe(key, v):
                        break
        if "A" in cfg.shapes:
            for slot in _bearer_slots(g, x, dropped):
                gp = GraphPattern("A", (slot, slot))
                key = (gp, MUTEX)
                if prune is not None:
                    prune.register(gp)
                    if key in prune.bad:
                        continue
                work[0] += 1
                bump(key).add(POS)
                if prune is not None:
                    prune.observe(key, POS)
        if prune is not None:
            for p in sorted(touched):
                stage2_prune(prune, p, cfg)

    return PassResult(
        stats,
        matched,
        set(prune.bad) if prune else set(),
        set(prune.dropped) if prune else set(),
        work[0],
        counter.pairs,
    )


# -- parallel sweep ---------------------------------------------------------

_WORKER_GRAPH: Optional[KnowledgeGraph] = None


def _init_worker(g):
    global _WORKER_GRAPH
    _WORKER_GRAPH = g


def _run_partition(args):
    cfg, subjects = args
    prune = PruneState(cfg) if cfg.pruning else None
    return candidate_pass(_WORKER_GRAPH, cfg, prune, subjects)


def parallel_pass(g: KnowledgeGraph, cfg: MiningConfig) -> PassResult:
    """Subject-partitioned sweep; each worker prunes on its own counters and
    a key judged bad anywhere is bad overall."""
    n = cfg.effective_workers
    parts = [g.subjects[i::n] for i in range(n)]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(n, mp_context=ctx, initializer=_init_worker, initargs=(g,)) as ex:
        results = list(ex.map(_run_partition, [(cfg, p) for p in parts]))
    total = results[0]
    for r in results[1:]:
        total.merge(r)
    return total


# -- refinement -------------------------------------------------------------


def _admissible(g: KnowledgeGraph, restriction: dict[str, str], bindings: dict[str, str]) -> bool:
    for var, cls in restriction.items():
        if cls not in g.classes_of(bindings[var]):
            return False
    return True


def _expand(var: str, cls: str) -> list[tuple[str, str]]:
    return [("y", cls), ("z", cls)] if var == "yz" else [(var, cls)]


def _var_classes(g: KnowledgeGraph, var: str, b: dict[str, str]) -> set[str]:
    if var == "yz":
        return set(g.classes_of(b["y"])) & set(g.classes_of(b["z"]))
    return set(g.classes_of(b[var]))


@dataclass
class _EntityGroup:
    x: str
    matches: list[Match]
    others: Optional[list[str]] = None  # mutex: distinct other ends on the slot


def _collect_groups(g: KnowledgeGraph, gp: GraphPattern, head: TemporalPredicate) -> list[_EntityGroup]:
    groups = []
    slot = gp.slots[0]
    for x in g.subjects:
        ms = matches_at(g, gp, x)
        others = None
        if head is MUTEX:
            p, rev = slot
            facts = g.in_facts(x) if rev else g.out_facts(x)
            seen: dict[str, None] = {}
            for f in facts:
                if f.property == p:
                    seen.setdefault(f.subject if rev else f.object, None)
            others = list(seen)
            if not others:
                continue
        elif not ms:
            continue
        groups.append(_EntityGroup(x, ms, others))
    return groups


def refinement_combos(g: KnowledgeGraph, gp: GraphPattern, head: TemporalPredicate, groups, cfg: MiningConfig):
    """Class restrictions observed in the matches, most frequent first."""
    seen: Counter = Counter()
    variables = gp.variables
    sizes = range(1, min(cfg.max_refine_vars, len(variables)) + 1)

    def observe(b):
        per_var = {v: sorted(_var_classes(g, v, b)) for v in variables}
        for k in sizes:
            for vs in combinations(variables, k):
                for classes in product(*(per_var[v] for v in vs)):
                    seen[tuple(zip(vs, classes))] += 1

    for grp in groups:
        for m in grp.matches:
            observe(m.bindings())
        if head is MUTEX and not grp.matches and len(grp.others) == 1:
            o = grp.others[0]
            observe({"x": grp.x, "y": o, "z": o})
    ranked = sorted(seen.items(), key=lambda kv: (-kv[1], kv[0]))
    out = []
    for combo, _ in ranked[: cfg.max_refinements]:
        restriction: dict[str, str] = {}
        for var, cls in combo:
            restriction.update(_expand(var, cls))
        out.append(restriction)
    return out


def restricted_stats(
    g: KnowledgeGraph,
    head: TemporalPredicate,
    groups: list[_EntityGroup],
    restriction: dict[str, str],
    level: str,
) -> ConstraintStats:
    st = ConstraintStats(level)
    xcls = restriction.get("x")
    obj_restr = {v: c for v, c in restriction.items() if v != "x"}
    for grp in groups:
        if xcls is not None and xcls not in g.classes_of(grp.x):
            continue
        ms = [m for m in grp.matches if _admissible(g, obj_restr, m.bindings())]
        if ms:
            if level == ENTITY:
                st.add(entity_value(head, ms))
            else:
                for m in ms:
                    st.add(classify_subgraph(head, m))
        elif head is MUTEX:
            ycls = obj_restr.get("y")
            ok = [o for o in grp.others if ycls is None or ycls in g.classes_of(o)]
            if len(ok) == 1:
                st.add(POS)
    return st


def refine_constraint(tc: TemporalConstraint, g: KnowledgeGraph, cfg: MiningConfig) -> list[TemporalConstraint]:
    """Class-restricted versions of ``tc`` that reach the support and accept thresholds."""
    groups = _collect_groups(g, tc.pattern, tc.head)
    out = []
    for restriction in refinement_combos(g, tc.pattern, tc.head, groups, cfg):
        st = restricted_stats(g, tc.head, groups, restriction, cfg.level)
        conf = st.confidence
        if conf is not None and st.support >= cfg.freq and conf > cfg.accept:
            out.append(TemporalConstraint(tc.head, tc.pattern, st, restriction, tc.id))
    return out


@dataclass
class MiningResult:
    constraints: list[TemporalConstraint]
    candidates: int = 0
    work: int = 0
    pairs: int = 0
    bad_candidates: int = 0
    pruned_properties: list[str] = field(default_factory=list)
    refined_parents: int = 0

    def summary(self) -> dict:
        return {
            "constraints": len(self.constraints),
            "candidates": self.candidates,
            "classification_work": self.work,
            "match_pairs": self.pairs,
            "bad_candidates": self.bad_candidates,
            "pruned_properties": self.pruned_properties,
            "refined_parents": self.refined_parents,
        }


def mine_full(g: KnowledgeGraph, cfg: MiningConfig) -> MiningResult:
    cfg.validate()
    if cfg.effective_workers > 1:
        res = parallel_pass(g, cfg)
    else:
        res = candidate_pass(g, cfg, PruneState(cfg) if cfg.pruning else None)
    cands = res.candidates(cfg)
    out: list[TemporalConstraint] = []
    refined = 0
    for (gp, head), st in cands:
        conf = st.confidence
        if conf is None:
            continue
        tc = TemporalConstraint(head, gp, st)
        if conf > cfg.accept:
            out.append(tc)
        elif conf > cfg.refine:
            refined += 1
            out.extend(refine_constraint(tc, g, cfg))
    out.sort(key=TemporalConstraint.sort_key)
    return MiningResult(
        out,
        candidates=len(cands),
        work=res.work,
        pairs=res.pairs,
        bad_candidates=len(res.bad),
        pruned_properties=sorted(res.dropped),
        refined_parents=refined,
    )


def mine(g: KnowledgeGraph, cfg: Optional[MiningConfig] = None) -> list[TemporalConstraint]:
    return mine_full(g, cfg or MiningConfig()).constraints


def describe(tc: TemporalConstraint) -> str:
    """Human-readable rule text, e.g. ``disjoint(t1,t2) :- (x,p,y,t1), (x,p,z,t2), y!=z``."""

    def atom(slot, a, b, t=None):
        p, rev = slot
        s, o = (b, a) if rev else (a, b)
        return f"({s},{p},{o}" + (f",{t})" if t else ")")

    gp = tc.pattern
    if gp.shape == "A":
        body = [atom(gp.slots[0], "x", "y", "t1"), atom(gp.slots[1], "x", "z", "t2")]
        if gp.distinct_objects:
            body.append("y!=z")
    else:
        body = [atom(gp.slots[1], "x", "z", "t1"), atom(gp.slots[0], "x", "y"), atom(gp.slots[2], "y", "w", "t2")]
    body += [f"{c}({v})" for v, c in sorted(tc.class_restrictions.items())]
    head = "false" if tc.head is MUTEX else f"{tc.head.value}(t1,t2)"
    return f"{head} :- " + ", ".join(body)
