"""Synthetic temporal graphs with planted regularities and known violations."""
from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from typing import Optional

from .kg import DEFAULT_TYPE_PROPERTY, KnowledgeGraph, parse_quads

KINDS = ("disjoint", "mutex", "before", "linked_before")


@dataclass
class Planted:
    """One planted regularity.

    ``disjoint``: ``properties=(p,)``; each bearer gets a career of
    non-overlapping facts with distinct objects.
    ``mutex``: ``(p,)``; one object per bearer.
    ``before``: ``(p1, p2)``; a p1 point strictly earlier than a p2 point.
    ``linked_before``: ``(p1, p0)``; pairs x -p0-> y where x's p1 point
    precedes y's p1 point.
    """

    kind: str
    properties: tuple[str, ...]
    coverage: float = 1.0
    facts: tuple[int, int] = (2, 5)  # disjoint career length range
    objects: int = 200  # object pool size
    object_class: Optional[str] = None  # type given to pool objects (makes them entities)
    exception_class: Optional[str] = None  # disjoint only: legit overlapping objects
    exception_rate: float = 0.0
    exception_objects: int = 20

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown planted kind {self.kind!r}")
        want = 1 if self.kind in ("disjoint", "mutex") else 2
        if len(self.properties) != want:
            raise ValueError(f"{self.kind} takes {want} properties")
        if not 0 <= self.coverage <= 1 or not 0 <= self.exception_rate <= 1:
            raise ValueError("rates must lie in [0, 1]")
        if self.facts[0] < 1 or self.facts[0] > self.facts[1]:
            raise ValueError("bad career length range")


@dataclass
class SynthSpec:
    entities: int = 500
    planted: list[Planted] = field(default_factory=lambda: [Planted("disjoint", ("p",))])
    noise: float = 0.0  # probability a bearer violates each planted regularity
    seed: int = 0
    noise_properties: int = 0
    noise_facts: float = 0.0  # mean random facts per entity on noise properties
    noise_objects: int = 50
    entity_class: str = "Person"
    granularity: tuple[float, float, float] = (0.2, 0.3, 0.5)  # day, month, year
    absent_rate: float = 0.0  # chance a generated endpoint is absent
    type_property: str = DEFAULT_TYPE_PROPERTY

    def validate(self) -> "SynthSpec":
        if self.entities < 1:
            raise ValueError("need at least one entity")
        if not 0 <= self.noise <= 1 or not 0 <= self.absent_rate <= 1:
            raise ValueError("noise and absent_rate must lie in [0, 1]")
        if self.noise_facts < 0 or self.noise_properties < 0:
            raise ValueError("noise sizes must be nonnegative")
        if self.noise_facts > 0 and self.noise_properties == 0:
            raise ValueError("noise_facts needs noise_properties")
        if any(w < 0 for w in self.granularity) or sum(self.granularity) <= 0:
            raise ValueError("bad granularity weights")
        return self


@dataclass
class SyntheticGraph:
    lines: list[str]
    wrong_lines: set[int]  # line indices (= fact ids) of planted wrong facts
    violators: dict[str, set[str]]  # planted label -> violating entities
    bearers: dict[str, set[str]]  # planted label -> entities carrying the regularity
    type_property: str = DEFAULT_TYPE_PROPERTY
    _graph: Optional[KnowledgeGraph] = None

    @property
    def graph(self) -> KnowledgeGraph:
        if self._graph is None:
            self._graph = parse_quads(self.lines, self.type_property, strict=True)
        return self._graph

    def text(self) -> str:
        return "".join(line + "\n" for line in self.lines)

    def digest(self) -> str:
        return hashlib.sha256(self.text().encode()).hexdigest()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.text())

    def write_annotations(self, path, correct_ratio: float = 1.0, seed: int = 0) -> None:
        """Annotation TSV: every wrong fact plus a sample of correct ones."""
        g = self.graph
        rng = random.Random(seed)
        correct = [f.id for f in g.facts if f.id not in self.wrong_lines and f.property != self.type_property]
        k = min(len(correct), round(len(self.wrong_lines) * correct_ratio))
        rows = [(i, "wrong") for i in self.wrong_lines] + [(i, "correct") for i in rng.sample(correct, k)]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for i, label in sorted(rows):
                fh.write(f"{i}\t{label}\n")


def label(p: Planted) -> str:
    return p.kind + ":" + ",".join(p.properties)


class _Gen:
    def __init__(self, spec: SynthSpec):
        self.spec = spec
        self.rng = random.Random(spec.seed)
        self.lines: list[str] = []
        self.wrong: set[int] = set()

    def emit(self, s, p, o, start="-", end="-", wrong=False) -> int:
        self.lines.append(f"{s}\t{p}\t{o}\t{start}\t{end}")
        idx = len(self.lines) - 1
        if wrong:
            self.wrong.add(idx)
        return idx

    def point(self, s, p, o, year: int, wrong=False) -> int:
        t = self.stamp(year, True, absent_ok=False)
        return self.emit(s, p, o, t, t, wrong)

    def span(self, s, p, o, a: int, b: int, wrong=False, complete=False) -> tuple[str, str]:
        start, end = self.stamp(a, True, not complete), self.stamp(b, a != b, not complete)
        if start == end == "-":
            end = self.stamp(b, a != b, absent_ok=False)
        self.emit(s, p, o, start, end, wrong)
        return start, end

    def stamp(self, year: int, first: bool, absent_ok: bool = True) -> str:
        """A time token inside ``year`` at a random granularity; ``first`` picks
        the early or late half so start and end inside one year stay ordered."""
        rng, spec = self.rng, self.spec
        if absent_ok and spec.absent_rate and rng.random() < spec.absent_rate:
            return "-"
        day, month, _ = spec.granularity
        r = rng.random() * sum(spec.granularity)
        months = range(1, 7) if first else range(7, 13)
        if r < day:
            return f"{year:04d}-{rng.choice(months):02d}-{rng.randint(1, 28):02d}"
        if r < day + month:
            return f"{year:04d}-{rng.choice(months):02d}"
        return f"{year:04d}"


def generate_synthetic(spec: SynthSpec) -> SyntheticGraph:
    """Build a graph where each planted regularity is violated by roughly a
    ``spec.noise`` fraction of its bearers. Same spec and seed give the same
    lines."""
    spec.validate()
    gen = _Gen(spec)
    rng = gen.rng
    tp = spec.type_property
    people = [f"e{i}" for i in range(spec.entities)]
    violators: dict[str, set[str]] = {}
    bearers: dict[str, set[str]] = {}

    for e in people:
        gen.emit(e, tp, spec.entity_class)
    for k, pl in enumerate(spec.planted):
        if pl.object_class:
            for j in range(pl.objects):
                gen.emit(f"o{k}_{j}", tp, pl.object_class)
        if pl.exception_class:
            for j in range(pl.exception_objects):
                gen.emit(f"x{k}_{j}", tp, pl.exception_class)

    for k, pl in enumerate(spec.planted):
        lab = label(pl)
        bad = violators[lab] = set()
        bear = bearers[lab] = set()
        pool = [f"o{k}_{j}" for j in range(pl.objects)]
        if pl.kind == "linked_before":
            p1, p0 = pl.properties
            order = [e for e in people if rng.random() < pl.coverage]
            for a, b in zip(order[0::2], order[1::2]):
                bear.add(a)
                y1 = rng.randint(1900, 2000)
                y2 = y1 + rng.randint(1, 20)
                violate = rng.random() < spec.noise
                if violate:
                    y2 = y1 - rng.randint(1, 20)
                    bad.add(a)
                gen.point(a, p1, rng.choice(pool), y1)
                gen.emit(a, p0, b, wrong=violate)
                gen.point(b, p1, rng.choice(pool), y2)
            continue
        for e in people:
            if rng.random() >= pl.coverage:
                continue
            bear.add(e)
            violate = rng.random() < spec.noise
            if violate:
                bad.add(e)
            if pl.kind == "mutex":
                (p,) = pl.properties
                first, second = rng.sample(pool, 2)
                gen.point(e, p, first, rng.randint(1900, 2020))
                if violate:
                    gen.point(e, p, second, rng.randint(1900, 2020), wrong=True)
            elif pl.kind == "before":
                p1, p2 = pl.properties
                y1 = rng.randint(1900, 1990)
                y2 = y1 + rng.randint(1, 30)
                if violate:
                    y2 = y1 - rng.randint(1, 30)
                gen.point(e, p1, rng.choice(pool), y1)
                gen.point(e, p2, rng.choice(pool), y2, wrong=violate)
            else:
                _career(gen, pl, k, e, pool, violate)

    if spec.noise_properties:
        noise_props = [f"n{j}" for j in range(spec.noise_properties)]
        for e in people:
            for _ in range(_poisson(rng, spec.noise_facts)):
                a = rng.randint(1950, 2015)
                b = a + rng.randint(0, 8)
                gen.span(e, rng.choice(noise_props), f"v{rng.randrange(spec.noise_objects)}", a, b)
    return SyntheticGraph(gen.lines, gen.wrong, violators, bearers, tp)


def _career(gen: _Gen, pl: Planted, k: int, e: str, pool: list[str], violate: bool) -> None:
    rng = gen.rng
    (p,) = pl.properties
    n = rng.randint(*pl.facts)
    objs = rng.sample(pool, min(n, len(pool)))
    year = rng.randint(1950, 1990)
    victim = rng.randrange(len(objs)) if violate else -1
    spans = []
    for i, o in enumerate(objs):
        a = year
        b = a + rng.randint(1, 4)  # at least two calendar years
        # the spell a violation will copy needs both endpoints, else the copy is undecidable
        start, end = gen.span(e, p, o, a, b, complete=i == victim)
        spans.append((o, start, end))
        year = b + rng.randint(1, 3)
    if violate:
        # a second object over exactly the same (literal) interval as an existing spell
        _, start, end = spans[victim]
        other = rng.choice([o for o in pool if o not in objs] or pool)
        gen.emit(e, p, other, start, end, wrong=True)
    if pl.exception_class and rng.random() < pl.exception_rate:
        _, start, end = rng.choice(spans)
        gen.emit(e, p, f"x{k}_{rng.randrange(pl.exception_objects)}", start, end)


def _poisson(rng: random.Random, lam: float) -> int:
    if lam <= 0:
        return 0
    # Knuth's method; lam stays small here
    limit, k, prod = math.exp(-lam), 0, rng.random()
    while prod > limit:
        k += 1
        prod *= rng.random()
    return k


@dataclass
class SyntheticCase:
    subject: str
    object: str
    start: str
    end: str
    candidates: list[str]
    gold: str
    decoy_first: bool  # rank-1 candidate is the conflicting property

    def to_json(self) -> str:
        return json.dumps(
            {
                "subject": self.subject,
                "object": self.object,
                "t_start": self.start,
                "t_end": self.end,
                "candidates": self.candidates,
                "gold": self.gold,
            }
        )


def synthetic_predictions(
    g: KnowledgeGraph,
    prop: str,
    n: int = 1000,
    conflict_rate: float = 0.2,
    seed: int = 0,
    clean_properties: tuple[str, ...] = ("award_received", "visited", "nominated_for", "studied_at", "lived_in"),
) -> list[SyntheticCase]:
    """Link-prediction style cases built on the temporal ``prop`` facts of ``g``.

    Each query reuses the subject and interval of an existing ``prop`` fact with
    a fresh object, so filling the slot with ``prop`` duplicates the subject's
    spell with a different object. The other candidates are properties absent
    from ``g``. In a ``conflict_rate`` share of cases ``prop`` is ranked first;
    the gold is always one of the clean properties.
    """
    rng = random.Random(seed)
    # only spells with both endpoints: a copy of an open-ended spell may be undecidable
    spells = [
        f
        for f in g.facts
        if f.property == prop and f.interval is not None and not (f.interval.start.absent or f.interval.end.absent)
    ]
    if not spells:
        raise ValueError(f"no temporal {prop!r} facts to build queries from")
    if prop in clean_properties or len(clean_properties) < 2:
        raise ValueError("need at least two clean properties distinct from prop")
    out = []
    n_first = round(n * conflict_rate)
    for i in range(n):
        f = rng.choice(spells)
        clean = list(clean_properties)
        rng.shuffle(clean)
        gold = clean[0]
        if i < n_first:
            cands = [prop] + clean
        else:
            # conflicting property somewhere below rank 1 (or absent)
            cands = clean[:]
            rng.shuffle(cands)
            if rng.random() < 0.5:
                cands.insert(rng.randint(1, len(cands)), prop)
        out.append(
            SyntheticCase(f.subject, f"q{i}", str(f.interval.start), str(f.interval.end), cands, gold, i < n_first)
        )
    rng.shuffle(out)
    return out
