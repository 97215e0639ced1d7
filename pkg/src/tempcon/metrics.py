"""Support and confidence of a candidate constraint at fact and entity level."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import groupby
from typing import Iterable, Optional

from .chronal import NEG, POS, UNK, Logic3, TemporalPredicate, eval_predicate
from .patterns import Match

FACT = "fact"
ENTITY = "entity"
LEVELS = (FACT, ENTITY)


@dataclass
class ConstraintStats:
    level: str = ENTITY
    instantiations: int = 0
    positives: int = 0
    negatives: int = 0
    unknowns: int = 0

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ValueError(f"unknown confidence level {self.level!r}")

    @property
    def support(self) -> int:
        return self.positives

    @property
    def decided(self) -> int:
        return self.positives + self.negatives

    @property
    def confidence(self) -> Optional[float]:
        """positives / (positives + negatives); None when nothing was decided."""
        if not self.decided:
            return None
        return self.positives / self.decided

    def exact_confidence(self) -> Optional[Fraction]:
        if not self.decided:
            return None
        return Fraction(self.positives, self.decided)

    def add(self, value: Logic3) -> None:
        self.instantiations += 1
        if value is POS:
            self.positives += 1
        elif value is NEG:
            self.negatives += 1
        else:
            self.unknowns += 1

    def __add__(self, other: "ConstraintStats") -> "ConstraintStats":
        if self.level != other.level:
            raise ValueError("cannot merge stats of different levels")
        return ConstraintStats(
            self.level,
            self.instantiations + other.instantiations,
            self.positives + other.positives,
            self.negatives + other.negatives,
            self.unknowns + other.unknowns,
        )


def classify_subgraph(head: TemporalPredicate, m: Match) -> Logic3:
    if head is TemporalPredicate.MUTEX:
        # any two distinct objects on the property already violate "only one"
        return NEG
    return eval_predicate(head, m.f1.interval, m.f2.interval)


def entity_value(head: TemporalPredicate, matches: Iterable[Match], counter: Optional[list] = None) -> Logic3:
    """Negative if any match is Negative, Positive if all are, else Unknown.

    Stops at the first Negative. ``counter[0]`` is bumped per classification.
    """
    out = POS
    for m in matches:
        if counter is not None:
            counter[0] += 1
        v = classify_subgraph(head, m)
        if v is NEG:
            return NEG
        if v is UNK:
            out = UNK
    return out


def fact_level_stats(head: TemporalPredicate, matches: Iterable[Match], single_bearers: int = 0) -> ConstraintStats:
    """``single_bearers`` adds one Positive per single-object entity (mutex only)."""
    st = ConstraintStats(FACT)
    for m in matches:
        st.add(classify_subgraph(head, m))
    for _ in range(single_bearers):
        st.add(POS)
    return st


def entity_level_stats(
    head: TemporalPredicate,
    matches: Iterable[Match],
    single_bearers: Iterable[str] = (),
) -> ConstraintStats:
    """Entity-level stats over a subject-grouped match stream.

    ``single_bearers`` lists subjects with exactly one distinct object on the
    property; they count Positive for mutex when they have no matched pair.
    """
    st = ConstraintStats(ENTITY)
    seen = set()
    for x, group in groupby(matches, key=lambda m: m.x):
        if x in seen:
            raise ValueError(f"match stream not grouped by subject: {x!r} repeats")
        seen.add(x)
        st.add(entity_value(head, group))
    for x in single_bearers:
        if x not in seen:
            seen.add(x)
            st.add(POS)
    return st
