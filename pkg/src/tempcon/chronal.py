"""Three-valued comparisons over partial time values and uncertain intervals.

A time value may be a year, a year-month, a full date, or absent. Each
present value stands for a closed range of days; comparisons are decided
only when the ranges settle the question, otherwise they are UNKNOWN.
"""
from __future__ import annotations

import calendar
import datetime as _dt
import re
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Callable, Optional


class Logic3(IntEnum):
    # Ordered so that Kleene conjunction is min() and disjunction is max().
    NEGATIVE = 0
    UNKNOWN = 1
    POSITIVE = 2

    def __invert__(self) -> "Logic3":
        return _NOT[self]

    def __and__(self, other):  # type: ignore[override]
        return self if self <= other else other

    def __or__(self, other):  # type: ignore[override]
        return self if self >= other else other

    def __str__(self) -> str:
        return self.name.lower()


POS = Logic3.POSITIVE
NEG = Logic3.NEGATIVE
UNK = Logic3.UNKNOWN
_NOT = {POS: NEG, NEG: POS, UNK: UNK}


class TemporalPredicate(str, Enum):
    START = "start"
    FINISH = "finish"
    BEFORE = "before"
    DISJOINT = "disjoint"
    INCLUDE = "include"
    MUTEX = "mutex"

    def __str__(self) -> str:
        return self.value


_TOKEN = re.compile(r"^(-?\d{1,4})(?:-(\d{2})(?:-(\d{2}))?)?$")


@dataclass(frozen=True)
class TimeValue:
    year: int = 0
    month: Optional[int] = None
    day: Optional[int] = None
    absent: bool = False
    lo: Optional[int] = field(default=None, compare=False, repr=False)
    hi: Optional[int] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.absent:
            return
        if self.day is not None and self.month is None:
            raise ValueError("day given without month")
        if self.month is not None and not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")
        if not 1 <= self.year <= 9999:
            raise ValueError(f"year out of range: {self.year}")
        if self.month is None:
            lo = _dt.date(self.year, 1, 1)
            hi = _dt.date(self.year, 12, 31)
        elif self.day is None:
            lo = _dt.date(self.year, self.month, 1)
            hi = _dt.date(self.year, self.month, calendar.monthrange(self.year, self.month)[1])
        else:
            lo = hi = _dt.date(self.year, self.month, self.day)  # raises on a bad day
        object.__setattr__(self, "lo", lo.toordinal())
        object.__setattr__(self, "hi", hi.toordinal())

    @classmethod
    def parse(cls, token: str) -> "TimeValue":
        token = token.strip()
        if token in ("-", ""):
            return ABSENT
        m = _TOKEN.match(token)
        if not m:
            raise ValueError(f"unparsable time token: {token!r}")
        year, month, day = m.groups()
        return cls(int(year), int(month) if month else None, int(day) if day else None)

    @property
    def granularity(self) -> str:
        if self.absent:
            return "absent"
        if self.month is None:
            return "year"
        return "month" if self.day is None else "day"

    def coarsen(self) -> "TimeValue":
        """One step coarser: day -> month -> year -> absent."""
        if self.absent:
            return self
        if self.day is not None:
            return TimeValue(self.year, self.month)
        if self.month is not None:
            return TimeValue(self.year)
        return ABSENT

    def __str__(self) -> str:
        if self.absent:
            return "-"
        if self.month is None:
            return f"{self.year:04d}"
        if self.day is None:
            return f"{self.year:04d}-{self.month:02d}"
        return f"{self.year:04d}-{self.month:02d}-{self.day:02d}"


ABSENT = TimeValue(absent=True)


@dataclass(frozen=True)
class TimeInterval:
    start: TimeValue
    end: TimeValue

    def __post_init__(self):
        s, e = self.start, self.end
        if not s.absent and not e.absent and s.lo > e.hi:
            raise ValueError(f"interval start {s} provably after end {e}")

    @classmethod
    def parse(cls, start: str, end: str) -> "TimeInterval":
        return cls(TimeValue.parse(start), TimeValue.parse(end))

    @classmethod
    def point(cls, t: TimeValue) -> "TimeInterval":
        return cls(t, t)

    def __str__(self) -> str:
        return f"[{self.start}, {self.end}]"


def cmp_less(t1: TimeValue, t2: TimeValue) -> Logic3:
    if t1.absent or t2.absent:
        return UNK
    if t1.hi < t2.lo:
        return POS
    if t1.lo > t2.hi or t1 == t2:
        return NEG
    return UNK


def cmp_eq(t1: TimeValue, t2: TimeValue) -> Logic3:
    if t1.absent or t2.absent:
        return UNK
    if t1 == t2:
        return POS
    if t1.hi < t2.lo or t2.hi < t1.lo:
        return NEG
    return UNK


def cmp_leq(t1: TimeValue, t2: TimeValue) -> Logic3:
    return cmp_less(t1, t2) | cmp_eq(t1, t2)


def _gt(a, b):
    return cmp_less(b, a)


def _geq(a, b):
    return cmp_leq(b, a)


def _neq(a, b):
    return ~cmp_eq(a, b)


def _differ(i1: TimeInterval, i2: TimeInterval) -> Logic3:
    # literal (syntactic) difference of endpoint pairs; never unknown
    return NEG if i1 == i2 else POS


def _before_pos(a: TimeInterval, b: TimeInterval) -> Logic3:
    return cmp_less(a.end, b.start) | (cmp_eq(a.end, b.start) & _differ(a, b))


def _start_pos(a, b):
    return cmp_eq(a.start, b.start)


def _start_neg(a, b):
    return _neq(a.start, b.start) | _gt(a.start, b.end) | cmp_less(a.end, b.start)


def _finish_pos(a, b):
    return cmp_eq(a.end, b.end)


def _finish_neg(a, b):
    return _neq(a.end, b.end) | cmp_less(a.end, b.start) | _gt(a.start, b.end)


def _before_neg(a, b):
    return _gt(a.end, b.start) | _gt(a.end, b.end) | _gt(a.start, b.start) | _gt(a.start, b.end)


def _disjoint_pos(a, b):
    return _before_pos(a, b) | _before_pos(b, a)


def _disjoint_neg(a, b):
    left = _gt(a.end, b.start) & (cmp_leq(a.end, b.end) | cmp_leq(a.start, b.start))
    right = cmp_less(a.start, b.end) & (_geq(a.end, b.end) | _geq(a.start, b.start))
    return left | right


def _include_pos(a, b):
    return cmp_leq(a.start, b.start) & cmp_leq(b.end, a.end)


def _include_neg(a, b):
    return _gt(a.start, b.start) | _gt(a.start, b.end) | cmp_less(a.end, b.end) | cmp_less(a.end, b.start)


CONDITIONS: dict[TemporalPredicate, tuple[Callable, Callable]] = {
    TemporalPredicate.START: (_start_pos, _start_neg),
    TemporalPredicate.FINISH: (_finish_pos, _finish_neg),
    TemporalPredicate.BEFORE: (_before_pos, _before_neg),
    TemporalPredicate.DISJOINT: (_disjoint_pos, _disjoint_neg),
    TemporalPredicate.INCLUDE: (_include_pos, _include_neg),
}

INTERVAL_PREDICATES = tuple(CONDITIONS)


def conditions(p: TemporalPredicate, t1: TimeInterval, t2: TimeInterval) -> tuple[Logic3, Logic3]:
    """Three-valued (positive condition, negative condition) for ``p`` on the pair."""
    pos, neg = CONDITIONS[p]
    return pos(t1, t2), neg(t1, t2)


def eval_predicate(p: TemporalPredicate, t1: TimeInterval, t2: TimeInterval) -> Logic3:
    if p is TemporalPredicate.MUTEX:
        raise ValueError("mutex takes no interval arguments")
    pos, neg = CONDITIONS[p]
    # The positive condition is checked first. Both can hold at once for a point
    # interval touching another one; checking positive first keeps before => disjoint.
    if pos(t1, t2) is POS:
        return POS
    if neg(t1, t2) is POS:
        return NEG
    return UNK


def all3(values) -> Logic3:
    out = POS
    for v in values:
        if v is NEG:
            return NEG
        if v is UNK:
            out = UNK
    return out


def any3(values) -> Logic3:
    out = NEG
    for v in values:
        if v is POS:
            return POS
        if v is UNK:
            out = UNK
    return out
