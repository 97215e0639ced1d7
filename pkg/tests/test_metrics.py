from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempcon.chronal import NEG, POS, UNK, TemporalPredicate as TP, TimeInterval
from tempcon.kg import Fact
from tempcon.metrics import (
    ENTITY,
    FACT,
    ConstraintStats,
    classify_subgraph,
    entity_level_stats,
    entity_value,
    fact_level_stats,
)
from tempcon.oracle import beckham_fixture
from tempcon.patterns import GraphPattern, Match, match_subgraphs

SAME = GraphPattern("A", (("member_of_sports_team", False),) * 2)


def beckham_matches():
    return list(match_subgraphs(beckham_fixture(), SAME))


def pair(x, a, b, c, d):
    return Match(x, Fact(0, x, "p", "o1", TimeInterval.parse(a, b)), Fact(1, x, "p", "o2", TimeInterval.parse(c, d)))


def test_beckham_fact_level():
    st_ = fact_level_stats(TP.DISJOINT, beckham_matches())
    assert (st_.instantiations, st_.positives, st_.negatives, st_.unknowns) == (15, 10, 4, 1)
    assert st_.support == 10
    assert st_.exact_confidence() == Fraction(5, 7)
    assert abs(st_.confidence - 5 / 7) < 1e-12


def test_beckham_entity_level():
    st_ = entity_level_stats(TP.DISJOINT, beckham_matches())
    assert (st_.positives, st_.negatives, st_.unknowns) == (0, 1, 0)
    assert st_.support == 0 and st_.confidence == 0.0


def test_classify_examples():
    by_objects = {frozenset((m.f1.object, m.f2.object)): m for m in beckham_matches()}
    manu_real = by_objects[frozenset(("Manchester_United_FC", "Real_Madrid_CF"))]
    eng_milan = by_objects[frozenset(("England_national_football_team", "AC_Milan"))]
    assert classify_subgraph(TP.DISJOINT, manu_real) is POS
    assert classify_subgraph(TP.DISJOINT, eng_milan) is UNK
    assert classify_subgraph(TP.MUTEX, manu_real) is NEG


def test_empty_stream_no_evidence():
    for fn in (fact_level_stats, entity_level_stats):
        s = fn(TP.DISJOINT, [])
        assert s.support == 0 and s.confidence is None and s.exact_confidence() is None


def test_all_positive():
    ms = [pair("x", "1990", "1991", "1993", "1994") for _ in range(4)]
    assert fact_level_stats(TP.DISJOINT, ms).confidence == 1.0
    e = entity_level_stats(TP.DISJOINT, ms)
    assert (e.support, e.confidence) == (1, 1.0)


def test_two_entities_one_negative():
    ms = [
        pair("x", "1990", "1991", "1993", "1994"),
        pair("y", "1990", "1991", "1993", "1994"),
        pair("y", "1990", "1995", "1993", "1994"),
    ]
    e = entity_level_stats(TP.DISJOINT, ms)
    assert (e.support, e.negatives, e.confidence) == (1, 1, 0.5)


def test_unknown_entities_disregarded():
    ms = [pair("x", "1990", "1991", "1993", "1994"), pair("y", "1996", "2009", "2009-01", "2009-07")]
    e = entity_level_stats(TP.DISJOINT, ms)
    assert (e.positives, e.negatives, e.unknowns, e.confidence) == (1, 0, 1, 1.0)


def test_mutex_single_bearers():
    ms = [pair("x", "1990", "1991", "1993", "1994")]
    e = entity_level_stats(TP.MUTEX, ms, single_bearers=["y", "z", "x"])
    assert (e.positives, e.negatives) == (2, 1)
    f = fact_level_stats(TP.MUTEX, ms, single_bearers=2)
    assert (f.positives, f.negatives) == (2, 1)


def test_ungrouped_stream_rejected():
    a = pair("x", "1990", "1991", "1993", "1994")
    b = pair("y", "1990", "1991", "1993", "1994")
    with pytest.raises(ValueError):
        entity_level_stats(TP.DISJOINT, [a, b, a])


def test_short_circuit_counts_less_work():
    ms = beckham_matches()
    counter = [0]
    assert entity_value(TP.DISJOINT, ms, counter) is NEG
    assert counter[0] < len(ms)


def test_bad_level():
    with pytest.raises(ValueError):
        ConstraintStats("subject")
    with pytest.raises(ValueError):
        ConstraintStats(FACT) + ConstraintStats(ENTITY)


tokens = st.sampled_from(["-", "1999", "2000", "2000-06", "2001", "2001-03-04", "2002"])


@st.composite
def match_streams(draw):
    out = []
    for x in draw(st.lists(st.sampled_from("abcdef"), unique=True, max_size=5)):
        for _ in range(draw(st.integers(1, 5))):
            ts = sorted(draw(st.lists(tokens, min_size=4, max_size=4)), key=lambda t: (t == "-", t))
            try:
                out.append(pair(x, ts[0], ts[1], ts[2], ts[3]))
            except ValueError:
                pass
    return out


def naive_entity_stats(head, ms):
    s = ConstraintStats(ENTITY)
    groups = {}
    for m in ms:
        groups.setdefault(m.x, []).append(classify_subgraph(head, m))
    for vals in groups.values():
        s.add(NEG if NEG in vals else UNK if UNK in vals else POS)
    return s


@settings(max_examples=200, deadline=None)
@given(match_streams(), st.sampled_from([TP.DISJOINT, TP.BEFORE, TP.INCLUDE, TP.START]), st.randoms())
def test_entity_stats_properties(ms, head, rnd):
    got = entity_level_stats(head, ms)
    assert got == naive_entity_stats(head, ms)
    assert got.support <= len({m.x for m in ms})
    # reorder whole groups, and subgraphs within each group
    groups = {}
    for m in ms:
        groups.setdefault(m.x, []).append(m)
    keys = list(groups)
    rnd.shuffle(keys)
    shuffled = []
    for k in keys:
        g = groups[k][:]
        rnd.shuffle(g)
        shuffled += g
    assert entity_level_stats(head, shuffled) == got
    f = fact_level_stats(head, ms)
    assert f.support <= len(ms)
    for s in (got, f):
        assert s.positives + s.negatives + s.unknowns == s.instantiations
        if s.confidence is not None:
            assert 0 <= s.confidence <= 1


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from([POS, NEG, UNK]), max_size=30), st.integers(0, 30))
def test_stats_merge_is_associative_split(vals, cut):
    whole = ConstraintStats(FACT)
    left, right = ConstraintStats(FACT), ConstraintStats(FACT)
    for i, v in enumerate(vals):
        whole.add(v)
        (left if i < cut else right).add(v)
    assert left + right == whole
    assert (left + right) + ConstraintStats(FACT) == left + (right + ConstraintStats(FACT))
