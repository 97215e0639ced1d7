import pytest

from tempcon.chronal import TemporalPredicate as TP
from tempcon.detector import (
    AnnotationError,
    Conflict,
    DetectReport,
    detect,
    detect_parallel,
    load_annotations,
    recall,
    revalidate,
)
from tempcon.kg import parse_quads
from tempcon.metrics import ConstraintStats
from tempcon.miner import MiningConfig, TemporalConstraint, mine
from tempcon.oracle import example1_fixture, oracle_conflicts
from tempcon.patterns import GraphPattern
from tempcon.synth import Planted, SynthSpec, generate_synthetic

MEMBER = GraphPattern("A", (("member_of_sports_team", False),) * 2)


def tc(head, gp, classes=None):
    return TemporalConstraint(head, gp, ConstraintStats(), classes or {})


def test_example1_one_conflict():
    g = example1_fixture()
    out = list(detect(g, [tc(TP.DISJOINT, MEMBER)]))
    assert out == [Conflict("disjoint|A|member_of_sports_team,member_of_sports_team", (0, 1), ("Lionel_Messi",))]


def test_unknown_is_not_a_conflict():
    g = parse_quads(["x\tp\ta\t1996\t2009", "x\tp\tb\t2009-01\t2009-07"])
    gp = GraphPattern("A", (("p", False),) * 2)
    assert list(detect(g, [tc(TP.DISJOINT, gp)])) == []


def test_empty_constraint_list():
    assert list(detect(example1_fixture(), [])) == []


def test_unresolvable_constraints_skipped():
    g = example1_fixture()
    rep = DetectReport()
    bad_prop = tc(TP.DISJOINT, GraphPattern("A", (("nope", False),) * 2))
    bad_class = tc(TP.DISJOINT, MEMBER, {"y": "Martian"})
    good = tc(TP.DISJOINT, MEMBER)
    out = list(detect(g, [bad_prop, bad_class, good], rep))
    assert len(out) == 1 and len(rep.skipped) == 2
    assert rep.footer()["per_constraint"] == {good.id: 1}


def test_class_restriction_filters():
    g = parse_quads(
        [
            "x\tp\ta\t2000\t2005",
            "x\tp\tb\t2001\t2003",
            "a\ttype\tClub\t-\t-",
            "b\ttype\tNation\t-\t-",
        ]
    )
    gp = GraphPattern("A", (("p", False),) * 2)
    assert len(list(detect(g, [tc(TP.DISJOINT, gp)]))) == 1
    assert list(detect(g, [tc(TP.DISJOINT, gp, {"y": "Club", "z": "Club"})])) == []


def test_mutex_pairs_are_conflicts():
    g = parse_quads(["x\tborn_in\ta\t1950\t1950", "x\tborn_in\tb\t1951\t1951"])
    gp = GraphPattern("A", (("born_in", False),) * 2)
    (c,) = detect(g, [tc(TP.MUTEX, gp)])
    assert c.fact_ids == (0, 1)


def planted_graph(seed=0, noise=0.1):
    spec = SynthSpec(
        entities=300,
        noise=noise,
        seed=seed,
        planted=[
            Planted("disjoint", ("p",)),
            Planted("mutex", ("born_in",)),
            Planted("before", ("born", "died")),
            Planted("linked_before", ("birth", "parent_of")),
        ],
        absent_rate=0.05,
    )
    return generate_synthetic(spec)


def test_detect_matches_oracle_and_revalidates():
    sg = planted_graph(seed=1)
    g = sg.graph
    constraints = mine(g, MiningConfig(freq=20, pruning=False))
    assert constraints
    conflicts = list(detect(g, constraints))
    by_id = {t.id: t for t in constraints}
    assert all(revalidate(g, by_id[c.constraint_id], c) for c in conflicts)
    got = {(c.constraint_id, c.fact_ids) for c in conflicts}
    assert got == oracle_conflicts(g, [t.record() for t in constraints])
    assert len(got) == len(conflicts)  # each conflict once per constraint


def test_revalidate_rejects_non_conflicts():
    g = example1_fixture()
    t = tc(TP.DISJOINT, MEMBER)
    assert revalidate(g, t, Conflict(t.id, (0, 1), ("Lionel_Messi",)))
    assert not revalidate(g, t, Conflict(t.id, (1, 0), ("Lionel_Messi",)))
    inc = tc(TP.INCLUDE, MEMBER)  # [1988,1992] includes [1989,1990]: no violation
    assert not revalidate(g, inc, Conflict(inc.id, (0, 1), ("Lionel_Messi",)))
    assert not revalidate(g, tc(TP.BEFORE, MEMBER), Conflict(t.id, (0, 1), ("Lionel_Messi",)))
    assert not revalidate(g, t, Conflict(t.id, (0, 7), ("Lionel_Messi",)))


def test_planted_violations_found_exactly():
    sg = planted_graph(seed=2, noise=0.05)
    g = sg.graph
    constraints = [t for t in mine(g, MiningConfig(freq=20)) if not t.class_restrictions]
    ids = {t.id for t in constraints}
    assert {"disjoint|A|p,p", "mutex|A|born_in,born_in", "before|A|born,died"} <= ids
    conflicts = list(detect(g, constraints))
    for label, cid in (("disjoint:p", "disjoint|A|p,p"), ("mutex:born_in", "mutex|A|born_in,born_in")):
        assert {c.subjects[0] for c in conflicts if c.constraint_id == cid} == sg.violators[label]


def test_adding_constraints_never_removes_conflicts():
    sg = planted_graph(seed=3)
    g = sg.graph
    constraints = mine(g, MiningConfig(freq=20))
    ann = {i: "wrong" for i in sg.wrong_lines}
    prev, prev_recall = set(), 0.0
    for k in range(len(constraints) + 1):
        cur = list(detect(g, constraints[:k]))
        keys = {(c.constraint_id, c.fact_ids) for c in cur}
        assert prev <= keys
        r = recall(cur, ann).recall
        assert r >= prev_recall
        prev, prev_recall = keys, r


def test_parallel_detect_same_stream():
    sg = planted_graph(seed=4)
    g = sg.graph
    constraints = mine(g, MiningConfig(freq=20))
    assert list(detect_parallel(g, constraints, 3)) == list(detect(g, constraints))


def test_recall_cases():
    ann = {1: "wrong", 2: "wrong", 3: "correct"}
    full = recall([Conflict("c", (1, 3), ("x",)), Conflict("c", (2, 5), ("y",))], ann)
    assert full.recall == 1.0 and full.missed == []
    none = recall([], ann)
    assert none.recall == 0.0 and none.missed == [1, 2]
    half = recall([Conflict("c", (1, 3), ("x",))], ann)
    assert (half.recall, half.hits, half.missed) == (0.5, [1], [2])
    assert "50.00%" in half.text()


def test_load_annotations(tmp_path):
    g = example1_fixture()
    p = tmp_path / "a.tsv"
    p.write_text("0\twrong\n1\tcorrect\n")
    assert load_annotations(p, g) == {0: "wrong", 1: "correct"}
    p.write_text("0\tmaybe\n")
    with pytest.raises(AnnotationError):
        load_annotations(p, g)
    p.write_text("9\twrong\n")
    with pytest.raises(AnnotationError, match="not in graph"):
        load_annotations(p, g)


def test_conflict_json_round_trip():
    c = Conflict("before|B|k,b,b", (4, 9, 2), ("x", "y"))
    assert Conflict.from_json(c.to_json()) == c
    assert c.to_json() == '{"constraint_id": "before|B|k,b,b", "fact_ids": [4, 9, 2], "subjects": ["x", "y"]}'
