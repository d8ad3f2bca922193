import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_store, random_points
from emrange.errors import AbsentPoint, DuplicatePoint
from emrange.geometry import Point, canonical
from emrange.grouped_tree import (GroupedParams, GroupedTree, GroupIndex, is_ref,
                                  one_report)
from emrange.oracle import OracleSet
from emrange.sortedlist import SortedBlockList


def make(B=16, hint=4000, M=16):
    return GroupedTree(GroupedParams(B, capacity_hint=hint), make_store(B, M))


def keyed(store, keys):
    return SortedBlockList(store, key=lambda r: r, records=[(k, 0) for k in keys])


def test_one_report():
    store = make_store(4)
    assert one_report(keyed(store, []), (0, 0), (10, 0)) is None
    idx = keyed(store, [3, 9])
    assert one_report(idx, (4, 0), (8, 0)) is None
    assert one_report(idx, (2, 0), (5, 0)) == (3, 0)


def test_derived_parameters():
    p = GroupedParams(1024, eps=0.5, capacity_hint=1 << 16)
    assert p.eps_prime == pytest.approx(0.05)
    assert p.fanout == 2 and p.max_children == 3
    assert p.point_lo == 512 and p.point_hi == 2048
    assert p.split_trigger == min(p.group_hi, p.split_size)
    with pytest.raises(ValueError):
        GroupedParams(16, eps=0)


def test_single_insert_gives_one_group_per_node():
    t = make(16)
    p = Point(4, 7, 0)
    t.insert(p)
    for v, _ in t.iter_nodes():
        if not v.is_leaf:
            assert len(v.groups) == 1
            assert all(list(L) == [p] for L in v.lists.values())
    assert t.query2d(0, 10, 0, 10) == [p]


def test_share_reaching_2B_becomes_one_reference():
    B = 4
    t = make(B)
    t.bulk_load([Point(x, 1000 + x, x) for x in range(0, 400, 10)])
    root = t.root
    assert len(root.children) >= 2
    pair = (0, 0)
    g = root.groups[0]
    base = g.share(*pair)
    assert base < 2 * B and pair not in g.refs
    nid = 10**6
    while g.share(*pair) < 2 * B - 1:
        t.insert(Point(1, 5 + g.share(*pair), nid))
        nid += 1
        assert pair not in g.refs
    t.insert(Point(1, 900, nid))
    assert g.share(*pair) == 2 * B
    assert pair in g.refs and t.counters.promotions >= 1
    refs = [e for e in root.lists[pair] if is_ref(e) and e[1] == g.gid]
    loose = [e for e in root.lists[pair] if not is_ref(e)
             and root.group_index((e[1], e[2])) == 0]
    assert len(refs) == 1 and loose == []
    assert t.form_violations() == []


def test_group_split_keeps_answers():
    B = 4
    t = make(B, hint=64)
    trig = t.params.split_trigger
    pts = random_points(trig + 5, seed=3, span=1000)
    oracle = OracleSet()
    for p in pts:
        t.insert(p)
        oracle.o_insert(p)
    assert t.counters.group_splits >= 1
    assert all(len(g.index) <= trig for v, _ in t.iter_nodes() for g in v.groups)
    rng = random.Random(3)
    for _ in range(100):
        a, c = rng.randrange(1000), rng.randrange(1000)
        q = (a, a + rng.randrange(500), c, c + rng.randrange(500))
        assert canonical(t.query2d(*q)) == canonical(oracle.o_query2d(*q))
    assert t.check_invariants() == []


def test_materialized_only_query_probes_no_group():
    t = make(16)
    pts = [Point(x, x, x) for x in range(20)]
    for p in pts:
        t.insert(p)
    got = t.query2d(2, 15, 0, 100)
    assert canonical(got) == pts[2:16]
    assert t.last_query.group_probes == 0


def test_window_inside_one_reference_takes_one_group_probe():
    B = 4
    t = make(B, hint=64)
    t.bulk_load([Point(x, 1000 + x, x) for x in range(0, 400, 10)])
    x1 = t.root.seps[0][0]
    for k in range(2 * B):
        t.insert(Point(x1 + 1 + k, 100 + 10 * k, 10**6 + k))
    assert any(g.refs for g in t.root.groups)
    # no mixed-list element falls in [115, 125]: a reference spans it
    got = t.query2d(0, 10**6, 115, 125)
    assert got == [Point(x1 + 3, 120, 10**6 + 2)]
    st_ = t.last_query
    assert st_.walks == [] and st_.group_probes == 1 and st_.witness_probes >= 1


def test_group_index_four_sided():
    store = make_store(4)
    pts = random_points(300, seed=4, span=200)
    gi = GroupIndex(store, pts)
    oracle = OracleSet(pts)
    rng = random.Random(4)
    for _ in range(50):
        a, c = rng.randrange(200), rng.randrange(200)
        q = (a, a + rng.randrange(100), c, c + rng.randrange(100))
        assert canonical(gi.query(*q)) == canonical(oracle.o_query2d(*q))
    extra = Point(5, 5, 10**6)
    gi.insert(extra)
    gi.delete(pts[0])
    assert set(gi.all_points()) == (set(pts) | {extra}) - {pts[0]}


@pytest.mark.parametrize("B", [4, 16])
def test_mixed_replay_with_audits(B):
    rng = random.Random(B)
    t = make(B, hint=3000)
    oracle = OracleSet()
    live, nid = [], 0
    for k in range(3000):
        r = rng.random()
        if r < 0.6 or not live:
            p = Point(rng.randrange(1000), rng.randrange(1000), nid)
            nid += 1
            t.insert(p)
            oracle.o_insert(p)
            live.append(p)
        elif r < 0.8:
            p = live.pop(rng.randrange(len(live)))
            t.delete(p)
            oracle.o_delete(p)
        else:
            a, c = rng.randrange(1000), rng.randrange(1000)
            q = (a, a + rng.randrange(500), c, c + rng.randrange(500))
            assert canonical(t.query2d(*q)) == canonical(oracle.o_query2d(*q)), k
            assert t.walk_violations() == [], k
        if (k + 1) % 250 == 0:
            assert t.check_invariants() == [], k


def test_errors():
    t = make(16)
    t.insert(Point(1, 1, 1))
    with pytest.raises(DuplicatePoint):
        t.insert(Point(1, 1, 1))
    with pytest.raises(AbsentPoint):
        t.delete(Point(2, 2, 2))


@settings(max_examples=25)
@given(st.lists(st.tuples(st.sampled_from("iiidq"), st.integers(0, 100), st.integers(0, 100),
                          st.integers(0, 50), st.integers(0, 50)), max_size=250))
def test_sequences_match_oracle(seq):
    t = make(4, hint=64, M=4)
    oracle = OracleSet()
    live, nid = [], 0
    for kind, x, y, w, h in seq:
        if kind == "i":
            p = Point(x, y, nid)
            nid += 1
            t.insert(p)
            oracle.o_insert(p)
            live.append(p)
        elif kind == "d" and live:
            p = live.pop(x % len(live))
            t.delete(p)
            oracle.o_delete(p)
        elif kind == "q":
            q = (x, x + w, y, y + h)
            assert canonical(t.query2d(*q)) == canonical(oracle.o_query2d(*q))
            assert t.walk_violations() == []
    assert t.check_invariants() == []
    assert set(t.live_points()) == set(live)
