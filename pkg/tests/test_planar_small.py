import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_store, random_points
from emrange.errors import AbsentPoint, DuplicatePoint
from emrange.geometry import Point, canonical
from emrange.oracle import OracleSet
from emrange.planar_small import PlanarSmall, SmallBParams, small_fanout


def make(B=16, hint=4000, eps=0.5, M=16):
    return PlanarSmall(SmallBParams(B, eps, hint), make_store(B, M))


def test_fanout_is_log_power():
    assert small_fanout(1 << 16, 0.5) == 4
    assert small_fanout(10**6, 0.5) == math.ceil(math.log2(10**6) ** 0.5)
    assert small_fanout(2, 0.5) == 2
    with pytest.raises(ValueError):
        SmallBParams(16, eps=1.0)


def test_single_point_round_trip():
    t = make()
    p = Point(3, 4, 0)
    t.insert(p)
    assert t.query2d(0, 10, 0, 10) == [p]
    t.delete(p)
    assert t.query2d(0, 10, 0, 10) == []
    assert t.check_invariants() == []


def test_updates_reach_every_node_on_the_path():
    t = make(4, hint=2000)
    pts = random_points(2000, seed=1)
    for p in pts:
        t.insert(p)
    depth = t.height() - 1
    assert depth >= 2
    assert set(t.residency().values()) == {depth}
    assert not any(v.Ib or v.Db for v, _ in t.iter_nodes())


def test_query_within_one_child_recurses():
    t = make(16)
    pts = [Point(i, i % 97, i) for i in range(3000)]
    t.bulk_load(pts)
    first = t.root.children[0]
    hi = next(iter(sorted(first.ylist, key=lambda p: p.x)[-1:])).x
    got = t.query2d(0, hi - 1, 0, 50)
    assert t.last_query.path_nodes >= 2
    assert canonical(got) == canonical([p for p in pts if p.x <= hi - 1 and p.y <= 50])


def test_mid_query_covers_aligned_children():
    t = make(16)
    pts = [Point(i, i % 89, i) for i in range(3000)]
    t.bulk_load(pts)
    v = next(u for u, _ in t.iter_nodes() if len(u.children) >= 3)
    kids = v.children
    xs = [sorted(p.x for p in k.ylist) for k in kids]
    a, b = xs[1][0], xs[-2][-1]
    mid = t.mid_query(v, 1, len(kids) - 2, 10, 40)
    want = [p for p in pts if a <= p.x <= b and 10 <= p.y <= 40]
    assert canonical(mid) == canonical(want)
    assert canonical(t.query2d(a, b, 10, 40)) == canonical(want)


@pytest.mark.parametrize("B", [4, 16, 64])
def test_mixed_replay_matches_oracle(B):
    rng = random.Random(B)
    t = make(B)
    oracle = OracleSet()
    live, nid = [], 0
    for k in range(4000):
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
            q = (a, a + rng.randrange(400), c, c + rng.randrange(400))
            assert canonical(t.query2d(*q)) == canonical(oracle.o_query2d(*q)), k
        if (k + 1) % 250 == 0:
            assert t.check_invariants() == [], k


def test_errors_leave_structure_untouched():
    t = make(16)
    t.insert(Point(1, 1, 1))
    t.store.flush()
    before = t.store.io_stats().live_blocks
    with pytest.raises(DuplicatePoint):
        t.insert(Point(1, 1, 1))
    with pytest.raises(AbsentPoint):
        t.delete(Point(9, 9, 9))
    assert t.store.io_stats().live_blocks == before
    assert t.query2d(0, 5, 0, 5) == [Point(1, 1, 1)]


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
    assert t.check_invariants() == []
    assert t.live_points() == set(live)
