import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_store, random_points
from emrange.corner import CornerOverflow, CornerStructure, default_capacity
from emrange.geometry import Point, canonical
from emrange.oracle import OracleSet


def slab_arithmetic(n, B):
    """Expected (slabs, catalog blocks): x-order cut into runs of B."""
    slabs = -(-n // B)
    return slabs, -(-slabs // B)


def test_empty_build_answers_nothing():
    cs = CornerStructure.build([], make_store())
    assert cs.query3s((-10**9, 10**9, -10**9)) == []
    assert cs.top_by_y(5) == []


def test_three_blocks_of_sorted_points():
    B = 16
    cs = CornerStructure.build([Point(i, i, i) for i in range(3 * B)], make_store(B))
    assert (len(cs.slab_bids), len(cs.catalog_bids)) == slab_arithmetic(3 * B, B) == (3, 1)


def test_one_extra_point_needs_a_second_slab():
    B = 16
    cs = CornerStructure.build(random_points(B + 1), make_store(B))
    assert len(cs.slab_bids) == 2


def test_full_range_reports_all():
    pts = [Point(i, i, i) for i in range(64)]
    cs = CornerStructure.build(pts, make_store(16))
    assert canonical(cs.query3s((0, 63, 0))) == canonical(pts)


def test_random_queries_match_scan():
    rng = random.Random(3)
    pts = random_points(1000, seed=3, span=10_000)
    cs = CornerStructure.build(pts, make_store(16), capacity=1000)
    oracle = OracleSet(pts)
    for _ in range(100):
        a, b = sorted(rng.randrange(10_000) for _ in range(2))
        c = rng.randrange(10_000)
        assert canonical(cs.query3s((a, b, c))) == canonical(oracle.o_query3s(a, b, c))


def test_top_by_y():
    pts = [Point(i * 7 % 101, y, y) for y, i in zip(range(1, 101), range(100))]
    cs = CornerStructure.build(pts, make_store(16), capacity=100, top_len=3)
    assert cs.top_by_y(0) == []
    assert [p.y for p in cs.top_by_y(3)] == [100, 99, 98]
    assert len(cs.top_by_y(1000)) == 100


def test_top_by_y_matches_full_sort():
    pts = random_points(500, seed=9, span=50)
    cs = CornerStructure.build(pts, make_store(16), capacity=500, top_len=40)
    want = sorted(pts, key=lambda p: (p.y, p.id), reverse=True)[:37]
    assert cs.top_by_y(37) == want


def test_overflow_is_rejected():
    store = make_store(16)
    with pytest.raises(CornerOverflow):
        CornerStructure.build(random_points(default_capacity(16) + 1), store)


def test_rebuild_reuses_and_frees_blocks():
    store = make_store(16)
    cs = CornerStructure.build(random_points(80), store, capacity=80)
    cs.rebuild(random_points(20, seed=1))
    assert store.io_stats().live_blocks == cs.block_count == 2 + 1
    cs.free()
    assert store.io_stats().live_blocks == 0


def test_runs_never_share_a_slab():
    store = make_store(16)
    cs = CornerStructure(store, capacity=1000)
    left = [Point(i, i, i) for i in range(20)]
    right = [Point(100 + i, i, 100 + i) for i in range(5)]
    cs.rebuild_runs([left, right])
    assert len(cs.slab_bids) == 3
    assert canonical(cs.query3s((0, 200, 0))) == canonical(left + right)


def test_embedded_catalog_writes_no_directory():
    store = make_store(16)
    cs = CornerStructure(store, capacity=1000, embedded_catalog=True)
    cs.rebuild(random_points(40))
    assert cs.catalog_bids == [] and len(cs.catalog) == 3
    assert cs.catalog_consistent()


@given(st.lists(st.tuples(st.integers(0, 60), st.integers(0, 60)), max_size=120),
       st.integers(0, 60), st.integers(0, 60), st.integers(0, 60))
def test_queries_equal_oracle(raw, a, b, c):
    pts = [Point(x, y, i) for i, (x, y) in enumerate(raw)]
    cs = CornerStructure.build(pts, make_store(4), capacity=len(pts) + 1)
    assert canonical(cs.query3s((a, b, c))) == canonical(OracleSet(pts).o_query3s(a, b, c))


@given(st.integers(0, 200), st.sampled_from([4, 8, 16]))
def test_block_budget_and_build_cost(n, B):
    store = make_store(B, M=4)
    store.reset_stats()
    cs = CornerStructure.build(random_points(n, seed=n), store, capacity=max(n, 1))
    store.flush()
    live = store.io_stats().live_blocks
    assert live <= 2 + math.ceil(n / B) + 2 * math.ceil(n / B ** 2)
    assert store.io_stats().total <= 4 * (math.ceil(n / B) + 1)
    assert live == cs.block_count


@given(st.integers(1, 150), st.integers(0, 1000), st.integers(0, 1000), st.integers(0, 1000))
def test_query_io_envelope(n, a, b, c):
    B = 8
    store = make_store(B, M=2)
    cs = CornerStructure.build(random_points(n, seed=n, span=1000), store, capacity=n)
    a, b = min(a, b), max(a, b)
    store.drop_cache()
    before = store.io_stats().reads
    got = cs.query3s((a, b, c))
    cost = store.io_stats().reads - before
    slabs = len(cs.slab_bids)
    assert cost <= 3 + min(slabs, len(got)) + len(cs.catalog_bids)
    # only the two slabs straddling a or b may be read without yielding a point
    assert sum(1 for _, k in cs.last_slab_yields if k == 0) <= 2
