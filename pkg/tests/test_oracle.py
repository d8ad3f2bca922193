import pytest
from hypothesis import given
from hypothesis import strategies as st

from emrange.errors import AbsentPoint, DuplicatePoint
from emrange.geometry import Point, canonical, in_2d, in_3s
from emrange.oracle import OracleSet

coords = st.integers(-50, 50)
point_lists = st.lists(st.tuples(coords, coords), max_size=80)


def test_empty_queries():
    o = OracleSet()
    assert o.o_query3s(-10, 10, -10) == [] and o.o_query2d(0, 1, 0, 1) == []


def test_round_trip_empties():
    o = OracleSet()
    o.o_insert(Point(1, 2, 3))
    o.o_delete(Point(1, 2, 3))
    assert len(o) == 0 and o.points() == []


def test_errors():
    o = OracleSet([Point(1, 2, 3)])
    with pytest.raises(DuplicatePoint):
        o.o_insert(Point(1, 9, 3))
    with pytest.raises(AbsentPoint):
        o.o_delete(Point(1, 9, 3))


@given(point_lists, coords, coords, coords, coords)
def test_two_sided_y_is_three_sided_cut_at_d(raw, a, b, c, d):
    o = OracleSet(Point(x, y, i) for i, (x, y) in enumerate(raw))
    a, b = min(a, b), max(a, b)
    want = [p for p in o.o_query3s(a, b, c) if p.y <= d]
    assert canonical(o.o_query2d(a, b, c, d)) == canonical(want)


@given(point_lists, st.data())
def test_matches_predicates_after_deletes(raw, data):
    pts = [Point(x, y, i) for i, (x, y) in enumerate(raw)]
    o = OracleSet(pts)
    gone = data.draw(st.sets(st.sampled_from(pts))) if pts else set()
    for p in gone:
        o.o_delete(p)
    live = [p for p in pts if p not in gone]
    assert canonical(o.points()) == canonical(live)
    a, b, c, d = (data.draw(coords) for _ in range(4))
    assert canonical(o.o_query3s(a, b, c)) == canonical([p for p in live if in_3s(p, a, b, c)])
    assert canonical(o.o_query2d(a, b, c, d)) == \
        canonical([p for p in live if in_2d(p, a, b, c, d)])
    assert o.o_top_by_y(5) == sorted(live, key=lambda p: (p.y, p.id), reverse=True)[:5]
