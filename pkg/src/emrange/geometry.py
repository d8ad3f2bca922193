"""Point and query-range types shared by every structure."""
from __future__ import annotations

from typing import NamedTuple

# Sentinels for open query sides; every stored coordinate is a signed 64-bit int.
NEG_INF = -(1 << 63)
POS_INF = (1 << 63) - 1

# Bounds for (coordinate, id) keys: ids are unbounded integers, so key ranges
# use true infinities in the id slot.
ID_LO = float("-inf")
ID_HI = float("inf")
KEY_MIN = (ID_LO, ID_LO)
KEY_MAX = (ID_HI, ID_HI)


class Point(NamedTuple):
    x: int
    y: int
    id: int


class ThreeSidedRange(NamedTuple):
    """The range [a, b] x [c, +inf)."""

    a: int
    b: int
    c: int


def xkey(p: Point) -> tuple[int, int]:
    return (p.x, p.id)


def ykey(p: Point) -> tuple[int, int]:
    return (p.y, p.id)


def swap_xy(p: Point) -> Point:
    return Point(p.y, p.x, p.id)


def in_3s(p: Point, a: int, b: int, c: int) -> bool:
    return a <= p.x <= b and p.y >= c


def in_2d(p: Point, a: int, b: int, c: int, d: int) -> bool:
    return a <= p.x <= b and c <= p.y <= d


def canonical(points) -> list[Point]:
    """Sorted, de-duplicated answer list (by (x, id), then y)."""
    return sorted(set(points), key=lambda p: (p.x, p.id, p.y))
