"""Brute-force reference set: linear scans over flat coordinate arrays."""
from __future__ import annotations

import numpy as np

from .errors import AbsentPoint, DuplicatePoint
from .geometry import Point


class OracleSet:
    """Points with (x, id) uniqueness; every query is a full scan."""

    def __init__(self, points=()):
        self._cap = 64
        self._x = np.empty(self._cap, dtype=np.int64)
        self._y = np.empty(self._cap, dtype=np.int64)
        self._id = np.empty(self._cap, dtype=np.int64)
        self._n = 0
        self._slot: dict[tuple[int, int], int] = {}
        for p in points:
            self.o_insert(p)

    def __len__(self) -> int:
        return self._n

    def __contains__(self, p) -> bool:
        p = Point(*p)
        i = self._slot.get((p.x, p.id))
        return i is not None and int(self._y[i]) == p.y

    def _grow(self) -> None:
        self._cap *= 2
        for name in ("_x", "_y", "_id"):
            arr = getattr(self, name)
            new = np.empty(self._cap, dtype=np.int64)
            new[: self._n] = arr[: self._n]
            setattr(self, name, new)

    def o_insert(self, p) -> None:
        p = Point(*p)
        key = (p.x, p.id)
        if key in self._slot:
            raise DuplicatePoint(p)
        if self._n == self._cap:
            self._grow()
        i = self._n
        self._x[i], self._y[i], self._id[i] = p.x, p.y, p.id
        self._slot[key] = i
        self._n += 1

    def o_delete(self, p) -> None:
        p = Point(*p)
        key = (p.x, p.id)
        i = self._slot.get(key)
        if i is None or int(self._y[i]) != p.y:
            raise AbsentPoint(p)
        last = self._n - 1
        if i != last:
            self._x[i], self._y[i], self._id[i] = self._x[last], self._y[last], self._id[last]
            self._slot[(int(self._x[i]), int(self._id[i]))] = i
        del self._slot[key]
        self._n = last

    def _emit(self, mask) -> list[Point]:
        idx = np.nonzero(mask)[0]
        xs, ys, ids = self._x[idx].tolist(), self._y[idx].tolist(), self._id[idx].tolist()
        return [Point(x, y, i) for x, y, i in zip(xs, ys, ids)]

    def o_query3s(self, a: int, b: int, c: int) -> list[Point]:
        n = self._n
        x, y = self._x[:n], self._y[:n]
        return self._emit((x >= a) & (x <= b) & (y >= c))

    def o_query2d(self, a: int, b: int, c: int, d: int) -> list[Point]:
        n = self._n
        x, y = self._x[:n], self._y[:n]
        return self._emit((x >= a) & (x <= b) & (y >= c) & (y <= d))

    def o_top_by_y(self, t: int) -> list[Point]:
        pts = self.points()
        pts.sort(key=lambda p: (p.y, p.id), reverse=True)
        return pts[: max(t, 0)]

    def points(self) -> list[Point]:
        return self._emit(np.ones(self._n, dtype=bool))
