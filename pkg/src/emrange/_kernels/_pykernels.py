"""Pure-Python kernels; drop-in fallback for the compiled ``_ckernels``."""
from __future__ import annotations

from collections import OrderedDict

MISS = 1
EVICTED_DIRTY = 2


class LRUCore:
    """Exact LRU residency tracker over integer block ids."""

    __slots__ = ("capacity", "_slots")

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._slots: OrderedDict[int, bool] = OrderedDict()

    def touch(self, bid: int, dirty: bool = False) -> int:
        """Make ``bid`` most recently used. Returns MISS / EVICTED_DIRTY flags."""
        slots = self._slots
        if bid in slots:
            slots.move_to_end(bid)
            if dirty:
                slots[bid] = True
            return 0
        flags = MISS
        if len(slots) >= self.capacity:
            _, was_dirty = slots.popitem(last=False)
            if was_dirty:
                flags |= EVICTED_DIRTY
        slots[bid] = dirty
        return flags

    def discard(self, bid: int) -> None:
        self._slots.pop(bid, None)

    def flush(self) -> int:
        dirty = [k for k, d in self._slots.items() if d]
        for k in dirty:
            del self._slots[k]
        return len(dirty)

    def clear(self) -> None:
        self._slots.clear()

    def __contains__(self, bid: int) -> bool:
        return bid in self._slots

    def __len__(self) -> int:
        return len(self._slots)


def filter_3s(points, a, b, c):
    return [p for p in points if a <= p[0] <= b and p[1] >= c]


def filter_2d(points, a, b, c, d):
    return [p for p in points if a <= p[0] <= b and c <= p[1] <= d]


def scan_ydesc(points, a, b, c):
    """``points`` sorted by descending y: stop at the first y < c."""
    out = []
    for p in points:
        if p[1] < c:
            break
        if a <= p[0] <= b:
            out.append(p)
    return out


def scan_yasc(points, start, d, a, b):
    """Walk ascending-y ``points`` from ``start`` while y <= d.

    Returns (hits with x in [a, b], True if the walk ran off the end).
    """
    out = []
    n = len(points)
    i = start
    while i < n:
        p = points[i]
        if p[1] > d:
            return out, False
        if a <= p[0] <= b:
            out.append(p)
        i += 1
    return out, True
