"""Two-dimensional range reporting for small blocks via three-sided queries.

The base tree over x has fan-out rho = Theta(log2^eps N). Every non-root
node stores its points three times: in a priority search tree answering
[a, +inf) x [c, d], in one answering (-inf, b] x [c, d], and in a y-ordered
blocked list. Updates are applied directly to every node on the point's
root-to-leaf path; a query at the split node combines the two three-sided
answers of the outermost children with y-interval reports from the y-lists
of the children in between.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .emstore import BlockStore
from .errors import AbsentPoint, DuplicatePoint
from .geometry import ID_HI, ID_LO, Point
from .planar_large import PlanarTree, TreeShape, _ceil
from .sortedlist import ykey


def small_fanout(n: int, eps: float) -> int:
    return max(2, _ceil(math.log2(max(n, 2)) ** eps))


@dataclass
class SmallBParams:
    B: int
    eps: float = 0.5
    capacity_hint: int = 1 << 16
    delta: float = 0.25
    rho: int = field(init=False)

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.B < 4:
            raise ValueError("B must be >= 4")
        self.rho = small_fanout(self.capacity_hint, self.eps)

    def shape(self) -> TreeShape:
        return TreeShape(self.B, self.delta, 4, False, self.rho, 1, 1, False,
                         2 * self.B)


class PlanarSmall(PlanarTree):
    """Unbuffered base tree of fan-out rho with per-node three-sided structures."""

    def __init__(self, params: SmallBParams, store: BlockStore):
        self.params = params
        super().__init__(params.shape(), store, params.capacity_hint)

    @property
    def rho(self) -> int:
        return self.shape.fanout

    def _fanout_for(self, n: int) -> int | None:
        return small_fanout(n, self.params.eps)

    def _leaf_for(self, p: Point):
        v = self.root
        k = (p[0], p[2])
        while not v.is_leaf:
            self._read_header(v)
            v = v.children[v.child_index(k)]
        return v

    def contains(self, p) -> bool:
        p = Point(*p)
        yl = self._leaf_for(p).ylist
        return yl.successor(ykey(p)) == p

    def insert(self, p) -> None:
        # validate before touching any structure: updates are applied at once
        p = Point(*p)
        if self.contains(p):
            raise DuplicatePoint(p)
        super().insert(p)

    def delete(self, p) -> None:
        p = Point(*p)
        if not self.contains(p):
            raise AbsentPoint(p)
        super().delete(p)

    def mid_query(self, v, i: int, j: int, c: int, d: int) -> list[Point]:
        """Points of children i..j of v with c <= y <= d."""
        out: list[Point] = []
        lo, hi = (c, ID_LO), (d, ID_HI)
        for t in range(i, j + 1):
            out.extend(v.children[t].ylist.range(lo, hi))
        return out

    def residency(self) -> dict[Point, int]:
        """How many node y-lists hold each point (uncharged count)."""
        seen: dict[Point, int] = {}
        for v, _ in self.iter_nodes():
            if v.ylist is not None and (v is not self.root or v.is_leaf):
                for p in v.ylist:
                    seen[p] = seen.get(p, 0) + 1
        return seen
