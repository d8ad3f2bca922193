"""Static three-sided structure for small point sets (at most kappa * B^(1+delta)).

Layout: points are cut in x-order into slabs of at most B points, one block
each, stored by descending y. A catalog (one record per slab: x-min, x-max,
y-max, block id) occupies ceil(slabs / B) blocks. An optional y-descending
prefix of the whole set serves ``top_by_y`` without touching the slabs.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

from ._kernels import scan_ydesc
from .emstore import BlockId, BlockStore
from .geometry import Point, ThreeSidedRange


class CornerOverflow(Exception):
    """More points than the structure's configured capacity."""


def default_capacity(B: int, delta: float = 0.25, kappa: float = 2.0) -> int:
    return int(math.ceil(kappa * B ** (1.0 + delta)))


def _ydesc(p):
    return (-p[1], -p[2])


class CornerStructure:
    """Slab-and-catalog three-sided structure.

    Records are tuples whose first three fields are (x, y, id); any trailing
    fields ride along untouched, so callers can tag records.
    """

    __slots__ = ("store", "capacity", "top_len", "n", "slab_bids",
                 "catalog_bids", "top_bids", "last_slab_yields", "keep_unchanged",
                 "embedded", "catalog")

    def __init__(self, store: BlockStore, capacity: int | None = None,
                 top_len: int = 0, keep_unchanged: bool = False,
                 embedded_catalog: bool = False):
        self.store = store
        # with an embedded catalog the owner stores ``catalog`` in its own
        # header blocks and must have read them before querying
        self.embedded = embedded_catalog
        self.catalog: list[tuple] = []
        # owners that rebuild from data they have just read know the old
        # contents and may skip rewriting blocks that come out identical
        self.keep_unchanged = keep_unchanged
        self.capacity = capacity if capacity is not None else default_capacity(store.B)
        self.top_len = top_len
        self.n = 0
        self.slab_bids: list[BlockId] = []
        self.catalog_bids: list[BlockId] = []
        self.top_bids: list[BlockId] = []
        # (slab block id, points reported) for the latest query; instrumentation.
        self.last_slab_yields: list[tuple[BlockId, int]] = []

    @classmethod
    def build(cls, points: Iterable[Point], store: BlockStore,
              capacity: int | None = None, top_len: int = 0) -> "CornerStructure":
        cs = cls(store, capacity, top_len)
        cs.rebuild(points)
        return cs

    def rebuild(self, points: Iterable[Point]) -> None:
        """Replace the contents wholesale, reusing already-allocated blocks."""
        self.rebuild_runs([points])

    def rebuild_runs(self, runs: Sequence[Iterable[Point]]) -> None:
        """Rebuild from x-disjoint runs given in x order; no slab spans two runs.

        Aligning slabs to runs means a run whose points did not change keeps
        its slab blocks byte-identical across rebuilds.
        """
        key = lambda p: (p[0], p[2])
        B = self.store.B
        chunks = []
        n = 0
        for run in runs:
            pts = sorted(run, key=key)
            n += len(pts)
            chunks.extend(pts[i:i + B] for i in range(0, len(pts), B))
        if n > self.capacity:
            raise CornerOverflow(f"{n} points exceed capacity {self.capacity}")
        store = self.store
        n_slabs = len(chunks)
        old = self.slab_bids
        slab_bids = old[:n_slabs]
        while len(slab_bids) < n_slabs:
            slab_bids.append(store.alloc())
        for bid in old[n_slabs:]:
            store.free(bid)
        catalog = []
        keep = self.keep_unchanged
        for chunk, bid in zip(chunks, slab_bids):
            block = sorted(chunk, key=_ydesc)
            if not (keep and store.peek(bid) == block):
                store.write(bid, block)
            catalog.append((chunk[0][0], chunk[-1][0], block[0][1], bid))
        self.slab_bids = slab_bids
        if self.embedded:
            self.catalog = catalog
        else:
            self.catalog_bids = store.write_all(self.catalog_bids, catalog, keep)
        if self.top_len:
            t = min(n, -(-self.top_len // B) * B)
            top = sorted((p for c in chunks for p in c), key=_ydesc)[:t]
            self.top_bids = store.write_all(self.top_bids, top, keep)
        self.n = n

    def free(self) -> None:
        store = self.store
        store.free_all(self.slab_bids)
        store.free_all(self.catalog_bids)
        store.free_all(self.top_bids)
        self.slab_bids, self.catalog_bids, self.top_bids = [], [], []
        self.catalog = []
        self.n = 0

    def __len__(self) -> int:
        return self.n

    @property
    def block_count(self) -> int:
        return len(self.slab_bids) + len(self.catalog_bids) + len(self.top_bids)

    def query3s(self, q: ThreeSidedRange | Sequence[int]) -> list[Point]:
        """All points with a <= x <= b and y >= c."""
        a, b, c = q
        self.last_slab_yields = []
        if not self.n or a > b:
            return []
        store = self.store
        out: list[Point] = []
        yields = self.last_slab_yields
        for xmin, xmax, ymax, bid in self._catalog_entries():
            if xmax < a or xmin > b or ymax < c:
                continue
            hits = scan_ydesc(store.read(bid), a, b, c)
            yields.append((bid, len(hits)))
            out.extend(hits)
        return out

    def _catalog_entries(self):
        if self.embedded:
            return self.catalog
        return self.store.read_all(self.catalog_bids)

    def top_by_y(self, t: int) -> list[Point]:
        """The t highest points by (y, id), highest first."""
        if t <= 0 or not self.n:
            return []
        store = self.store
        B = store.B
        if self.top_bids and t <= len(self.top_bids) * B:
            need = -(-t // B)
            return store.read_all(self.top_bids[:need])[:t]
        pts = store.read_all(self.slab_bids)
        pts.sort(key=_ydesc)
        return pts[:t]

    def all_points(self) -> list[Point]:
        return self.store.read_all(self.slab_bids)

    def peek_points(self) -> list[Point]:
        """Uncharged content dump for invariant checks."""
        out: list[Point] = []
        for bid in self.slab_bids:
            out.extend(self.store.peek(bid))
        return out

    def catalog_consistent(self) -> bool:
        store = self.store
        if self.embedded:
            entries = list(self.catalog)
        else:
            entries = [e for cbid in self.catalog_bids for e in store.peek(cbid)]
        if len(entries) != len(self.slab_bids):
            return False
        for xmin, xmax, ymax, bid in entries:
            block = store.peek(bid)
            if not block or len(block) > store.B:
                return False
            if max(p[1] for p in block) != ymax:
                return False
            if min(p[0] for p in block) != xmin or max(p[0] for p in block) != xmax:
                return False
        return True


class TopPrefix:
    """The ``length`` highest points of a set, y-descending, in whole blocks.

    A prefix-only view: enough to answer ``top_by_y(t)`` for t <= length in
    ceil(t / B) reads without keeping a second copy of the slabs.
    """

    __slots__ = ("store", "length", "bids", "n", "keep_unchanged")

    def __init__(self, store: BlockStore, length: int, keep_unchanged: bool = False):
        self.store = store
        self.keep_unchanged = keep_unchanged
        self.length = length
        self.bids: list[BlockId] = []
        self.n = 0

    def rebuild(self, points: Iterable) -> None:
        top = sorted(points, key=_ydesc)[: self.length]
        self.bids = self.store.write_all(self.bids, top, self.keep_unchanged)
        self.n = len(top)

    def top_by_y(self, t: int) -> list:
        if t > self.length:
            raise ValueError(f"prefix holds only {self.length} points")
        if t <= 0 or not self.n:
            return []
        B = self.store.B
        return self.store.read_all(self.bids[: -(-t // B)])[:t]

    def peek_points(self) -> list:
        out: list = []
        for bid in self.bids:
            out.extend(self.store.peek(bid))
        return out

    def free(self) -> None:
        self.store.free_all(self.bids)
        self.bids = []
        self.n = 0
