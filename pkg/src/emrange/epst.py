"""Buffered external priority search tree for three-sided queries.

The tree is weight balanced over x. Every node ``v`` keeps

* ``S`` - up to 2B points, the highest ones in its x-range not held by an ancestor;
* ``I`` / ``D`` - insert and delete buffers that flush to the children when full;
* ``F`` - three-sided structures over S and I of all children (two slab runs,
  one per set, so a flush that leaves the children's S sets alone rewrites
  only the I run);
* ``R`` - the B highest points of the children's S sets, used to refill S.

A node's meta record, child directory, I, D and F's slab directory share
one block run (the "node block"); S lives in its own run. All access goes through the
:class:`~emrange.emstore.BlockStore`, which does the I/O accounting.
Leaves keep every point routed to them in ``S`` and never buffer.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

from ._kernels import filter_3s
from .corner import CornerStructure, TopPrefix
from .emstore import BlockStore
from .errors import AbsentPoint, DuplicatePoint
from .geometry import ID_HI, ID_LO, KEY_MAX, KEY_MIN, Point

_EPS = 1e-9


def _ceil_pow(B: int, e: float) -> int:
    return int(math.ceil(B ** e - _EPS))


@dataclass
class EpstParams:
    B: int
    delta: float = 0.25
    h: int = 4
    strict_regime: bool = False
    fanout: int = field(init=False)
    buffer_cap: int = field(init=False)
    batch_cap: int = field(init=False)

    def __post_init__(self):
        if not 0 < self.delta <= 0.25:
            raise ValueError("delta must lie in (0, 1/4]")
        if self.B < 4:
            raise ValueError("B must be >= 4")
        self.fanout = max(2, _ceil_pow(self.B, self.delta))
        self.buffer_cap = max(2, _ceil_pow(self.B, 3 * self.delta))
        self.batch_cap = min(max(1, _ceil_pow(self.B, self.delta)), self.buffer_cap)

    def regime_holds(self, n: int) -> bool:
        """True when B^delta >= 4 h log_B n, the regime the query bound assumes."""
        if n <= 1:
            return True
        return self.B ** self.delta >= 4 * self.h * math.log(n, self.B)

    def split_weight(self, level: int) -> int:
        return 2 * self.fanout ** level * self.B


class ChildSummary:
    """F(v): the children's S points (tag 1) and I points (tag 0).

    Kept as two corner structures whose slab directories live in the owning
    node's block, so the owner must have read its node block before a query.
    """

    __slots__ = ("s_part", "i_part")

    def __init__(self, store: BlockStore):
        def part():
            return CornerStructure(store, capacity=1 << 62, keep_unchanged=True,
                                   embedded_catalog=True)
        self.s_part = part()
        self.i_part = part()

    def rebuild(self, s_runs, i_recs) -> None:
        """s_runs: S records in x-ordered runs, each run starting a new slab;
        i_recs: all I records."""
        self.s_part.rebuild_runs(s_runs)
        self.i_part.rebuild(i_recs)

    def query3s(self, q) -> list:
        return self.s_part.query3s(q) + self.i_part.query3s(q)

    @property
    def catalog(self) -> list:
        return self.s_part.catalog + self.i_part.catalog

    @property
    def block_count(self) -> int:
        return self.s_part.block_count + self.i_part.block_count

    def peek_points(self) -> list:
        return self.s_part.peek_points() + self.i_part.peek_points()

    def catalog_consistent(self) -> bool:
        return self.s_part.catalog_consistent() and self.i_part.catalog_consistent()

    def free(self) -> None:
        self.s_part.free()
        self.i_part.free()


class _Node:
    __slots__ = ("level", "children", "seps", "S", "I", "D", "weight",
                 "nb", "sb", "F", "R")

    def __init__(self, level: int):
        self.level = level
        self.children: list[_Node] = []
        self.seps: list[tuple[int, int]] = []
        self.S: set[Point] = set()
        self.I: set[Point] = set()
        self.D: set[Point] = set()
        self.weight = 0
        self.nb: list[int] = []
        self.sb: list[int] = []
        self.F: ChildSummary | None = None
        self.R: TopPrefix | None = None

    @property
    def is_leaf(self) -> bool:
        return self.level == 0

    def child_index(self, key) -> int:
        return bisect_right(self.seps, key)


@dataclass
class QueryStats:
    """Instrumentation for the most recent query."""

    path_nodes: int = 0
    offpath_visits: int = 0
    min_s_reported: int | None = None   # smallest F-phase S count behind a visit
    weak_visits: int = 0                # visits with fewer than B/4 net points
    del_size_max: int = 0
    reported: int = 0


@dataclass
class EpstCounters:
    flushes_insert: int = 0
    flushes_delete: int = 0
    refills: int = 0
    splits: int = 0
    charge_violations: int = 0          # visits below B/2 S-points (must stay 0)


class Epst:
    """Dynamic three-sided range reporting: [a, b] x [c, +inf)."""

    def __init__(self, params: EpstParams, store: BlockStore):
        if store.B != params.B:
            raise ValueError("params.B must match the store's block capacity")
        self.params = params
        self.store = store
        self.root = self._new_node(0)
        self._save_node(self.root)
        self._save_S(self.root)
        self.size = 0
        self._pend_ins: set[Point] = set()
        self._pend_del: set[Point] = set()
        self.counters = EpstCounters()
        self.last_query = QueryStats()

    # ------------------------------------------------------------------ I/O

    def _new_node(self, level: int) -> _Node:
        node = _Node(level)
        if level > 0:
            B = self.params.B
            # F(v) and R(v) are rebuilt only from children that were just read
            node.F = ChildSummary(self.store)
            node.R = TopPrefix(self.store, B, keep_unchanged=True)
        return node

    def _read_node(self, v: _Node) -> None:
        read = self.store.read
        for bid in v.nb:
            read(bid)

    def _read_S(self, v: _Node) -> None:
        read = self.store.read
        for bid in v.sb:
            read(bid)

    def _save_node(self, v: _Node) -> None:
        if v.is_leaf:
            # a leaf has no buffers and its weight is |S|: the S blocks are
            # the whole node
            if v.nb:
                self.store.free_all(v.nb)
                v.nb = []
            return
        recs = [("meta", v.level, v.weight)]
        recs.extend(zip(v.seps, range(len(v.seps))))
        recs.extend(v.I)
        recs.extend(v.D)
        recs.extend(v.F.catalog)        # F(v)'s slab directory rides along
        v.nb = self.store.write_all(v.nb, recs)

    def _save_S(self, v: _Node) -> None:
        v.sb = self.store.write_all(v.sb, list(v.S))

    def _rebuild_FR(self, v: _Node, drained=()) -> None:
        """Rebuild F(v) and R(v); children in ``drained`` count as having empty I."""
        s_runs = []
        i_recs = []
        srecs = []
        for c in v.children:
            self._read_node(c)
            self._read_S(c)
            s_runs.append([(p[0], p[1], p[2], 1) for p in c.S])
            if c not in drained:
                i_recs.extend((p[0], p[1], p[2], 0) for p in c.I)
            srecs.extend(c.S)
        if v.level == 1:
            # leaf S sets change on every flush and run up to 2B: pack them
            s_runs = [[r for run in s_runs for r in run]]
        v.F.rebuild(s_runs, i_recs)
        v.R.rebuild(srecs)

    def _free_node(self, v: _Node) -> None:
        self.store.free_all(v.nb)
        self.store.free_all(v.sb)
        v.nb, v.sb = [], []
        if v.F is not None:
            v.F.free()
            v.R.free()

    # -------------------------------------------------------------- updates

    def __len__(self) -> int:
        return self.size

    def insert(self, p: Point) -> None:
        """Singleton insert; accumulates into batches of ``batch_cap``."""
        p = Point(*p)
        if p in self._pend_del:
            self._pend_del.discard(p)
        elif p in self._pend_ins:
            raise DuplicatePoint(p)
        else:
            self._pend_ins.add(p)
            if len(self._pend_ins) >= self.params.batch_cap:
                self._drain_inserts()
        self.size += 1

    def delete(self, p: Point) -> None:
        p = Point(*p)
        if p in self._pend_ins:
            self._pend_ins.discard(p)
        elif p in self._pend_del:
            raise AbsentPoint(p)
        else:
            self._pend_del.add(p)
            if len(self._pend_del) >= self.params.batch_cap:
                self._drain_deletes()
        self.size -= 1

    def update_many(self, deletes=(), inserts=()) -> None:
        """Stage many updates at once and push them in large batches.

        Used by structures that own EPSTs and receive updates in bursts: the
        burst goes down in batches of up to a quarter of the buffer capacity
        rather than ``batch_cap``, which saves one root visit per batch.
        """
        for p in deletes:
            self._stage_delete(Point(*p))
        for p in inserts:
            self._stage_insert(Point(*p))
        cap = self.params.batch_cap
        if len(self._pend_del) >= cap or len(self._pend_ins) >= cap:
            self._drain_chunked()

    def _stage_insert(self, p: Point) -> None:
        if p in self._pend_del:
            self._pend_del.discard(p)
        elif p in self._pend_ins:
            raise DuplicatePoint(p)
        else:
            self._pend_ins.add(p)
        self.size += 1

    def _stage_delete(self, p: Point) -> None:
        if p in self._pend_ins:
            self._pend_ins.discard(p)
        elif p in self._pend_del:
            raise AbsentPoint(p)
        else:
            self._pend_del.add(p)
        self.size -= 1

    def _drain_chunked(self) -> None:
        chunk = max(self.params.batch_cap, self.params.buffer_cap // 4)
        dels, self._pend_del = list(self._pend_del), set()
        ins, self._pend_ins = list(self._pend_ins), set()
        for i in range(0, len(dels), chunk):
            self._batch_delete(dels[i:i + chunk])
        for i in range(0, len(ins), chunk):
            self._batch_insert(ins[i:i + chunk])

    def sync(self) -> None:
        """Push any partially filled singleton batches into the tree."""
        self._drain_inserts()

    def _drain_inserts(self) -> None:
        # deletes first: a pending delete may target an older record that
        # shares its (x, id) with a pending insert
        self._drain_deletes()
        if self._pend_ins:
            batch, self._pend_ins = list(self._pend_ins), set()
            self._batch_insert(batch)

    def _drain_deletes(self) -> None:
        if self._pend_del:
            batch, self._pend_del = list(self._pend_del), set()
            self._batch_delete(batch)

    def batch_insert(self, pts) -> None:
        pts = [Point(*p) for p in pts]
        if len(pts) > self.params.batch_cap:
            raise ValueError(f"batch larger than batch_cap={self.params.batch_cap}")
        self._batch_insert(pts)
        self.size += len(pts)

    def batch_delete(self, pts) -> None:
        pts = [Point(*p) for p in pts]
        if len(pts) > self.params.batch_cap:
            raise ValueError(f"batch larger than batch_cap={self.params.batch_cap}")
        self._batch_delete(pts)
        self.size -= len(pts)

    def _batch_insert(self, pts: list[Point]) -> None:
        root = self.root
        self._read_node(root)
        self._read_S(root)
        fresh = []
        for p in pts:
            if p in root.D:
                # identical copy still stored below: resurrect it
                root.D.discard(p)
            elif p in root.S or p in root.I:
                raise DuplicatePoint(p)
            else:
                fresh.append(p)
        root.weight += len(fresh)
        if self._merge_into(root, fresh):
            self._save_S(root)
        self._save_node(root)
        if root.I and len(root.I) >= self.params.buffer_cap:
            self._flush_insert(root, [])
        self._split_root_if_heavy()

    def _merge_into(self, v: _Node, pts) -> bool:
        """S(v) <- B highest of S(v) + pts, the rest joining I(v). Leaves keep all.

        While anything is stored below v, only points above min S(v) may enter
        S(v): everything below v lies under that minimum. Returns whether S(v)
        changed.
        """
        if v.is_leaf:
            for p in pts:
                if p in v.S:
                    raise DuplicatePoint(p)
                v.S.add(p)
            return bool(pts)
        if not pts:
            return False
        B = self.params.B
        below = v.weight - len(v.S) - len(v.I) - len(pts) > 0 or v.I
        if below and v.S:
            floor = min((p[1], p[2]) for p in v.S)
            up = [p for p in pts if (p[1], p[2]) > floor]
            down = [p for p in pts if (p[1], p[2]) < floor]
        elif below:
            up, down = [], list(pts)
        else:
            up, down = list(pts), []
        if not up and len(v.S) <= B:
            for p in down:
                if p in v.I:
                    raise DuplicatePoint(p)
                v.I.add(p)
            return False
        merged = list(v.S)
        merged.extend(up)
        if len(merged) > B:
            merged.sort(key=lambda p: (p[1], p[2]), reverse=True)
            down.extend(merged[B:])
            merged = merged[:B]
        v.S = set(merged)
        for p in down:
            if p in v.I:
                raise DuplicatePoint(p)
            v.I.add(p)
        return True

    def _partition(self, v: _Node, pts) -> dict[int, list[Point]]:
        groups: dict[int, list[Point]] = {}
        seps = v.seps
        for p in pts:
            groups.setdefault(bisect_right(seps, (p[0], p[2])), []).append(p)
        return groups

    def _flush_insert(self, v: _Node, path: list[_Node]) -> None:
        """Distribute the full I(v) to the children of v."""
        self.counters.flushes_insert += 1
        groups = self._partition(v, v.I)
        v.I = set()
        overfull = []
        cancelled = 0
        for j, pts in groups.items():
            c = v.children[j]
            self._read_node(c)
            self._read_S(c)
            keep = []
            for p in pts:
                if p in c.D:
                    c.D.discard(p)
                    cancelled += 1
                else:
                    keep.append(p)
            c.weight += len(keep)
            s_changed = self._merge_into(c, keep)
            self._save_node(c)
            if s_changed:
                self._save_S(c)
            if not c.is_leaf and len(c.I) >= self.params.buffer_cap:
                overfull.append(c)
        if cancelled:
            v.weight -= cancelled
            for w in path:
                w.weight -= cancelled
        # F(v) is rebuilt while the children are still cached; an overfull
        # child is about to hand its whole I buffer down, leaving its S intact
        self._rebuild_FR(v, drained=overfull)
        self._save_node(v)
        sub = path + [v]
        for c in overfull:
            self._flush_insert(c, sub)
        self._split_heavy_children(v, path)

    def _batch_delete(self, pts: list[Point]) -> None:
        root = self.root
        self._read_node(root)
        self._read_S(root)
        removed = 0
        s_before = len(root.S)
        for p in pts:
            if p in root.S:
                root.S.discard(p)
                removed += 1
            elif p in root.I:
                root.I.discard(p)
                removed += 1
            elif root.is_leaf or p in root.D:
                raise AbsentPoint(p)
            else:
                root.D.add(p)
        root.weight -= removed
        self._save_node(root)
        if len(root.S) != s_before:
            self._save_S(root)
        if not root.is_leaf:
            if len(root.D) >= self.params.buffer_cap:
                self._flush_delete(root, [])
            if len(root.S) < self.params.B / 2:
                self._refill(root, [])

    def _flush_delete(self, v: _Node, path: list[_Node]) -> None:
        """Distribute the full D(v) to the children, cancelling what it finds."""
        self.counters.flushes_delete += 1
        groups = self._partition(v, v.D)
        v.D = set()
        overfull = []
        touched = []
        removed_total = 0
        for j, pts in groups.items():
            c = v.children[j]
            self._read_node(c)
            self._read_S(c)
            removed = 0
            s_before = len(c.S)
            for p in pts:
                if p in c.S:
                    c.S.discard(p)
                    removed += 1
                elif p in c.I:
                    c.I.discard(p)
                    removed += 1
                elif c.is_leaf or p in c.D:
                    raise AbsentPoint(p)
                else:
                    c.D.add(p)
            c.weight -= removed
            removed_total += removed
            self._save_node(c)
            if len(c.S) != s_before:
                self._save_S(c)
            touched.append(c)
            if not c.is_leaf and len(c.D) >= self.params.buffer_cap:
                overfull.append(c)
        if removed_total:
            v.weight -= removed_total
            for w in path:
                w.weight -= removed_total
        self._rebuild_FR(v)
        self._save_node(v)
        sub = path + [v]
        for c in overfull:
            self._flush_delete(c, sub)
        half = self.params.B / 2
        for c in touched:
            if not c.is_leaf and len(c.S) < half:
                self._refill(c, sub)

    def _refill(self, w: _Node, path: list[_Node]) -> None:
        """Top S(w) back up from I(w) and the children's S sets."""
        if w.is_leaf:
            return
        B = self.params.B
        half = B / 2
        parent = path[-1] if path else None
        while len(w.S) < half:
            self._read_node(w)
            self._read_S(w)
            cand = w.R.top_by_y(B)
            cand.extend(w.I)
            if not cand:
                break
            self.counters.refills += 1
            cand.sort(key=lambda p: (p[1], p[2]), reverse=True)
            need = B - len(w.S)
            donors: dict[int, _Node] = {}
            gone = 0
            for p in cand[:need]:
                drained = False
                if p in w.I:
                    w.I.discard(p)
                else:
                    j = bisect_right(w.seps, (p[0], p[2]))
                    c = w.children[j]
                    if j not in donors:
                        self._read_node(c)
                        self._read_S(c)
                        donors[j] = c
                    c.S.discard(p)
                    c.weight -= 1
                    # c's subtree below S(c) may outrank the next candidates
                    drained = not c.S and c.weight > 0
                if p in w.D:
                    w.D.discard(p)
                    gone += 1
                else:
                    w.S.add(p)
                if drained:
                    break
            if gone:
                w.weight -= gone
                for a in path:
                    a.weight -= gone
            for c in donors.values():
                self._save_S(c)
                self._save_node(c)
            self._save_S(w)
            self._rebuild_FR(w)
            self._save_node(w)
            if parent is not None:
                self._rebuild_FR(parent)
                self._save_node(parent)
            sub = path + [w]
            for c in donors.values():
                if not c.is_leaf and len(c.S) < half:
                    self._refill(c, sub)

    # ------------------------------------------------------------ splitting

    def _split_root_if_heavy(self) -> None:
        root = self.root
        if root.weight < self.params.split_weight(root.level):
            return
        if not root.is_leaf and len(root.children) < 2:
            return
        new_root = self._new_node(root.level + 1)
        new_root.children = [root]
        new_root.weight = root.weight
        self.root = new_root
        self._split_child(new_root, 0, [])
        self._save_node(new_root)
        self._save_S(new_root)
        self._refill(new_root, [])
        self._split_root_if_heavy()

    def _split_heavy_children(self, v: _Node, path: list[_Node]) -> None:
        p = self.params
        j = 0
        while j < len(v.children):
            c = v.children[j]
            if c.weight >= p.split_weight(c.level) and (c.is_leaf or len(c.children) >= 2):
                self._split_child(v, j, path)
                continue        # re-examine both halves
            j += 1

    def _split_child(self, v: _Node, j: int, path: list[_Node]) -> None:
        """Split v's j-th child u into two nodes at the weight median."""
        self.counters.splits += 1
        u = v.children[j]
        self._read_node(u)
        self._read_S(u)
        right = self._new_node(u.level)
        if u.is_leaf:
            pts = sorted(u.S, key=lambda p: (p[0], p[2]))
            mid = len(pts) // 2
            key = lambda q: (q[0], q[2])
            while 0 < mid < len(pts) and key(pts[mid - 1]) == key(pts[mid]):
                mid += 1
            if mid >= len(pts):
                mid = len(pts) // 2
                while mid > 1 and key(pts[mid - 1]) == key(pts[mid]):
                    mid -= 1
            sep = key(pts[mid])
            u.S = set(pts[:mid])
            right.S = set(pts[mid:])
            u.weight, right.weight = len(u.S), len(right.S)
        else:
            total = sum(c.weight for c in u.children)
            acc, k = 0, 0
            while k < len(u.children) - 1 and acc + u.children[k].weight <= total / 2:
                acc += u.children[k].weight
                k += 1
            k = min(max(k, 1), len(u.children) - 1)
            sep = u.seps[k - 1]
            right.children = u.children[k:]
            right.seps = u.seps[k:]
            u.children = u.children[:k]
            u.seps = u.seps[:k - 1]
            for name in ("S", "I", "D"):
                lo, hi = set(), set()
                for p in getattr(u, name):
                    (hi if (p[0], p[2]) >= sep else lo).add(p)
                setattr(u, name, lo)
                setattr(right, name, hi)
            u.weight = sum(c.weight for c in u.children) + len(u.S) + len(u.I)
            right.weight = sum(c.weight for c in right.children) + len(right.S) + len(right.I)
            self._rebuild_FR(u)
            self._rebuild_FR(right)
        v.children.insert(j + 1, right)
        v.seps.insert(j, sep)
        for x in (u, right):
            self._save_node(x)
            self._save_S(x)
        self._rebuild_FR(v)
        self._save_node(v)
        sub = path + [v]
        half = self.params.B / 2
        for x in (u, right):
            if not x.is_leaf and len(x.S) < half:
                self._refill(x, sub)

    # --------------------------------------------------------------- query

    def query3s(self, q) -> list[Point]:
        """Every live point with a <= x <= b and y >= c."""
        a, b, c = q
        st = self.last_query = QueryStats()
        if a > b:
            return []
        out: list[Point] = []
        self._query_tree(a, b, c, out, st)
        if self._pend_del:
            out = [p for p in out if p not in self._pend_del]
        out.extend(filter_3s(list(self._pend_ins), a, b, c))
        res = list(set(out))
        st.reported = len(res)
        return res

    def _del_charge(self, DEL: set, st: QueryStats) -> None:
        n = len(DEL)
        if n > st.del_size_max:
            st.del_size_max = n
        B = self.params.B
        if not self.params.strict_regime and n > B / 4:
            self.store.charge_reads(-(-n // B))

    def _report_path_node(self, v: _Node, DEL: set, a, b, c, out, st) -> None:
        st.path_nodes += 1
        self._read_node(v)
        self._read_S(v)
        self._del_charge(DEL, st)
        hits = filter_3s(list(v.S), a, b, c)
        if v.I:
            hits.extend(filter_3s(list(v.I), a, b, c))
        if DEL:
            hits = [p for p in hits if p not in DEL]
        out.extend(hits)

    @staticmethod
    def _child_sets(v: _Node, DEL: set, IANC: set) -> tuple[set, set]:
        if v.D:
            dnew = v.D - IANC if IANC else v.D
            DEL = DEL | dnew
        if v.I:
            IANC = IANC | v.I
        return DEL, IANC

    def _query_tree(self, a, b, c, out, st) -> None:
        ka, kb = (a, ID_LO), (b, ID_HI)
        v = self.root
        DEL: set = set()
        IANC: set = set()
        while True:
            self._report_path_node(v, DEL, a, b, c, out, st)
            if v.is_leaf:
                return
            ia, ib = v.child_index(ka), v.child_index(kb)
            DEL, IANC = self._child_sets(v, DEL, IANC)
            if ia == ib:
                v = v.children[ia]
                continue
            if ib - ia > 1:
                self._offpath(v, ia + 1, ib - 1, DEL, IANC, a, b, c, out, st)
            self._side_walk(v.children[ia], ka, True, DEL, IANC, a, b, c, out, st)
            self._side_walk(v.children[ib], kb, False, DEL, IANC, a, b, c, out, st)
            return

    def _side_walk(self, v, key, right_side, DEL, IANC, a, b, c, out, st) -> None:
        while True:
            self._report_path_node(v, DEL, a, b, c, out, st)
            if v.is_leaf:
                return
            i = v.child_index(key)
            DEL, IANC = self._child_sets(v, DEL, IANC)
            if right_side and i + 1 < len(v.children):
                self._offpath(v, i + 1, len(v.children) - 1, DEL, IANC, a, b, c, out, st)
            elif not right_side and i > 0:
                self._offpath(v, 0, i - 1, DEL, IANC, a, b, c, out, st)
            v = v.children[i]

    def _offpath(self, v, lo, hi, DELc, IANCc, a, b, c, out, st) -> None:
        """Report children lo..hi of v (x-contained in [a, b]) and below, via F(v)."""
        seps = v.seps
        klo = seps[lo - 1] if lo > 0 else KEY_MIN
        khi = seps[hi] if hi < len(seps) else KEY_MAX
        qa = max(a, klo[0])
        qb = min(b, khi[0])
        recs = v.F.query3s((qa, qb, c))
        half = self.params.B / 2
        s_count: dict[int, int] = {}
        net: dict[int, int] = {}
        for r in recs:
            k = (r[0], r[2])
            if k < klo or k >= khi:
                continue
            j = bisect_right(seps, k)
            if r[3]:
                s_count[j] = s_count.get(j, 0) + 1
            p = Point(r[0], r[1], r[2])
            if p in DELc:
                continue
            out.append(p)
            net[j] = net.get(j, 0) + 1
        for j, cnt in s_count.items():
            if cnt < half:
                continue
            u = v.children[j]
            if u.is_leaf:
                continue
            self._visit(u, DELc, IANCc, net.get(j, 0), cnt, a, b, c, out, st)

    def _visit(self, u, DEL, IANC, net_points, s_points, a, b, c, out, st) -> None:
        st.offpath_visits += 1
        half = self.params.B / 2
        if s_points < half:
            self.counters.charge_violations += 1
        if st.min_s_reported is None or s_points < st.min_s_reported:
            st.min_s_reported = s_points
        if net_points < self.params.B / 4:
            st.weak_visits += 1
        self._read_node(u)
        self._del_charge(DEL, st)
        DELc, IANCc = self._child_sets(u, DEL, IANC)
        self._offpath(u, 0, len(u.children) - 1, DELc, IANCc, a, b, c, out, st)

    # ---------------------------------------------------------- inspection

    def iter_nodes(self):
        stack = [(self.root, 0)]
        while stack:
            v, depth = stack.pop()
            yield v, depth
            stack.extend((c, depth + 1) for c in reversed(v.children))

    def height(self) -> int:
        return self.root.level + 1

    def _collect(self, charged: bool) -> set[Point]:
        # a pending delete at v cancels only copies stored strictly below v;
        # an identical copy re-inserted above it is a separate live record
        out: set[Point] = set()
        stack = [(self.root, frozenset())]
        while stack:
            v, dels = stack.pop()
            if charged:
                self._read_node(v)
                self._read_S(v)
            out |= (v.S - dels)
            out |= (v.I - dels)
            if v.children:
                below = dels | v.D if v.D else dels
                stack.extend((c, below) for c in v.children)
        return (out - self._pend_del) | self._pend_ins

    def live_points(self) -> set[Point]:
        """Every live point, read through the store (charged)."""
        return self._collect(True)

    def peek_points(self) -> set[Point]:
        """Every live point from the in-memory mirror (uncharged; for audits)."""
        return self._collect(False)

    def release(self) -> None:
        """Free every block for good (the tree must not be used afterwards)."""
        for v, _ in list(self.iter_nodes()):
            self._free_node(v)
        self.root = None
        self.size = 0

    def free(self) -> None:
        for v, _ in list(self.iter_nodes()):
            self._free_node(v)
        self.root = self._new_node(0)
        self._save_node(self.root)
        self._save_S(self.root)
        self.size = 0
        self._pend_ins, self._pend_del = set(), set()

    def bulk_load(self, points) -> None:
        """Replace the contents with ``points`` by a bottom-up build."""
        self.free()
        pts = sorted({Point(*p) for p in points}, key=lambda p: (p[0], p[2]))
        if len({(p[0], p[2]) for p in pts}) != len(pts):
            raise DuplicatePoint("repeated (x, id) in bulk load")
        self.size = len(pts)
        if not pts:
            return
        B, f = self.params.B, self.params.fanout
        self._free_node(self.root)
        leaves = []
        for i in range(0, len(pts), B):
            leaf = self._new_node(0)
            leaves.append((leaf, (pts[i][0], pts[i][2])))
        level, nodes = 0, leaves
        while len(nodes) > 1:
            level += 1
            parents = []
            for i in range(0, len(nodes), f):
                group = nodes[i:i + f]
                par = self._new_node(level)
                par.children = [n for n, _ in group]
                par.seps = [k for _, k in group[1:]]
                parents.append((par, group[0][1]))
            nodes = parents
        self.root = nodes[0][0]
        self._assign(self.root, pts)

    def _assign(self, v: _Node, pts: list[Point]) -> None:
        v.weight = len(pts)
        if v.is_leaf:
            v.S = set(pts)
        else:
            B = self.params.B
            by_y = sorted(pts, key=lambda p: (p[1], p[2]), reverse=True)
            v.S = set(by_y[:B])
            rest = sorted(by_y[B:], key=lambda p: (p[0], p[2]))
            groups = self._partition(v, rest)
            for j, c in enumerate(v.children):
                self._assign(c, groups.get(j, []))
            self._rebuild_FR(v)
        self._save_node(v)
        self._save_S(v)

    def block_count(self) -> int:
        total = 0
        for v, _ in self.iter_nodes():
            total += len(v.nb) + len(v.sb)
            if v.F is not None:
                total += v.F.block_count + len(v.R.bids)
        return total

    # ---------------------------------------------------------- invariants

    def check_invariants(self) -> list[str]:
        """Structural audit; returns human-readable violations (empty if sound)."""
        errs: list[str] = []
        p = self.params
        B = p.B
        store = self.store

        def walk(v: _Node, lo, hi, anc_min_s, anc_D: list, depth):
            tag = f"node@depth{depth}/level{v.level}"
            if len(v.S) > 2 * B:
                errs.append(f"{tag}: |S|={len(v.S)} > 2B")
            if len(v.I) >= p.buffer_cap and not v.is_leaf:
                errs.append(f"{tag}: |I|={len(v.I)} >= buffer_cap")
            if len(v.D) >= p.buffer_cap:
                errs.append(f"{tag}: |D|={len(v.D)} >= buffer_cap")
            if v.is_leaf and (v.I or v.D):
                errs.append(f"{tag}: leaf holds buffers")
            if v.is_leaf and len(v.S) > 2 * B:
                errs.append(f"{tag}: leaf holds {len(v.S)} > 2B x-coordinates")
            for q in v.S | v.I | v.D:
                k = (q[0], q[2])
                if not (lo <= k < hi):
                    errs.append(f"{tag}: {q} outside node range")
                    break
            # heap order: nothing at or below v outranks an ancestor's S
            for q in v.S | v.I:
                if anc_min_s is not None and (q[1], q[2]) >= anc_min_s:
                    errs.append(f"{tag}: heap order violated by {q}")
                    break
            # node block mirrors store contents
            recs = [r for bid in v.nb for r in store.peek(bid)]
            if set(r for r in recs if isinstance(r, Point)) != v.I | v.D:
                errs.append(f"{tag}: node block out of sync")
            if set(r for bid in v.sb for r in store.peek(bid)) != v.S:
                errs.append(f"{tag}: S blocks out of sync")
            if not v.is_leaf:
                if len(v.S) < B / 2 and any(ch.S for ch in v.children):
                    errs.append(f"{tag}: |S|<B/2 but a child has S")
                fset = {(r[0], r[1], r[2], r[3]) for r in v.F.peek_points()}
                want = set()
                for ch in v.children:
                    want |= {(q[0], q[1], q[2], 1) for q in ch.S}
                    want |= {(q[0], q[1], q[2], 0) for q in ch.I}
                if fset != want:
                    errs.append(f"{tag}: F content mismatch")
                if not v.F.catalog_consistent():
                    errs.append(f"{tag}: F catalog inconsistent")
                stored = [r for r in recs if not isinstance(r, Point) and len(r) == 4]
                if stored != v.F.catalog:
                    errs.append(f"{tag}: node block holds a stale F catalog")
                sall = set()
                for ch in v.children:
                    sall |= ch.S
                topB = sorted(sall, key=lambda q: (q[1], q[2]), reverse=True)[:B]
                if v.R.peek_points() != topB:
                    errs.append(f"{tag}: R prefix mismatch")
                if len(v.seps) != len(v.children) - 1 or v.seps != sorted(v.seps):
                    errs.append(f"{tag}: bad separators")
                levels = {ch.level for ch in v.children}
                if levels != {v.level - 1}:
                    errs.append(f"{tag}: child levels {levels}")
            sub_w = len(v.S) + len(v.I) + sum(ch.weight for ch in v.children)
            if sub_w != v.weight:
                errs.append(f"{tag}: weight {v.weight} != {sub_w}")
            mins = anc_min_s
            if v.S:
                m = min((q[1], q[2]) for q in v.S)
                mins = m if mins is None else min(mins, m)
            bounds = [lo] + v.seps + [hi]
            for i, ch in enumerate(v.children):
                walk(ch, bounds[i], bounds[i + 1], mins, anc_D + [v.D], depth + 1)

        walk(self.root, KEY_MIN, KEY_MAX, None, [], 0)
        errs.extend(self._check_delete_targets())
        return errs

    def _check_delete_targets(self) -> list[str]:
        """Each pending delete record targets a point stored strictly below it."""
        errs = []

        def subtree_points(v):
            acc = set()
            stack = list(v.children)
            while stack:
                u = stack.pop()
                acc |= u.S | u.I
                stack.extend(u.children)
            return acc

        for v, depth in self.iter_nodes():
            if v.D:
                below = subtree_points(v)
                missing = v.D - below
                if missing:
                    errs.append(f"delete targets: {len(missing)} delete records at depth {depth} "
                                f"without a stored target below")
        return errs
