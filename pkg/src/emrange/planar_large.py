"""Two-dimensional range reporting on a buffered base tree over x.

Every non-root node of the base tree keeps its points in

* ``left`` - a priority search tree on (y, x) answering [a, +inf) x [c, d];
* ``right`` - a priority search tree on (y, -x) answering (-inf, b] x [c, d];
* ``ylist`` - a blocked list in (y, id) order, used to report a whole child.

Leaves keep only the y-list. Updates are buffered: every point enters the
root's insert (or delete) buffer, and *special* nodes - the root and every
internal node whose height is a multiple of the stride above the leaves -
hold buffers of up to ``buffer_cap2`` entries. A full buffer at ``v`` is
applied to the structures of every node of ``v``'s stripe (``v`` and the
non-special nodes below it) and handed over to the buffers of the next
special nodes down.

A query [a, b] x [c, d] descends to the split node ``v``, collects the net
pending insertions/deletions (INS/DEL) from the special nodes on the way and
from the children it is about to query, then reports via the left structure
of the leftmost child, the right structure of the rightmost child, and the
y-lists of the children in between. The wide-fan-out variant replaces the
per-child probe for the middle children by a single query on ``H(v)``, which
holds one point (p.y, successor of p.y in p's child) per stored point.

The base tree grows like a B-tree: a leaf splits above ``2B`` points and an
internal node above ``fanout`` children. A global rebuild reclaims space
after the live set shrinks to a quarter of its peak.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from itertools import count

from ._kernels import filter_2d
from .emstore import BlockStore
from .epst import Epst, EpstParams
from .errors import AbsentPoint, DuplicatePoint
from .geometry import ID_HI, ID_LO, NEG_INF, POS_INF, Point
from .sortedlist import SortedBlockList, ykey

_EPS = 1e-9
_XOFF = 1 << 63
_XMASK = (1 << 64) - 1
WIDE_FACTOR = 16


class Variant(str, Enum):
    CONST_FANOUT = "const"
    WIDE_FANOUT = "wide"


def _ceil(v: float) -> int:
    return int(math.ceil(v - _EPS))


def log_base(n: float, base: float) -> float:
    return math.log(max(n, 2)) / math.log(base)


def wide_fanout(B: int, n0: int) -> int:
    """Theta(log_B N) children per node for the wide variant."""
    return WIDE_FACTOR * max(2, _ceil(log_base(n0, B)))


@dataclass
class TreeShape:
    """Resolved tree parameters shared by the planar structures."""

    B: int
    delta: float
    h: int
    strict_regime: bool
    fanout: int
    buffer_cap2: int
    special_stride: int
    wide: bool
    leaf_cap: int


@dataclass
class PlanarParams:
    B: int
    delta: float = 0.25
    h1: int = 4
    variant: Variant = Variant.CONST_FANOUT
    strict_regime: bool = False
    capacity_hint: int = 1 << 16
    special_stride: int = field(init=False)
    buffer_cap2: int = field(init=False)
    fanout: int = field(init=False)

    def __post_init__(self):
        if not 0 < self.delta <= 0.25:
            raise ValueError("delta must lie in (0, 1/4]")
        if self.B < 4:
            raise ValueError("B must be >= 4")
        self.variant = Variant(self.variant)
        self.special_stride = max(1, _ceil(self.delta * math.log2(self.B) / 3))
        self.buffer_cap2 = max(2, _ceil(self.B ** (2 * self.delta)))
        if self.variant is Variant.CONST_FANOUT:
            self.fanout = 8
        else:
            self.fanout = wide_fanout(self.B, self.capacity_hint)

    def regime_holds(self, n: int) -> bool:
        """True when B^delta >= 4 h1 log2 n, the regime of the query accounting."""
        return self.B ** self.delta >= 4 * self.h1 * math.log2(max(n, 2))

    def shape(self) -> TreeShape:
        return TreeShape(self.B, self.delta, 4, self.strict_regime, self.fanout,
                         self.buffer_cap2, self.special_stride,
                         self.variant is Variant.WIDE_FANOUT, 2 * self.B)


class _PNode:
    __slots__ = ("uid", "height", "parent", "children", "seps", "Ib", "Db",
                 "hb", "left", "right", "ylist", "H")

    def __init__(self, uid: int, height: int):
        self.uid = uid
        self.height = height
        self.parent: _PNode | None = None
        self.children: list[_PNode] = []
        self.seps: list[tuple] = []
        self.Ib: set[Point] = set()
        self.Db: set[Point] = set()
        self.hb: list[int] = []
        self.left: Epst | None = None
        self.right: Epst | None = None
        self.ylist: SortedBlockList | None = None
        self.H: Epst | None = None

    @property
    def is_leaf(self) -> bool:
        return self.height == 0

    def child_index(self, key) -> int:
        return bisect_right(self.seps, key)


@dataclass
class PlanarQueryStats:
    path_nodes: int = 0
    ins_size: int = 0
    del_size: int = 0
    middle_children: int = 0
    reported: int = 0


@dataclass
class PlanarCounters:
    flushes_insert: int = 0
    flushes_delete: int = 0
    node_splits: int = 0
    global_rebuilds: int = 0


def _to_left(p) -> Point:
    return Point(p[1], p[0], p[2])


def _to_right(p) -> Point:
    return Point(p[1], -p[0], p[2])


def _from_left(q) -> Point:
    return Point(q[1], q[0], q[2])


def _from_right(q) -> Point:
    return Point(-q[1], q[0], q[2])


def _xk(p) -> tuple:
    return (p[0], p[2])


def tau_point(p, succ) -> Point:
    """The H-record of p: (p.y, y of p's successor within its child)."""
    return Point(p[1], succ[1] if succ is not None else POS_INF,
                 (p[2] << 64) | (p[0] + _XOFF))


def tau_sentinel(uid: int, first) -> Point:
    """Marks a child whose smallest y is first.y (matches queries below it)."""
    return Point(NEG_INF, first[1], -1 - uid)


def tau_decode(rec) -> Point:
    return Point((rec[2] & _XMASK) - _XOFF, rec[0], rec[2] >> 64)


class PlanarTree:
    """Buffered base tree with per-node three-sided structures and y-lists."""

    def __init__(self, shape: TreeShape, store: BlockStore, capacity_hint: int = 1 << 16):
        if store.B != shape.B:
            raise ValueError("shape.B must match the store's block capacity")
        self.shape = shape
        self.store = store
        self.capacity_hint = max(1, capacity_hint)
        self._uids = count()
        self.size = 0
        self._peak = 0
        self._overfull: set[_PNode] = set()
        self.counters = PlanarCounters()
        self.last_query = PlanarQueryStats()
        self.root = self._new_node(0)
        self.root.ylist = SortedBlockList(store)
        self._save_header(self.root)

    # ------------------------------------------------------------ plumbing

    def _epst(self) -> Epst:
        s = self.shape
        return Epst(EpstParams(s.B, s.delta, s.h, s.strict_regime), self.store)

    def _new_node(self, height: int) -> _PNode:
        return _PNode(next(self._uids), height)

    def _special(self, v: _PNode) -> bool:
        if v is self.root:
            return True
        return not v.is_leaf and (v.height - 1) % self.shape.special_stride == 0

    def _has_header(self, v: _PNode) -> bool:
        return not v.is_leaf or v is self.root

    def _save_header(self, v: _PNode) -> None:
        if not self._has_header(v):
            if v.hb:
                self.store.free_all(v.hb)
                v.hb = []
            return
        recs: list = [("meta", v.uid, v.height, len(v.children))]
        recs.extend(zip(v.seps, (c.uid for c in v.children[1:])))
        recs.extend(v.Ib)
        recs.extend(v.Db)
        v.hb = self.store.write_all(v.hb, recs)

    def _read_header(self, v: _PNode) -> None:
        read = self.store.read
        for bid in v.hb:
            read(bid)

    def _partition(self, v: _PNode, pts) -> dict[int, list]:
        groups: dict[int, list] = {}
        seps = v.seps
        for p in pts:
            groups.setdefault(bisect_right(seps, (p[0], p[2])), []).append(p)
        return groups

    def _build_structs(self, v: _PNode, pts: list) -> None:
        """(Re)build the secondary structures of a non-root node from pts."""
        if v.ylist is None:
            v.ylist = SortedBlockList(self.store)
        v.ylist.rebuild(pts)
        if not v.is_leaf:
            if v.left is None:
                v.left, v.right = self._epst(), self._epst()
            v.left.bulk_load([_to_left(p) for p in pts])
            v.right.bulk_load([_to_right(p) for p in pts])

    def _drop_structs(self, v: _PNode) -> None:
        for name in ("left", "right", "H"):
            s = getattr(v, name)
            if s is not None:
                s.release()
                setattr(v, name, None)
        if v.ylist is not None:
            v.ylist.release()
            v.ylist = None

    # ------------------------------------------------------------- updates

    def __len__(self) -> int:
        return self.size

    def insert(self, p) -> None:
        p = Point(*p)
        root = self.root
        self._read_header(root)
        if p in root.Db:
            root.Db.discard(p)
        elif p in root.Ib:
            raise DuplicatePoint(p)
        else:
            root.Ib.add(p)
        self.size += 1
        self._save_header(root)
        if len(root.Ib) >= self.shape.buffer_cap2:
            self._flush_ins(root)
        self._settle()

    def delete(self, p) -> None:
        p = Point(*p)
        root = self.root
        self._read_header(root)
        if p in root.Ib:
            root.Ib.discard(p)
        elif p in root.Db:
            raise AbsentPoint(p)
        else:
            root.Db.add(p)
        self.size -= 1
        self._save_header(root)
        if len(root.Db) >= self.shape.buffer_cap2:
            self._flush_del(root)
        self._settle()

    def sync(self) -> None:
        """Apply every pending buffer entry to the structures (top-down)."""
        stack = [self.root]
        while stack:
            v = stack.pop()
            if v.Ib:
                self._flush_ins(v)
            if v.Db:
                self._flush_del(v)
            stack.extend(v.children)
        self._settle()

    def _flush_ins(self, v: _PNode) -> None:
        self.counters.flushes_insert += 1
        self._read_header(v)
        batch = list(v.Ib)
        v.Ib = set()
        self._save_header(v)
        self._push_ins(v, batch)

    def _flush_del(self, v: _PNode) -> None:
        self.counters.flushes_delete += 1
        self._read_header(v)
        batch = list(v.Db)
        v.Db = set()
        self._save_header(v)
        self._push_del(v, batch)

    def _push_ins(self, w: _PNode, pts: list) -> None:
        """Apply pts to w's structures, then pass them down the stripe."""
        self._apply_ins(w, pts)
        if w.is_leaf:
            return
        cap = self.shape.buffer_cap2
        for j, part in self._partition(w, pts).items():
            c = w.children[j]
            if c.is_leaf or not self._special(c):
                self._push_ins(c, part)
                continue
            self._read_header(c)
            for p in part:
                if p in c.Db:
                    c.Db.discard(p)
                elif p in c.Ib:
                    raise DuplicatePoint(p)
                else:
                    c.Ib.add(p)
            self._save_header(c)
            if len(c.Ib) >= cap:
                self._flush_ins(c)

    def _push_del(self, w: _PNode, pts: list) -> None:
        self._apply_del(w, pts)
        if w.is_leaf:
            return
        cap = self.shape.buffer_cap2
        for j, part in self._partition(w, pts).items():
            c = w.children[j]
            if c.is_leaf or not self._special(c):
                self._push_del(c, part)
                continue
            self._read_header(c)
            for p in part:
                if p in c.Ib:
                    c.Ib.discard(p)
                elif p in c.Db:
                    raise AbsentPoint(p)
                else:
                    c.Db.add(p)
            self._save_header(c)
            if len(c.Db) >= cap:
                self._flush_del(c)

    def _apply_ins(self, w: _PNode, pts: list) -> None:
        if not pts or w.ylist is None:
            return
        if w.left is not None:
            w.left.update_many(inserts=[_to_left(p) for p in pts])
            w.right.update_many(inserts=[_to_right(p) for p in pts])
        try:
            self._ylist_ins(w, pts)
        except ValueError as exc:
            raise DuplicatePoint(str(exc)) from None
        if w.is_leaf and len(w.ylist) > self.shape.leaf_cap:
            self._overfull.add(w)

    def _apply_del(self, w: _PNode, pts: list) -> None:
        if not pts or w.ylist is None:
            return
        if w.left is not None:
            w.left.update_many(deletes=[_to_left(p) for p in pts])
            w.right.update_many(deletes=[_to_right(p) for p in pts])
        try:
            self._ylist_del(w, pts)
        except KeyError as exc:
            raise AbsentPoint(str(exc)) from None

    # ------------------------------------------------- tau-point upkeep

    def _tau(self, yl: SortedBlockList, p) -> Point:
        return tau_point(p, next(yl.iter_after(ykey(p)), None))

    def _parent_H(self, w: _PNode) -> Epst | None:
        P = w.parent
        return P.H if P is not None else None

    def _ylist_ins(self, w: _PNode, pts: list) -> None:
        yl = w.ylist
        H = self._parent_H(w)
        if H is None:
            yl.insert_many(pts)
            return
        pts = sorted(pts, key=ykey)
        old_min = yl.min()
        before: dict = {}
        for p in pts:
            q = yl.predecessor(ykey(p))
            if q is not None and q not in before:
                before[q] = self._tau(yl, q)
        yl.insert_many(pts)
        for q, t in before.items():
            t2 = self._tau(yl, q)
            if t2 != t:
                H.delete(t)
                H.insert(t2)
        for p in pts:
            H.insert(self._tau(yl, p))
        self._fix_sentinel(H, w, old_min, yl.min())

    def _ylist_del(self, w: _PNode, pts: list) -> None:
        yl = w.ylist
        H = self._parent_H(w)
        if H is None:
            yl.delete_many(pts)
            return
        pts = sorted(pts, key=ykey)
        gone = set(pts)
        old_min = yl.min()
        before: dict = {}
        for p in pts:
            if p not in before:
                before[p] = self._tau(yl, p)
            q = yl.predecessor(ykey(p))
            if q is not None and q not in gone and q not in before:
                before[q] = self._tau(yl, q)
        yl.delete_many(pts)
        for q, t in before.items():
            if q in gone:
                H.delete(t)
                continue
            t2 = self._tau(yl, q)
            if t2 != t:
                H.delete(t)
                H.insert(t2)
        self._fix_sentinel(H, w, old_min, yl.min())

    @staticmethod
    def _fix_sentinel(H: Epst, w: _PNode, old_min, new_min) -> None:
        if old_min == new_min:
            return
        if old_min is not None:
            H.delete(tau_sentinel(w.uid, old_min))
        if new_min is not None:
            H.insert(tau_sentinel(w.uid, new_min))

    def _tau_records(self, v: _PNode, charged: bool = True) -> list[Point]:
        recs: list[Point] = []
        for c in v.children:
            pts = c.ylist.read_all() if charged else list(c.ylist)
            if pts:
                recs.append(tau_sentinel(c.uid, pts[0]))
            for i, p in enumerate(pts):
                recs.append(tau_point(p, pts[i + 1] if i + 1 < len(pts) else None))
        return recs

    def _rebuild_H(self, v: _PNode) -> None:
        if not self.shape.wide or v.is_leaf:
            return
        if v.H is None:
            v.H = self._epst()
        v.H.bulk_load(self._tau_records(v))

    # ----------------------------------------------------------- splitting

    def _settle(self) -> None:
        while self._overfull:
            w = min(self._overfull, key=lambda n: n.height)
            self._overfull.discard(w)
            if w.is_leaf:
                if w.ylist is None or len(w.ylist) <= self.shape.leaf_cap:
                    continue
            elif len(w.children) <= self.shape.fanout:
                continue
            if w is self.root:
                self._split_root()
            elif w.parent is not None:
                self._split_node(w)
        self._maybe_rebuild()

    def _split_node(self, w: _PNode) -> None:
        self.counters.node_splits += 1
        P = w.parent
        j = P.children.index(w)
        w2 = self._new_node(w.height)
        w2.parent = P
        if w.is_leaf:
            pts = sorted(w.ylist.read_all(), key=_xk)
            mid = len(pts) // 2
            sep = _xk(pts[mid])
            w.ylist.rebuild(pts[:mid])
            w2.ylist = SortedBlockList(self.store, records=pts[mid:])
        else:
            self._read_header(w)
            k = len(w.children) // 2
            sep = w.seps[k - 1]
            w2.children, w.children = w.children[k:], w.children[:k]
            w2.seps, w.seps = w.seps[k:], w.seps[:k - 1]
            for c in w2.children:
                c.parent = w2
            for name in ("Ib", "Db"):
                lo, hi = set(), set()
                for p in getattr(w, name):
                    (hi if _xk(p) >= sep else lo).add(p)
                setattr(w, name, lo)
                setattr(w2, name, hi)
            pts = w.ylist.read_all()
            lo_pts = [p for p in pts if _xk(p) < sep]
            hi_pts = [p for p in pts if _xk(p) >= sep]
            self._build_structs(w, lo_pts)
            self._build_structs(w2, hi_pts)
            self._rebuild_H(w)
            self._rebuild_H(w2)
            if len(w.children) > self.shape.fanout:
                self._overfull.add(w)
            if len(w2.children) > self.shape.fanout:
                self._overfull.add(w2)
        P.children.insert(j + 1, w2)
        P.seps.insert(j, sep)
        self._save_header(w)
        self._save_header(w2)
        self._save_header(P)
        self._rebuild_H(P)
        if w.is_leaf:
            for x in (w, w2):
                if len(x.ylist) > self.shape.leaf_cap:
                    self._overfull.add(x)
        if len(P.children) > self.shape.fanout:
            self._overfull.add(P)

    def _split_root(self) -> None:
        r = self.root
        R = self._new_node(r.height + 1)
        self._read_header(r)
        R.Ib, R.Db = r.Ib, r.Db
        r.Ib, r.Db = set(), set()
        if not r.is_leaf:
            # the old root had no structures of its own: build them from what
            # has already been handed down to its children
            self._build_structs(r, sorted(self._net_below(r)))
        R.children = [r]
        r.parent = R
        self.root = R
        if self.shape.wide:
            R.H = self._epst()
        self._save_header(r)
        self._save_header(R)
        self._split_node(r)

    def _net_below(self, v: _PNode) -> set:
        """Points handed down from v: the children's contents net of their buffers."""
        out: set = set()
        for c in v.children:
            pts = set(c.ylist.read_all())
            if not c.is_leaf and self._special(c):
                self._read_header(c)
                pts |= c.Ib
                pts -= c.Db
            out |= pts
        return out

    # ----------------------------------------------------- global rebuild

    def _fanout_for(self, n: int) -> int | None:
        """Fan-out a tree holding n points should use; None when fixed."""
        return None

    def _maybe_rebuild(self) -> None:
        if self.size > self._peak:
            self._peak = self.size
        n, n0 = self.size, self.capacity_hint
        if n > 4 * n0 or 4 * n < n0:
            want = self._fanout_for(max(n, 1))
            if want is not None and want != self.shape.fanout:
                self.capacity_hint = max(n, 1)
                self.shape.fanout = want
                self.counters.global_rebuilds += 1
                self.bulk_load(self.live_points())
                return
        if self._peak >= 8 * self.shape.B and 4 * self.size <= self._peak:
            self.counters.global_rebuilds += 1
            self.bulk_load(self.live_points())

    def live_points(self) -> set:
        """Every live point, read through the store."""
        root = self.root
        self._read_header(root)
        if root.is_leaf:
            pts = set(root.ylist.read_all())
        else:
            pts = self._net_below(root)
        return (pts | root.Ib) - root.Db

    def _free_all(self) -> None:
        stack = [self.root]
        while stack:
            v = stack.pop()
            stack.extend(v.children)
            self._drop_structs(v)
            if v.hb:
                self.store.free_all(v.hb)
                v.hb = []

    def bulk_load(self, points) -> None:
        """Replace the contents by a bottom-up build with empty buffers."""
        pts = sorted({Point(*p) for p in points}, key=_xk)
        if len({_xk(p) for p in pts}) != len(pts):
            raise DuplicatePoint("repeated (x, id) in bulk load")
        self._free_all()
        self._overfull.clear()
        s = self.shape
        self.size = len(pts)
        self._peak = len(pts)
        B = s.B
        level: list[tuple[_PNode, list]] = []
        for i in range(0, max(len(pts), 1), B):
            level.append((self._new_node(0), pts[i:i + B]))
        group = max(2, (3 * s.fanout) // 4)
        parts: dict[int, list] = {}
        height = 0
        while len(level) > 1:
            height += 1
            cuts = list(range(0, len(level), group))
            if len(level) - cuts[-1] == 1 and len(cuts) > 1 and group < s.fanout:
                cuts.pop()  # fold a lone trailing child into the previous parent
            bounds = cuts + [len(level)]
            nxt = []
            for lo, hi in zip(bounds, bounds[1:]):
                chunk = level[lo:hi]
                node = self._new_node(height)
                node.children = [c for c, _ in chunk]
                node.seps = [_xk(cp[0]) for _, cp in chunk[1:]]
                for c in node.children:
                    c.parent = node
                parts[node.uid] = [cp for _, cp in chunk]
                nxt.append((node, [p for _, cp in chunk for p in cp]))
            level = nxt
        self.root, root_pts = level[0]
        self.root.parent = None
        self._build_tree(self.root, root_pts, parts)

    def _build_tree(self, v: _PNode, pts: list, parts: dict) -> None:
        if v.is_leaf:
            v.ylist = SortedBlockList(self.store, records=pts)
        elif v is not self.root:
            self._build_structs(v, pts)
        if not v.is_leaf:
            for c, cp in zip(v.children, parts[v.uid]):
                self._build_tree(c, cp, parts)
        self._rebuild_H(v)
        self._save_header(v)

    # --------------------------------------------------------------- query

    def query2d(self, a: int, b: int, c: int, d: int) -> list[Point]:
        """Every live point with a <= x <= b and c <= y <= d."""
        st = self.last_query = PlanarQueryStats()
        if a > b or c > d:
            return []
        ka, kb = (a, ID_LO), (b, ID_HI)
        ylo, yhi = (c, ID_LO), (d, ID_HI)
        seen: set = set()
        INS: set = set()
        DEL: set = set()

        def absorb(u: _PNode) -> None:
            for p in u.Ib:
                if p not in seen:
                    seen.add(p)
                    INS.add(p)
            for p in u.Db:
                if p not in seen:
                    seen.add(p)
                    DEL.add(p)

        v = self.root
        self._read_header(v)
        absorb(v)
        st.path_nodes = 1
        found: list = []
        while True:
            if v.is_leaf:
                found = filter_2d(v.ylist.range(ylo, yhi), a, b, c, d)
                break
            i, j = v.child_index(ka), v.child_index(kb)
            if i == j:
                v = v.children[i]
                st.path_nodes += 1
                if self._has_header(v):
                    self._read_header(v)
                    if self._special(v):
                        absorb(v)
                continue
            kids = v.children
            for t in range(i, j + 1):
                u = kids[t]
                if not u.is_leaf and self._special(u):
                    self._read_header(u)
                    absorb(u)
            found = self._report_children(v, i, j, a, b, c, d, ylo, yhi, st)
            break
        n_pending = len(INS) + len(DEL)
        st.ins_size, st.del_size = len(INS), len(DEL)
        B = self.shape.B
        if not self.shape.strict_regime and n_pending > B / 4:
            self.store.charge_reads(-(-n_pending // B))
        res = {p for p in found if p not in DEL}
        res.update(filter_2d(list(INS), a, b, c, d))
        out = list(res)
        st.reported = len(out)
        return out

    def _report_children(self, v, i, j, a, b, c, d, ylo, yhi, st) -> list:
        kids = v.children
        out: list = []
        u = kids[i]
        if u.is_leaf:
            out.extend(filter_2d(u.ylist.range(ylo, yhi), a, POS_INF, c, d))
        else:
            out.extend(_from_left(q) for q in u.left.query3s((c, d, a)))
        u = kids[j]
        if u.is_leaf:
            out.extend(filter_2d(u.ylist.range(ylo, yhi), NEG_INF, b, c, d))
        else:
            out.extend(_from_right(q) for q in u.right.query3s((c, d, -b)))
        if j - i < 2:
            return out
        st.middle_children = j - i - 1
        if v.H is None:
            for t in range(i + 1, j):
                out.extend(kids[t].ylist.range(ylo, yhi))
        else:
            self._middle_wide(v, i, j, c, d, out)
        return out

    def h_query(self, v: _PNode, c: int) -> tuple[dict[int, Point], list[int]]:
        """Per child: the stored p with p.y <= c < y of p's successor.

        Returns (boundary points by child index, indexes of children whose
        every point lies above c).
        """
        uid_at = {ch.uid: t for t, ch in enumerate(v.children)}
        boundary: dict[int, Point] = {}
        fresh: list[int] = []
        for rec in v.H.query3s((NEG_INF, c, c + 1)):
            if rec[2] < 0:
                t = uid_at.get(-1 - rec[2])
                if t is not None:
                    fresh.append(t)
            else:
                p = tau_decode(rec)
                boundary[v.child_index(_xk(p))] = p
        return boundary, sorted(fresh)

    def _middle_wide(self, v, i, j, c, d, out) -> None:
        boundary, fresh = self.h_query(v, c - 1)
        kids = v.children
        starts = [(t, None) for t in fresh if i < t < j]
        starts.extend((t, p) for t, p in boundary.items() if i < t < j)
        for t, p in starts:
            yl = kids[t].ylist
            it = yl.iter_from((ID_LO, ID_LO)) if p is None else yl.iter_after(ykey(p))
            for q in it:
                if q[1] > d:
                    break
                out.append(q)

    # ---------------------------------------------------------- inspection

    def iter_nodes(self):
        stack = [(self.root, 0)]
        while stack:
            v, depth = stack.pop()
            yield v, depth
            stack.extend((c, depth + 1) for c in reversed(v.children))

    def height(self) -> int:
        return self.root.height + 1

    def block_count(self) -> int:
        return self.store.io_stats().live_blocks

    def stripe(self, v: _PNode) -> tuple[list[_PNode], list[_PNode]]:
        """(subset(v), desc(v)): v's stripe and its direct special descendants."""
        subset, desc, frontier = [v], [], [v]
        while frontier:
            u = frontier.pop()
            for c in u.children:
                if c.is_leaf or not self._special(c):
                    subset.append(c)
                    frontier.append(c)
                else:
                    desc.append(c)
        return subset, desc

    def check_invariants(self, deep: bool = False) -> list[str]:
        """Structural audit from in-memory mirrors (uncharged)."""
        errs: list[str] = []
        s = self.shape

        def content(u: _PNode) -> set:
            return set(u.ylist) if u.ylist is not None else set()

        def walk(v: _PNode, lo, hi, applied: set | None, anc_ins: set, depth: int):
            tag = f"node@depth{depth}/h{v.height}"
            if len(v.Ib) >= s.buffer_cap2 or len(v.Db) >= s.buffer_cap2:
                errs.append(f"{tag}: buffer over capacity")
            if v.Ib & v.Db:
                errs.append(f"{tag}: a point sits in both buffers")
            if (v.Ib or v.Db) and not self._special(v):
                errs.append(f"{tag}: buffers on a non-special node")
            if not v.is_leaf and len(v.children) > s.fanout:
                errs.append(f"{tag}: {len(v.children)} children > fanout")
            for p in v.Ib | v.Db:
                if not (lo <= _xk(p) < hi):
                    errs.append(f"{tag}: buffered {p} outside node range")
                    break
            has = v is not self.root or v.is_leaf
            mine = content(v) if has else None
            if has:
                for p in mine:
                    if not (lo <= _xk(p) < hi):
                        errs.append(f"{tag}: stored {p} outside node range")
                        break
                if mine & anc_ins:
                    errs.append(f"{tag}: point both stored and pending above")
                if v.left is not None:
                    if {_from_left(q) for q in v.left.peek_points()} != mine:
                        errs.append(f"{tag}: left structure differs from y-list")
                    if {_from_right(q) for q in v.right.peek_points()} != mine:
                        errs.append(f"{tag}: right structure differs from y-list")
                    if deep:
                        for name in ("left", "right"):
                            sub = getattr(v, name).check_invariants()
                            if sub:
                                errs.append(f"{tag}: {name}: {sub[0]}")
                elif not v.is_leaf:
                    errs.append(f"{tag}: internal node without structures")
                errs.extend(f"{tag}: y-list: {e}" for e in v.ylist.check())
                if v.is_leaf and len(v.ylist) > s.leaf_cap:
                    errs.append(f"{tag}: leaf holds {len(v.ylist)} > {s.leaf_cap}")
            if applied is not None and has:
                if self._special(v) and not v.is_leaf:
                    want = (applied - v.Ib) | v.Db
                    if not v.Ib <= applied:
                        errs.append(f"{tag}: pending insert not applied above")
                    if v.Db & applied:
                        errs.append(f"{tag}: pending delete already applied above")
                else:
                    want = applied
                if mine != want:
                    errs.append(f"{tag}: content differs from parent's by "
                                f"{len(mine ^ want)} points")
            if v.Db and has and not v.Db <= mine:
                errs.append(f"{tag}: pending delete of a point not stored")
            if s.wide and not v.is_leaf:
                if v.H is None:
                    errs.append(f"{tag}: missing H")
                elif v.H.peek_points() != set(self._tau_records(v, charged=False)):
                    errs.append(f"{tag}: H out of step with the children's y-lists")
            if not v.is_leaf:
                if len(v.seps) != len(v.children) - 1 or v.seps != sorted(v.seps):
                    errs.append(f"{tag}: bad separators")
                if {c.height for c in v.children} != {v.height - 1}:
                    errs.append(f"{tag}: uneven child heights")
                bounds = [lo] + v.seps + [hi]
                for t, c in enumerate(v.children):
                    if c.parent is not v:
                        errs.append(f"{tag}: stale parent pointer")
                    sub_applied = None
                    if mine is not None:
                        sub_applied = {p for p in mine
                                       if bounds[t] <= _xk(p) < bounds[t + 1]}
                    walk(c, bounds[t], bounds[t + 1], sub_applied,
                         anc_ins | v.Ib, depth + 1)

        walk(self.root, (ID_LO, ID_LO), (ID_HI, ID_HI), None, set(), 0)
        return errs


class PlanarLarge(PlanarTree):
    """Buffered two-dimensional structure with O(1) amortized updates."""

    def __init__(self, params: PlanarParams, store: BlockStore):
        self.params = params
        super().__init__(params.shape(), store, params.capacity_hint)

    def _fanout_for(self, n: int) -> int | None:
        if self.params.variant is Variant.WIDE_FANOUT:
            return wide_fanout(self.params.B, n)
        return None

    def regime_holds(self) -> bool:
        return self.params.regime_holds(max(self.size, 2))
