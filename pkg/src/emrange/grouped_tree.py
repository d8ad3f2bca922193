"""Range tree with fan-out B^eps' and group-compressed child-interval lists.

Every internal node ``v`` keeps its points ``L(v)`` three ways:

* ``E(v)`` - a blocked y-ordered list of all of ``L(v)`` (one-reporting on y);
* groups - ``L(v)`` cut into y-contiguous runs, each with a
  :class:`GroupIndex` answering four-sided queries on the run;
* mixed lists - for every child interval ``i..j`` a y-ordered list holding,
  per group, either the group's points that live in children ``i..j`` or a
  single reference ``(group, min y, max y)`` to the group.

A group's share of children ``i..j`` is materialized while small and replaced
by a reference once it reaches ``2B`` points; a reference turns back into
points once the share drops below ``B``, so that a reference crossed in the
middle of a walk always pays for itself with at least ``B`` reported points.

A query [a, b] x [c, d] is decomposed into O(height) (node, child interval)
pairs covering exactly the points with x in [a, b]. Each pair is answered by
locating one element of its mixed list inside [c, d] and walking outward in
both y-directions, expanding crossed references through their group index.
When no element falls inside [c, d], all of ``L(v)``'s points in the y-range
share one group; ``E(v)`` finds a witness and that group's index answers.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import count

from ._kernels import filter_2d
from .corner import CornerStructure
from .emstore import BlockStore
from .errors import AbsentPoint, DuplicatePoint
from .geometry import ID_HI, ID_LO, KEY_MAX, KEY_MIN, NEG_INF, POS_INF, Point
from .sortedlist import SortedBlockList, ykey

_EPS = 1e-9


def _ceil(v: float) -> int:
    return int(math.ceil(v - _EPS))


@dataclass
class GroupedParams:
    B: int
    eps: float = 0.5
    capacity_hint: int = 1 << 16
    eps_prime: float = field(init=False)
    fanout: int = field(init=False)
    group_lo: int = field(init=False)
    group_hi: int = field(init=False)
    point_lo: int = field(init=False)
    point_hi: int = field(init=False)
    split_size: int = field(init=False)

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.B < 4:
            raise ValueError("B must be >= 4")
        B, e = self.B, self.eps / 10
        self.eps_prime = e
        self.fanout = max(2, _ceil(B ** e))
        g = _ceil(B ** (1 + 2 * e))
        self.group_lo = _ceil(g / 2)
        self.group_hi = 2 * g
        self.point_lo = _ceil(B / 2)
        self.point_hi = 2 * B
        lg = math.log2(max(self.capacity_hint, 2))
        self.split_size = 2 * B * _ceil(lg ** (1 + 2 * e))

    @property
    def split_trigger(self) -> int:
        """Group size at which a group is cut in two."""
        return min(self.group_hi, self.split_size)

    @property
    def demote_below(self) -> int:
        """A reference whose share falls below this turns back into points."""
        return self.B

    @property
    def max_children(self) -> int:
        return 2 * self.fanout - 1


# ---------------------------------------------------------------- group index

class GroupIndex:
    """Four-sided reporting on one group.

    The group's points, sorted by y, are halved recursively until runs of at
    most ``2B`` points remain. Each halving keeps a three-sided structure on
    the lower half (open upwards) and one on the upper half (open downwards),
    so a query whose y-range straddles a halving point costs two three-sided
    queries. Updates collect in a one-block pending buffer; a full buffer
    triggers a rebuild.
    """

    __slots__ = ("store", "B", "pts", "base_bids", "dir_bids", "pend_bid",
                 "ins", "dels", "tree", "_cs")

    def __init__(self, store: BlockStore, pts=()):
        self.store = store
        self.B = store.B
        self.pts: list[Point] = []
        self.base_bids: list[int] = []
        self.dir_bids: list[int] = []
        self.pend_bid = store.alloc()
        self.ins: set[Point] = set()
        self.dels: set[Point] = set()
        self.tree = None
        self._cs: list[CornerStructure] = []
        self.rebuild(pts)

    def __len__(self) -> int:
        return len(self.pts) + len(self.ins) - len(self.dels)

    def _free_tree(self) -> None:
        for cs in self._cs:
            cs.free()
        self._cs = []

    def rebuild(self, pts) -> None:
        pts = sorted(pts, key=ykey)
        store = self.store
        self._free_tree()
        self.pts = pts
        self.base_bids = store.write_all(self.base_bids, pts)
        leaf = 2 * self.B
        directory: list = []

        def build(lo, hi):
            if hi - lo <= leaf:
                directory.append((lo, hi))
                return (lo, hi)
            mid = (lo + hi) // 2
            low = CornerStructure.build(pts[lo:mid], store, capacity=mid - lo)
            high = CornerStructure.build(
                [Point(p[0], -p[1], p[2]) for p in pts[mid:hi]], store,
                capacity=hi - mid)
            self._cs.extend((low, high))
            directory.append((lo, hi, ykey(pts[mid])))
            return (ykey(pts[mid]), low, high, build(lo, mid), build(mid, hi))

        self.tree = build(0, len(pts))
        self.dir_bids = store.write_all(self.dir_bids, directory)
        self.ins, self.dels = set(), set()
        store.write(self.pend_bid, [])

    def _save_pending(self) -> None:
        self.store.write(self.pend_bid, list(self.ins) + list(self.dels))
        if len(self.ins) + len(self.dels) >= self.B:
            self.rebuild(self.all_points())

    def insert(self, p: Point) -> None:
        self.store.read(self.pend_bid)
        if p in self.dels:
            self.dels.discard(p)
        else:
            self.ins.add(p)
        self._save_pending()

    def delete(self, p: Point) -> None:
        self.store.read(self.pend_bid)
        if p in self.ins:
            self.ins.discard(p)
        else:
            self.dels.add(p)
        self._save_pending()

    def all_points(self) -> list[Point]:
        """The group's points (charged), sorted by y."""
        self.store.read_all(self.base_bids)
        self.store.read(self.pend_bid)
        return self._merged()

    def peek_points(self) -> list[Point]:
        return self._merged()

    def _merged(self) -> list[Point]:
        if not self.ins and not self.dels:
            return list(self.pts)
        out = [p for p in self.pts if p not in self.dels]
        out.extend(self.ins)
        out.sort(key=ykey)
        return out

    def query(self, a: int, b: int, c: int, d: int) -> list[Point]:
        """Points with a <= x <= b and c <= y <= d."""
        store = self.store
        for bid in self.dir_bids:
            store.read(bid)
        store.read(self.pend_bid)
        out: list[Point] = []
        if a <= b and c <= d and self.pts:
            lo, hi = (c, ID_LO), (d, ID_HI)
            node = self.tree
            B = self.B
            while len(node) == 5:
                split, low, high, left, right = node
                if hi < split:
                    node = left
                elif lo >= split:
                    node = right
                else:
                    out.extend(low.query3s((a, b, c)))
                    out.extend(Point(q[0], -q[1], q[2])
                               for q in high.query3s((a, b, -d)))
                    break
            else:
                s, e = node
                if e > s:
                    for bid in self.base_bids[s // B:(e - 1) // B + 1]:
                        store.read(bid)
                    out = filter_2d(self.pts[s:e], a, b, c, d)
        if self.dels:
            out = [p for p in out if p not in self.dels]
        if self.ins:
            out.extend(filter_2d(list(self.ins), a, b, c, d))
        return out

    def free(self) -> None:
        self._free_tree()
        store = self.store
        store.free_all(self.base_bids)
        store.free_all(self.dir_bids)
        store.free(self.pend_bid)
        self.base_bids, self.dir_bids = [], []
        self.pts, self.ins, self.dels = [], set(), set()

    @property
    def block_count(self) -> int:
        return (len(self.base_bids) + len(self.dir_bids) + 1
                + sum(cs.block_count for cs in self._cs))


# ----------------------------------------------------------- mixed elements

def is_ref(e) -> bool:
    return len(e) == 4


def make_ref(gid: int, lo: tuple, hi: tuple) -> tuple:
    """A group reference: (tag, group id, min y-key, max y-key)."""
    return ("ref", gid, lo, hi)


def elem_key(e) -> tuple:
    return e[2] if len(e) == 4 else (e[1], e[2])


def elem_max(e) -> tuple:
    return e[3] if len(e) == 4 else (e[1], e[2])


def one_report(index: SortedBlockList, c, d):
    """Some element of ``index`` whose key lies in [c, d], or None."""
    return index.one_report(c, d)


# --------------------------------------------------------------------- nodes

class _Group:
    __slots__ = ("gid", "index", "counts", "refs")

    def __init__(self, gid: int, index: GroupIndex, counts: list[int]):
        self.gid = gid
        self.index = index
        self.counts = counts
        self.refs: dict[tuple[int, int], tuple] = {}

    def share(self, i: int, j: int) -> int:
        return sum(self.counts[i:j + 1])


class _GNode:
    __slots__ = ("uid", "height", "parent", "children", "seps", "hb",
                 "E", "groups", "lows", "lists", "ylist")

    def __init__(self, uid: int, height: int):
        self.uid = uid
        self.height = height
        self.parent: _GNode | None = None
        self.children: list[_GNode] = []
        self.seps: list[tuple] = []
        self.hb: list[int] = []
        self.E: SortedBlockList | None = None
        self.groups: list[_Group] = []
        self.lows: list[tuple] = []
        self.lists: dict[tuple[int, int], SortedBlockList] = {}
        self.ylist: SortedBlockList | None = None

    @property
    def is_leaf(self) -> bool:
        return self.height == 0

    def child_index(self, key) -> int:
        return bisect_right(self.seps, key)

    def group_index(self, key) -> int:
        return bisect_right(self.lows, key) - 1

    def group_span(self, s: int) -> tuple[tuple, tuple]:
        hi = self.lows[s + 1] if s + 1 < len(self.lows) else KEY_MAX
        return self.lows[s], hi

    def pairs_with(self, t: int):
        k = len(self.children)
        for i in range(t + 1):
            for j in range(t, k):
                yield (i, j)


@dataclass
class WalkRecord:
    """One mixed-list walk: traversed elements in y order.

    Each entry is ``("pt", reported)`` for a materialized point or
    ``("ref", n)`` for a crossed reference that contributed n points.
    """

    node_uid: int
    interval: tuple[int, int]
    elements: list = field(default_factory=list)


@dataclass
class GroupedQueryStats:
    pairs: int = 0
    group_probes: int = 0
    witness_probes: int = 0
    leaf_scans: int = 0
    reported: int = 0
    walks: list[WalkRecord] = field(default_factory=list)


@dataclass
class GroupedCounters:
    promotions: int = 0
    demotions: int = 0
    group_splits: int = 0
    group_merges: int = 0
    node_splits: int = 0
    global_rebuilds: int = 0


class GroupedTree:
    """Two-dimensional range reporting with group-compressed interval lists."""

    def __init__(self, params: GroupedParams, store: BlockStore):
        if store.B != params.B:
            raise ValueError("params.B must match the store's block capacity")
        self.params = params
        self.store = store
        self._uids = count()
        self._gids = count()
        self.size = 0
        self._peak = 0
        self.counters = GroupedCounters()
        self.last_query = GroupedQueryStats()
        self.bulk_load(())

    # ------------------------------------------------------------ plumbing

    def _new_node(self, height: int) -> _GNode:
        return _GNode(next(self._uids), height)

    def _save_header(self, v: _GNode) -> None:
        recs: list = [("meta", v.uid, v.height, len(v.children))]
        recs.extend(zip([None] + v.seps, (c.uid for c in v.children)))
        for low, g in zip(v.lows, v.groups):
            recs.append((low, g.gid, tuple(g.counts), tuple(sorted(g.refs))))
        v.hb = self.store.write_all(v.hb, recs)

    def _read_header(self, v: _GNode) -> None:
        for bid in v.hb:
            self.store.read(bid)

    def _new_group(self, v: _GNode, pts: list) -> _Group:
        counts = [0] * len(v.children)
        for p in pts:
            counts[v.child_index((p[0], p[2]))] += 1
        return _Group(next(self._gids), GroupIndex(self.store, pts), counts)

    def _drop_node(self, v: _GNode) -> None:
        if v.E is not None:
            v.E.release()
            v.E = None
        for g in v.groups:
            g.index.free()
        v.groups, v.lows = [], []
        for L in v.lists.values():
            L.release()
        v.lists = {}
        if v.ylist is not None:
            v.ylist.release()
            v.ylist = None
        if v.hb:
            self.store.free_all(v.hb)
            v.hb = []

    def _build_node(self, v: _GNode, pts) -> None:
        """(Re)build every secondary structure of an internal node."""
        pts = sorted(pts, key=ykey)
        for g in v.groups:
            g.index.free()
        for L in v.lists.values():
            L.release()
        if v.E is None:
            v.E = SortedBlockList(self.store)
        v.E.rebuild(pts)
        prm = self.params
        target = max(prm.group_lo, prm.split_trigger // 2)
        cuts = list(range(0, len(pts), target)) or [0]
        if len(cuts) > 1 and len(pts) - cuts[-1] < prm.group_lo:
            cuts.pop()
        bounds = cuts + [len(pts)]
        v.groups, v.lows = [], []
        for s, (lo, hi) in enumerate(zip(bounds, bounds[1:])):
            v.groups.append(self._new_group(v, pts[lo:hi]))
            v.lows.append(KEY_MIN if s == 0 else ykey(pts[lo]))
        if not v.groups:
            v.groups.append(self._new_group(v, []))
            v.lows.append(KEY_MIN)
        self._build_lists(v, {})
        self._save_header(v)

    def _build_lists(self, v: _GNode, prior: dict) -> None:
        """Lay out every mixed list from scratch.

        ``prior`` maps (gid, pair) to the form ("ref" or "pts") a share had
        before, so that shares inside the hysteresis band keep their form.
        """
        k = len(v.children)
        two_b = 2 * self.params.B
        keep = self.params.demote_below
        members = [g.index.all_points() for g in v.groups]
        v.lists = {}
        for i in range(k):
            for j in range(i, k):
                elems: list = []
                for g, pts in zip(v.groups, members):
                    g.refs.pop((i, j), None)
                    share = g.share(i, j)
                    if share == 0:
                        continue
                    was = prior.get((g.gid, (i, j)))
                    ref = share >= two_b or (was == "ref" and share >= keep)
                    mine = [p for p in pts
                            if i <= v.child_index((p[0], p[2])) <= j]
                    if ref:
                        e = make_ref(g.gid, ykey(mine[0]), ykey(mine[-1]))
                        g.refs[(i, j)] = e
                        elems.append(e)
                    else:
                        elems.extend(mine)
                v.lists[(i, j)] = SortedBlockList(self.store, key=elem_key,
                                                  records=elems)

    def _forms(self, v: _GNode) -> dict:
        out = {}
        k = len(v.children)
        for g in v.groups:
            for i in range(k):
                for j in range(i, k):
                    out[(g.gid, (i, j))] = "ref" if (i, j) in g.refs else "pts"
        return out

    def _recount(self, v: _GNode) -> None:
        for g in v.groups:
            counts = [0] * len(v.children)
            for p in g.index.all_points():
                counts[v.child_index((p[0], p[2]))] += 1
            g.counts = counts

    # ----------------------------------------------------- per-node updates

    def _share_points(self, v: _GNode, g: _Group, i: int, j: int) -> list:
        return [p for p in g.index.all_points()
                if i <= v.child_index((p[0], p[2])) <= j]

    def _set_ref(self, v: _GNode, g: _Group, pair, pts) -> None:
        L = v.lists[pair]
        old = g.refs.get(pair)
        e = make_ref(g.gid, ykey(pts[0]), ykey(pts[-1]))
        if old == e:
            return
        if old is not None:
            L.delete(old)
        L.insert(e)
        g.refs[pair] = e

    def _promote(self, v: _GNode, s: int, pair) -> None:
        g = v.groups[s]
        lo, hi = v.group_span(s)
        L = v.lists[pair]
        mine = [e for e in L.range(lo, hi) if elem_key(e) < hi]
        L.delete_many(mine)
        e = make_ref(g.gid, elem_key(mine[0]), elem_key(mine[-1]))
        L.insert(e)
        g.refs[pair] = e
        self.counters.promotions += 1

    def _demote(self, v: _GNode, s: int, pair) -> None:
        g = v.groups[s]
        L = v.lists[pair]
        L.delete(g.refs.pop(pair))
        L.insert_many(self._share_points(v, g, *pair))
        self.counters.demotions += 1

    def _node_insert(self, v: _GNode, p: Point) -> None:
        self._read_header(v)
        t = v.child_index((p[0], p[2]))
        k = ykey(p)
        v.E.insert(p)
        s = v.group_index(k)
        g = v.groups[s]
        g.index.insert(p)
        g.counts[t] += 1
        two_b = 2 * self.params.B
        for pair in v.pairs_with(t):
            e = g.refs.get(pair)
            if e is not None:
                if k < e[2] or k > e[3]:
                    L = v.lists[pair]
                    L.delete(e)
                    e = make_ref(g.gid, min(k, e[2]), max(k, e[3]))
                    L.insert(e)
                    g.refs[pair] = e
                continue
            v.lists[pair].insert(p)
            if g.share(*pair) >= two_b:
                self._promote(v, s, pair)
        if len(g.index) > self.params.split_trigger:
            self._split_group(v, s)
        self._save_header(v)

    def _node_delete(self, v: _GNode, p: Point) -> None:
        self._read_header(v)
        t = v.child_index((p[0], p[2]))
        k = ykey(p)
        v.E.delete(p)
        s = v.group_index(k)
        g = v.groups[s]
        g.index.delete(p)
        g.counts[t] -= 1
        keep = self.params.demote_below
        for pair in v.pairs_with(t):
            e = g.refs.get(pair)
            if e is None:
                v.lists[pair].delete(p)
                continue
            share = g.share(*pair)
            if share < keep:
                self._demote(v, s, pair)
            elif k == e[2] or k == e[3]:
                self._set_ref(v, g, pair, self._share_points(v, g, *pair))
        if len(g.index) < self.params.group_lo and len(v.groups) > 1:
            self._merge_group(v, s)
        self._save_header(v)

    def _strip_groups(self, v: _GNode, lo_s: int, hi_s: int) -> None:
        """Remove the mixed-list elements of groups lo_s..hi_s."""
        lo = v.group_span(lo_s)[0]
        hi = v.group_span(hi_s)[1]
        gone = {v.groups[s].gid for s in range(lo_s, hi_s + 1)}
        for L in v.lists.values():
            doomed = [e for e in L.range(lo, hi) if elem_key(e) < hi
                      and (not is_ref(e) or e[1] in gone)]
            L.delete_many(doomed)

    def _lay_groups(self, v: _GNode, lo_s: int, hi_s: int, prior: dict) -> None:
        """Insert the mixed-list elements of groups lo_s..hi_s afresh."""
        k = len(v.children)
        two_b = 2 * self.params.B
        keep = self.params.demote_below
        for s in range(lo_s, hi_s + 1):
            g = v.groups[s]
            g.refs = {}
            pts = g.index.all_points()
            for i in range(k):
                for j in range(i, k):
                    share = g.share(i, j)
                    if share == 0:
                        continue
                    mine = [p for p in pts
                            if i <= v.child_index((p[0], p[2])) <= j]
                    was = prior.get((i, j))
                    if share >= two_b or (was == "ref" and share >= keep):
                        e = make_ref(g.gid, ykey(mine[0]), ykey(mine[-1]))
                        g.refs[(i, j)] = e
                        v.lists[(i, j)].insert(e)
                    else:
                        v.lists[(i, j)].insert_many(mine)

    def _split_group(self, v: _GNode, s: int) -> None:
        self.counters.group_splits += 1
        g = v.groups[s]
        prior = {pair: "ref" for pair in g.refs}
        self._strip_groups(v, s, s)
        pts = g.index.all_points()
        g.index.free()
        half = len(pts) // 2
        g1 = self._new_group(v, pts[:half])
        g2 = self._new_group(v, pts[half:])
        v.groups[s:s + 1] = [g1, g2]
        v.lows.insert(s + 1, ykey(pts[half]))
        self._lay_groups(v, s, s + 1, prior)

    def _merge_group(self, v: _GNode, s: int) -> None:
        self.counters.group_merges += 1
        if s + 1 < len(v.groups) and (s == 0 or len(v.groups[s + 1].index)
                                      <= len(v.groups[s - 1].index)):
            a = s
        else:
            a = s - 1
        ga, gb = v.groups[a], v.groups[a + 1]
        prior = {pair: "ref" for pair in set(ga.refs) | set(gb.refs)}
        self._strip_groups(v, a, a + 1)
        pts = ga.index.all_points() + gb.index.all_points()
        ga.index.free()
        gb.index.free()
        v.groups[a:a + 2] = [self._new_group(v, pts)]
        del v.lows[a + 1]
        self._lay_groups(v, a, a, prior)
        if len(v.groups[a].index) > self.params.split_trigger:
            self._split_group(v, a)

    # ------------------------------------------------------------- updates

    def __len__(self) -> int:
        return self.size

    def _path(self, p: Point) -> list[_GNode]:
        path = [self.root]
        k = (p[0], p[2])
        v = self.root
        while not v.is_leaf:
            self._read_header(v)
            v = v.children[v.child_index(k)]
            path.append(v)
        return path

    def contains(self, p) -> bool:
        p = Point(*p)
        leaf = self._path(p)[-1]
        return leaf.ylist.successor(ykey(p)) == p

    def insert(self, p) -> None:
        p = Point(*p)
        path = self._path(p)
        leaf = path[-1]
        try:
            leaf.ylist.insert(p)
        except ValueError:
            raise DuplicatePoint(p) from None
        for v in path[:-1]:
            self._node_insert(v, p)
        self.size += 1
        self._peak = max(self._peak, self.size)
        if len(leaf.ylist) > 2 * self.params.B:
            self._split_leaf(leaf)

    def delete(self, p) -> None:
        p = Point(*p)
        path = self._path(p)
        leaf = path[-1]
        if leaf.ylist.successor(ykey(p)) != p:
            raise AbsentPoint(p)
        leaf.ylist.delete(p)
        for v in path[:-1]:
            self._node_delete(v, p)
        self.size -= 1
        B = self.params.B
        if self._peak >= 8 * B and 4 * self.size <= self._peak:
            self.counters.global_rebuilds += 1
            self.bulk_load(self.live_points())

    # ----------------------------------------------------------- splitting

    def _reindex(self, v: _GNode) -> None:
        """Refresh per-child counts and mixed lists after v's children changed.

        Child intervals are renumbered, so every share is laid out afresh.
        """
        for L in v.lists.values():
            L.release()
        self._recount(v)
        self._build_lists(v, {})
        self._save_header(v)

    def _split_leaf(self, leaf: _GNode) -> None:
        self.counters.node_splits += 1
        P = leaf.parent
        pts = sorted(leaf.ylist.read_all(), key=lambda p: (p[0], p[2]))
        mid = len(pts) // 2
        leaf.ylist.rebuild(pts[:mid])
        new = self._new_node(0)
        new.ylist = SortedBlockList(self.store, records=pts[mid:])
        self._attach(P, leaf, new, (pts[mid][0], pts[mid][2]))

    def _attach(self, P: _GNode, w: _GNode, new: _GNode, sep) -> None:
        j = P.children.index(w)
        P.children.insert(j + 1, new)
        P.seps.insert(j, sep)
        new.parent = P
        self._read_header(P)
        self._reindex(P)
        if len(P.children) > self.params.max_children:
            self._split_internal(P)

    def _split_internal(self, v: _GNode) -> None:
        self.counters.node_splits += 1
        if v is self.root:
            R = self._new_node(v.height + 1)
            R.children = [v]
            v.parent = R
            self.root = R
            self._build_node(R, v.E.read_all())
        P = v.parent
        k = len(v.children) // 2
        sep = v.seps[k - 1]
        new = self._new_node(v.height)
        new.children, v.children = v.children[k:], v.children[:k]
        new.seps, v.seps = v.seps[k:], v.seps[:k - 1]
        for c in new.children:
            c.parent = new
        pts = v.E.read_all()
        self._build_node(v, [p for p in pts if (p[0], p[2]) < sep])
        self._build_node(new, [p for p in pts if (p[0], p[2]) >= sep])
        self._attach(P, v, new, sep)

    # ----------------------------------------------------- global rebuild

    def live_points(self) -> list[Point]:
        out: list[Point] = []
        for v, _ in self.iter_nodes():
            if v.is_leaf:
                out.extend(v.ylist.read_all())
        return out

    def bulk_load(self, points) -> None:
        """Replace the contents by a bottom-up build."""
        pts = sorted({Point(*p) for p in points}, key=lambda p: (p[0], p[2]))
        if len({(p[0], p[2]) for p in pts}) != len(pts):
            raise DuplicatePoint("repeated (x, id) in bulk load")
        if getattr(self, "root", None) is not None:
            for v, _ in list(self.iter_nodes()):
                self._drop_node(v)
        B = self.params.B
        f = self.params.fanout
        level: list[tuple[_GNode, list]] = []
        for i in range(0, max(len(pts), 1), B):
            leaf = self._new_node(0)
            leaf.ylist = SortedBlockList(self.store, records=pts[i:i + B])
            level.append((leaf, pts[i:i + B]))
        height = 0
        while height == 0 or len(level) > 1:
            height += 1
            cuts = list(range(0, len(level), f))
            if len(cuts) > 1 and len(level) - cuts[-1] == 1:
                cuts.pop()
            bounds = cuts + [len(level)]
            nxt = []
            for lo, hi in zip(bounds, bounds[1:]):
                chunk = level[lo:hi]
                node = self._new_node(height)
                node.children = [c for c, _ in chunk]
                node.seps = [(cp[0][0], cp[0][2]) for _, cp in chunk[1:]]
                for c in node.children:
                    c.parent = node
                mine = [p for _, cp in chunk for p in cp]
                self._build_node(node, mine)
                nxt.append((node, mine))
            level = nxt
        self.root = level[0][0]
        self.root.parent = None
        self.size = len(pts)
        self._peak = len(pts)

    # --------------------------------------------------------------- query

    def query2d(self, a: int, b: int, c: int, d: int) -> list[Point]:
        """Every point with a <= x <= b and c <= y <= d."""
        st = self.last_query = GroupedQueryStats()
        if a > b or c > d:
            return []
        ka, kb = (a, ID_LO), (b, ID_HI)
        out: list[Point] = []
        v = self.root
        while True:
            if v.is_leaf:
                st.leaf_scans += 1
                out.extend(filter_2d(v.ylist.range((c, ID_LO), (d, ID_HI)),
                                     a, b, c, d))
                st.reported = len(out)
                return out
            self._read_header(v)
            i, j = v.child_index(ka), v.child_index(kb)
            if i != j:
                break
            v = v.children[i]
        if j - i >= 2:
            self._report_pair(v, i + 1, j - 1, a, b, c, d, out, st)
        self._boundary(v.children[i], ka, True, a, b, c, d, out, st)
        self._boundary(v.children[j], kb, False, a, b, c, d, out, st)
        st.reported = len(out)
        return out

    def _boundary(self, u: _GNode, key, left: bool, a, b, c, d, out, st) -> None:
        while not u.is_leaf:
            self._read_header(u)
            t = u.child_index(key)
            last = len(u.children) - 1
            if left and t < last:
                self._report_pair(u, t + 1, last, a, b, c, d, out, st)
            elif not left and t > 0:
                self._report_pair(u, 0, t - 1, a, b, c, d, out, st)
            u = u.children[t]
        st.leaf_scans += 1
        out.extend(filter_2d(u.ylist.range((c, ID_LO), (d, ID_HI)), a, b, c, d))

    def _pair_xrange(self, v: _GNode, i: int, j: int, a: int, b: int):
        lo = v.seps[i - 1][0] if i > 0 else NEG_INF
        hi = v.seps[j][0] if j < len(v.seps) else POS_INF
        return max(a, lo), min(b, hi)

    def _group_report(self, v, g: _Group, i, j, a, b, c, d) -> list[Point]:
        xa, xb = self._pair_xrange(v, i, j, a, b)
        return [p for p in g.index.query(xa, xb, c, d)
                if i <= v.child_index((p[0], p[2])) <= j]

    def _report_pair(self, v: _GNode, i: int, j: int, a, b, c, d, out, st) -> None:
        st.pairs += 1
        L = v.lists[(i, j)]
        lo, hi = (c, ID_LO), (d, ID_HI)
        e = L.successor(lo)
        if e is None or elem_key(e) > hi:
            e = None
            q = L.predecessor(lo)
            if q is not None and is_ref(q) and lo <= q[3] <= hi:
                e = q
        if e is None:
            st.witness_probes += 1
            w = v.E.one_report(lo, hi)
            if w is not None:
                g = v.groups[v.group_index(ykey(w))]
                st.group_probes += 1
                out.extend(self._group_report(v, g, i, j, a, b, c, d))
            return
        by_gid = {g.gid: g for g in v.groups}
        rec = WalkRecord(v.uid, (i, j))
        ahead: list = []
        for el in L.iter_from(elem_key(e)):
            if elem_key(el) > hi:
                break
            ahead.append(self._visit(v, by_gid, el, i, j, a, b, c, d, out, st))
        behind: list = []
        for el in L.iter_before(elem_key(e)):
            if elem_max(el) < lo:
                break
            behind.append(self._visit(v, by_gid, el, i, j, a, b, c, d, out, st))
        rec.elements = behind[::-1] + ahead
        st.walks.append(rec)

    def _visit(self, v, by_gid, el, i, j, a, b, c, d, out, st):
        if not is_ref(el):
            hit = c <= el[1] <= d
            if hit:
                out.append(el)
            return ("pt", hit)
        st.group_probes += 1
        got = self._group_report(v, by_gid[el[1]], i, j, a, b, c, d)
        out.extend(got)
        return ("ref", len(got))

    def walk_violations(self, stats: GroupedQueryStats | None = None) -> list[str]:
        """Check the last query's walks: interior references pay >= B points."""
        st = stats or self.last_query
        B = self.params.B
        errs = []
        for w in st.walks:
            el = w.elements
            tag = f"node {w.node_uid} {w.interval}"
            for pos in range(1, len(el) - 1):
                kind, n = el[pos]
                if kind == "ref" and n < B:
                    errs.append(f"{tag}: interior reference yielded {n} < {B} points")
            # B consecutive elements: B reported points or a reference; only
            # runs of at least B materialized points can break this
            run, miss = 0, False
            for kind, val in el + [("ref", B)]:
                if kind == "pt":
                    run += 1
                    miss = miss or not val
                    continue
                if run >= B and miss:
                    errs.append(f"{tag}: {B} consecutive elements hold neither "
                                f"{B} reported points nor a reference")
                    break
                run, miss = 0, False
        return errs

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

    def mixed_list_sizes(self) -> list[tuple[int, int]]:
        """(elements over all mixed lists, |L(v)|) per internal node."""
        return [(sum(len(L) for L in v.lists.values()), len(v.E))
                for v, _ in self.iter_nodes() if not v.is_leaf]

    def form_violations(self) -> list[str]:
        """The points-or-reference rule for every (node, interval, group)."""
        errs: list[str] = []
        B = self.params.B
        for v, depth in self.iter_nodes():
            if v.is_leaf:
                continue
            k = len(v.children)
            for s, g in enumerate(v.groups):
                lo, hi = v.group_span(s)
                pts = g.index.peek_points()
                for i in range(k):
                    for j in range(i, k):
                        mine = [p for p in pts
                                if i <= v.child_index((p[0], p[2])) <= j]
                        have = [e for e in v.lists[(i, j)]
                                if lo <= elem_key(e) < hi]
                        refs = [e for e in have if is_ref(e)]
                        loose = [e for e in have if not is_ref(e)]
                        tag = f"depth {depth} node {v.uid} ({i},{j}) group {g.gid}"
                        if refs and loose:
                            errs.append(f"{tag}: both points and a reference")
                        elif len(refs) > 1:
                            errs.append(f"{tag}: several references")
                        elif refs:
                            e = refs[0]
                            if len(mine) <= B / 2:
                                errs.append(f"{tag}: reference for {len(mine)} points")
                            if not mine or e[2] != ykey(mine[0]) or e[3] != ykey(mine[-1]):
                                errs.append(f"{tag}: reference bounds are stale")
                            if g.refs.get((i, j)) != e or e[1] != g.gid:
                                errs.append(f"{tag}: reference bookkeeping differs")
                        else:
                            if len(mine) >= 2 * B:
                                errs.append(f"{tag}: {len(mine)} points not replaced")
                            if sorted(loose, key=ykey) != mine:
                                errs.append(f"{tag}: materialized points differ")
                            if (i, j) in g.refs:
                                errs.append(f"{tag}: stale reference bookkeeping")
        return errs

    def check_invariants(self) -> list[str]:
        """Structural audit from in-memory mirrors (uncharged)."""
        errs: list[str] = []
        prm = self.params

        def walk(v: _GNode, lo, hi, depth) -> set:
            tag = f"node@depth{depth}/h{v.height}"
            if v.is_leaf:
                pts = set(v.ylist)
                errs.extend(f"{tag}: y-list: {e}" for e in v.ylist.check())
                if len(pts) > 2 * prm.B:
                    errs.append(f"{tag}: leaf holds {len(pts)} > {2 * prm.B}")
                for p in pts:
                    if not lo <= (p[0], p[2]) < hi:
                        errs.append(f"{tag}: point outside node range")
                        break
                return pts
            if len(v.children) > prm.max_children:
                errs.append(f"{tag}: {len(v.children)} children")
            if len(v.seps) != len(v.children) - 1 or v.seps != sorted(v.seps):
                errs.append(f"{tag}: bad separators")
            bounds = [lo] + v.seps + [hi]
            below: set = set()
            per_child = []
            for t, c in enumerate(v.children):
                if c.parent is not v or c.height != v.height - 1:
                    errs.append(f"{tag}: bad child link")
                got = walk(c, bounds[t], bounds[t + 1], depth + 1)
                per_child.append(got)
                below |= got
            if set(v.E) != below:
                errs.append(f"{tag}: E(v) differs from the subtree")
            if v.lows[0] != KEY_MIN or v.lows != sorted(v.lows):
                errs.append(f"{tag}: bad group boundaries")
            seen: set = set()
            for s, g in enumerate(v.groups):
                glo, ghi = v.group_span(s)
                pts = g.index.peek_points()
                if any(not glo <= ykey(p) < ghi for p in pts):
                    errs.append(f"{tag}: group {g.gid} not y-contiguous")
                n = len(pts)
                if n > prm.split_trigger:
                    errs.append(f"{tag}: group {g.gid} holds {n} > split size")
                if n < prm.group_lo and len(v.groups) > 1:
                    errs.append(f"{tag}: group {g.gid} holds {n} < {prm.group_lo}")
                want = [sum(1 for p in pts if p in per_child[t])
                        for t in range(len(v.children))]
                if g.counts != want:
                    errs.append(f"{tag}: group {g.gid} child counts stale")
                seen |= set(pts)
            if seen != below:
                errs.append(f"{tag}: groups differ from the subtree")
            return below

        walk(self.root, KEY_MIN, KEY_MAX, 0)
        errs.extend(self.form_violations())
        return errs
