"""Blocked sorted list: a B+-tree of point records ordered by a key.

Leaves hold up to B records each and are chained left to right; internal
index nodes hold up to B (separator, child) entries, child 0 carrying an
implicit minus-infinity separator. The tree is mirrored in memory, and every
node visit or modification goes through the :class:`BlockStore`, so searches
cost one read per level and range reports one read per leaf touched.

It serves as the y-ordered list of a node (ordered by (y, id)), as the
one-reporting index of the grouped tree, and as a plain ordered catalog.
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from typing import Callable, Iterable, Iterator

from .emstore import BlockStore


def ykey(p) -> tuple:
    return (p[1], p[2])


class _Leaf:
    __slots__ = ("keys", "recs", "bid", "next", "prev")

    def __init__(self, bid: int):
        self.keys: list = []
        self.recs: list = []
        self.bid = bid
        self.next: _Leaf | None = None
        self.prev: _Leaf | None = None


class _Inner:
    __slots__ = ("seps", "kids", "bid")

    def __init__(self, bid: int):
        self.seps: list = []          # seps[i] is the lower bound of kids[i + 1]
        self.kids: list = []
        self.bid = bid


class SortedBlockList:
    """Ordered multiset-free list of records with block-granular I/O."""

    def __init__(self, store: BlockStore, key: Callable = ykey, records: Iterable = ()):
        self.store = store
        self.B = store.B
        self.key = key
        self.n = 0
        self.root: _Leaf | _Inner = self._new_leaf()
        self._save(self.root)
        recs = list(records)
        if recs:
            self.rebuild(recs)

    # ------------------------------------------------------------ plumbing

    def _new_leaf(self) -> _Leaf:
        return _Leaf(self.store.alloc())

    def _new_inner(self) -> _Inner:
        return _Inner(self.store.alloc())

    def _save(self, node) -> None:
        if isinstance(node, _Leaf):
            self.store.write(node.bid, node.recs)
        else:
            self.store.write(node.bid, list(zip([None] + node.seps,
                                                [k.bid for k in node.kids])))

    def _touch(self, node) -> None:
        self.store.read(node.bid)

    def _descend(self, k, path: list | None = None) -> _Leaf:
        """Leaf whose key span covers k (the last leaf with lower bound <= k)."""
        node = self.root
        self._touch(node)
        while isinstance(node, _Inner):
            i = bisect_right(node.seps, k)
            if path is not None:
                path.append((node, i))
            node = node.kids[i]
            self._touch(node)
        return node

    def _first_leaf(self) -> _Leaf:
        node = self.root
        while isinstance(node, _Inner):
            node = node.kids[0]
        return node

    # --------------------------------------------------------------- build

    def rebuild(self, records: Iterable) -> None:
        """Replace the contents; leaves are packed full."""
        recs = sorted(records, key=self.key)
        self.free()
        self.store.free(self.root.bid)
        key = self.key
        keys = [key(r) for r in recs]
        for i in range(1, len(keys)):
            if keys[i] == keys[i - 1]:
                raise ValueError(f"duplicate key {keys[i]}")
        B = self.B
        self.n = len(recs)
        leaves: list[_Leaf] = []
        for i in range(0, max(len(recs), 1), B):
            leaf = self._new_leaf()
            leaf.recs = recs[i:i + B]
            leaf.keys = keys[i:i + B]
            if leaves:
                leaves[-1].next = leaf
                leaf.prev = leaves[-1]
            leaves.append(leaf)
            self._save(leaf)
        level: list = leaves
        lows = [lf.keys[0] if lf.keys else None for lf in leaves]
        while len(level) > 1:
            nxt, nlows = [], []
            # spread evenly so that no index node is left with a single child
            groups = -(-len(level) // B)
            cuts = [len(level) * g // groups for g in range(groups + 1)]
            for i, j in zip(cuts, cuts[1:]):
                node = self._new_inner()
                node.kids = level[i:j]
                node.seps = lows[i + 1:j]
                nxt.append(node)
                nlows.append(lows[i])
                self._save(node)
            level, lows = nxt, nlows
        self.root = level[0]

    def free(self) -> None:
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, _Inner):
                stack.extend(node.kids)
            self.store.free(node.bid)
        self.root = self._new_leaf()
        self._save(self.root)
        self.n = 0

    def release(self) -> None:
        """Free every block for good (the list must not be used afterwards)."""
        self.free()
        self.store.free(self.root.bid)
        self.root = None

    # ------------------------------------------------------------- updates

    def __len__(self) -> int:
        return self.n

    def insert(self, rec) -> None:
        k = self.key(rec)
        path: list = []
        leaf = self._descend(k, path)
        i = bisect_left(leaf.keys, k)
        if i < len(leaf.keys) and leaf.keys[i] == k:
            raise ValueError(f"duplicate key {k}")
        leaf.keys.insert(i, k)
        leaf.recs.insert(i, rec)
        self.n += 1
        if len(leaf.recs) > self.B:
            self._split_leaf(leaf, path)
        else:
            self._save(leaf)

    def delete(self, rec) -> None:
        k = self.key(rec)
        path: list = []
        leaf = self._descend(k, path)
        i = bisect_left(leaf.keys, k)
        if i >= len(leaf.keys) or leaf.keys[i] != k:
            raise KeyError(k)
        del leaf.keys[i]
        del leaf.recs[i]
        self.n -= 1
        if len(leaf.recs) < self.B // 4 and path:
            self._rebalance_leaf(leaf, path)
        else:
            self._save(leaf)

    def insert_many(self, recs: Iterable) -> None:
        for r in sorted(recs, key=self.key):
            self.insert(r)

    def delete_many(self, recs: Iterable) -> None:
        for r in sorted(recs, key=self.key):
            self.delete(r)

    def _split_leaf(self, leaf: _Leaf, path: list) -> None:
        mid = len(leaf.recs) // 2
        right = self._new_leaf()
        right.recs, leaf.recs = leaf.recs[mid:], leaf.recs[:mid]
        right.keys, leaf.keys = leaf.keys[mid:], leaf.keys[:mid]
        right.next, right.prev = leaf.next, leaf
        if leaf.next is not None:
            leaf.next.prev = right
        leaf.next = right
        self._save(leaf)
        self._save(right)
        self._insert_up(path, right.keys[0], right)

    def _insert_up(self, path: list, sep, node) -> None:
        B = self.B
        while path:
            parent, i = path.pop()
            parent.seps.insert(i, sep)
            parent.kids.insert(i + 1, node)
            if len(parent.kids) <= B:
                self._save(parent)
                return
            mid = len(parent.kids) // 2
            right = self._new_inner()
            sep = parent.seps[mid - 1]
            right.kids, parent.kids = parent.kids[mid:], parent.kids[:mid]
            right.seps, parent.seps = parent.seps[mid:], parent.seps[:mid - 1]
            self._save(parent)
            self._save(right)
            node = right
        old = self.root
        root = self._new_inner()
        root.kids = [old, node]
        root.seps = [sep]
        self._save(root)
        self.root = root

    def _rebalance_leaf(self, leaf: _Leaf, path: list) -> None:
        parent, i = path[-1]
        B = self.B
        if i + 1 < len(parent.kids):
            left, right, si = leaf, parent.kids[i + 1], i
        else:
            left, right, si = parent.kids[i - 1], leaf, i - 1
        self._touch(left)
        self._touch(right)
        if len(left.recs) + len(right.recs) <= B:
            left.recs.extend(right.recs)
            left.keys.extend(right.keys)
            left.next = right.next
            if right.next is not None:
                right.next.prev = left
            self._save(left)
            self.store.free(right.bid)
            del parent.seps[si]
            del parent.kids[si + 1]
            self._shrink_up(path)
        else:
            allr = left.recs + right.recs
            allk = left.keys + right.keys
            mid = len(allr) // 2
            left.recs, right.recs = allr[:mid], allr[mid:]
            left.keys, right.keys = allk[:mid], allk[mid:]
            parent.seps[si] = right.keys[0]
            self._save(left)
            self._save(right)
            self._save(parent)

    def _shrink_up(self, path: list) -> None:
        B = self.B
        node, _ = path.pop()
        while True:
            if not path:
                if len(node.kids) == 1:
                    self.store.free(node.bid)
                    self.root = node.kids[0]
                else:
                    self._save(node)
                return
            if len(node.kids) >= max(2, B // 4):
                self._save(node)
                return
            parent, i = path[-1]
            if i + 1 < len(parent.kids):
                left, right, si = node, parent.kids[i + 1], i
            else:
                left, right, si = parent.kids[i - 1], node, i - 1
            self._touch(left)
            self._touch(right)
            if len(left.kids) + len(right.kids) <= B:
                left.seps.append(parent.seps[si])
                left.seps.extend(right.seps)
                left.kids.extend(right.kids)
                self._save(left)
                self.store.free(right.bid)
                del parent.seps[si]
                del parent.kids[si + 1]
                node, _ = path.pop()
                continue
            kids = left.kids + right.kids
            seps = left.seps + [parent.seps[si]] + right.seps
            mid = len(kids) // 2
            left.kids, right.kids = kids[:mid], kids[mid:]
            left.seps, right.seps = seps[:mid - 1], seps[mid:]
            parent.seps[si] = seps[mid - 1]
            self._save(left)
            self._save(right)
            self._save(parent)
            return

    # ------------------------------------------------------------- queries

    def range(self, lo, hi) -> list:
        """Records with lo <= key <= hi, in key order."""
        out: list = []
        if self.n == 0 or lo > hi:
            return out
        leaf = self._descend(lo)
        i = bisect_left(leaf.keys, lo)
        while leaf is not None:
            keys = leaf.keys
            j = bisect_right(keys, hi, i)
            out.extend(leaf.recs[i:j])
            if j < len(keys):
                break
            leaf = leaf.next
            i = 0
            if leaf is not None:
                self._touch(leaf)
        return out

    def iter_from(self, lo) -> Iterator:
        """Records with key >= lo, ascending; leaves are read lazily."""
        if self.n == 0:
            return
        leaf = self._descend(lo)
        i = bisect_left(leaf.keys, lo)
        while leaf is not None:
            yield from leaf.recs[i:]
            leaf = leaf.next
            i = 0
            if leaf is not None:
                self._touch(leaf)

    def iter_after(self, k) -> Iterator:
        """Records with key strictly greater than k, ascending."""
        if self.n == 0:
            return
        leaf = self._descend(k)
        i = bisect_right(leaf.keys, k)
        while leaf is not None:
            yield from leaf.recs[i:]
            leaf = leaf.next
            i = 0
            if leaf is not None:
                self._touch(leaf)

    def iter_before(self, k) -> Iterator:
        """Records with key strictly less than k, descending."""
        if self.n == 0:
            return
        leaf = self._descend(k)
        i = bisect_left(leaf.keys, k)
        while leaf is not None:
            yield from reversed(leaf.recs[:i])
            leaf = leaf.prev
            if leaf is not None:
                self._touch(leaf)
                i = len(leaf.recs)

    def successor(self, k):
        """First record with key >= k, or None."""
        return next(self.iter_from(k), None)

    def predecessor(self, k):
        """Last record with key < k, or None."""
        if self.n == 0:
            return None
        leaf = self._descend(k)
        i = bisect_left(leaf.keys, k)
        while i == 0:
            leaf = leaf.prev
            if leaf is None:
                return None
            self._touch(leaf)
            i = len(leaf.keys)
        return leaf.recs[i - 1]

    def one_report(self, lo, hi):
        """Some record with lo <= key <= hi, or None."""
        r = self.successor(lo)
        if r is not None and self.key(r) <= hi:
            return r
        return None

    def min(self):
        if self.n == 0:
            return None
        node = self.root
        self._touch(node)
        while isinstance(node, _Inner):
            node = node.kids[0]
            self._touch(node)
        while not node.recs:
            node = node.next
            self._touch(node)
        return node.recs[0]

    def __iter__(self) -> Iterator:
        """Uncharged in-order iteration (inspection only)."""
        leaf = self._first_leaf()
        while leaf is not None:
            yield from leaf.recs
            leaf = leaf.next

    def read_all(self) -> list:
        """Every record in key order, charging one read per block."""
        self._touch_all()
        return list(iter(self))

    def _touch_all(self) -> None:
        stack = [self.root]
        while stack:
            node = stack.pop()
            self._touch(node)
            if isinstance(node, _Inner):
                stack.extend(node.kids)

    # ---------------------------------------------------------- inspection

    @property
    def block_count(self) -> int:
        count, stack = 0, [self.root]
        while stack:
            node = stack.pop()
            count += 1
            if isinstance(node, _Inner):
                stack.extend(node.kids)
        return count

    def check(self) -> list[str]:
        """Structural audit: ordering, separators, chain, mirrors, counts."""
        errs: list[str] = []
        B, store = self.B, self.store
        leaves: list[_Leaf] = []

        def walk(node, lo, hi, depth, depths):
            if isinstance(node, _Leaf):
                depths.add(depth)
                if len(node.recs) > B:
                    errs.append("leaf over capacity")
                if node.keys != sorted(node.keys) or len(set(node.keys)) != len(node.keys):
                    errs.append("leaf keys unsorted")
                if node.keys != [self.key(r) for r in node.recs]:
                    errs.append("leaf key cache stale")
                if node.keys and ((lo is not None and node.keys[0] < lo)
                                  or (hi is not None and node.keys[-1] >= hi)):
                    errs.append("leaf outside separator span")
                if list(store.peek(node.bid)) != node.recs:
                    errs.append("leaf block out of sync")
                leaves.append(node)
                return
            if len(node.kids) > B or len(node.seps) != len(node.kids) - 1:
                errs.append("bad index node shape")
            if node.seps != sorted(node.seps):
                errs.append("separators unsorted")
            bounds = [lo] + node.seps + [hi]
            for i, kid in enumerate(node.kids):
                walk(kid, bounds[i], bounds[i + 1], depth + 1, depths)

        depths: set = set()
        walk(self.root, None, None, 0, depths)
        if len(depths) > 1:
            errs.append("leaves at different depths")
        for a, b in zip(leaves, leaves[1:]):
            if a.next is not b or b.prev is not a:
                errs.append("leaf chain broken")
                break
        if sum(len(lf.recs) for lf in leaves) != self.n:
            errs.append("count mismatch")
        return errs
