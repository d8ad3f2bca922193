# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled hot kernels: LRU residency and point-range scans."""
from cpython.tuple cimport PyTuple_GET_ITEM
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector
from libc.stdint cimport int64_t
from cython.operator cimport dereference as deref

DEF MISS = 1
DEF EVICTED_DIRTY = 2


cdef class LRUCore:
    """Exact LRU over int64 block ids; intrusive list in flat arrays."""

    cdef readonly int capacity
    cdef unordered_map[int64_t, int] _index
    cdef vector[int64_t] _key
    cdef vector[int] _prev, _next
    cdef vector[char] _dirty
    cdef int _head, _tail, _free, _size

    def __cinit__(self, int capacity):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._key.resize(capacity)
        self._prev.resize(capacity)
        self._next.resize(capacity)
        self._dirty.resize(capacity)
        self._reset()

    cdef void _reset(self):
        cdef int i
        self._index.clear()
        for i in range(self.capacity):
            self._next[i] = i + 1 if i + 1 < self.capacity else -1
        self._free = 0
        self._head = -1
        self._tail = -1
        self._size = 0

    cdef inline void _unlink(self, int s):
        cdef int p = self._prev[s], n = self._next[s]
        if p >= 0:
            self._next[p] = n
        else:
            self._head = n
        if n >= 0:
            self._prev[n] = p
        else:
            self._tail = p

    cdef inline void _push_back(self, int s):
        self._prev[s] = self._tail
        self._next[s] = -1
        if self._tail >= 0:
            self._next[self._tail] = s
        else:
            self._head = s
        self._tail = s

    cdef inline void _release(self, int s):
        self._index.erase(self._key[s])
        self._next[s] = self._free
        self._free = s
        self._size -= 1

    cpdef int touch(self, int64_t bid, bint dirty=False):
        cdef unordered_map[int64_t, int].iterator it = self._index.find(bid)
        cdef int s, flags
        if it != self._index.end():
            s = deref(it).second
            if s != self._tail:
                self._unlink(s)
                self._push_back(s)
            if dirty:
                self._dirty[s] = 1
            return 0
        flags = MISS
        if self._size >= self.capacity:
            s = self._head
            if self._dirty[s]:
                flags |= EVICTED_DIRTY
            self._unlink(s)
            self._release(s)
        s = self._free
        self._free = self._next[s]
        self._key[s] = bid
        self._dirty[s] = <char>dirty
        self._index[bid] = s
        self._push_back(s)
        self._size += 1
        return flags

    cpdef void discard(self, int64_t bid):
        cdef unordered_map[int64_t, int].iterator it = self._index.find(bid)
        cdef int s
        if it == self._index.end():
            return
        s = deref(it).second
        self._unlink(s)
        self._release(s)

    cpdef int flush(self):
        cdef int s = self._head, nxt, count = 0
        while s >= 0:
            nxt = self._next[s]
            if self._dirty[s]:
                self._unlink(s)
                self._release(s)
                count += 1
            s = nxt
        return count

    def clear(self):
        self._reset()

    def __contains__(self, int64_t bid):
        return self._index.count(bid) > 0

    def __len__(self):
        return self._size


def filter_3s(list points, a, b, c):
    cdef list out = []
    cdef object p, x
    for p in points:
        x = <object>PyTuple_GET_ITEM(p, 0)
        if a <= x <= b and <object>PyTuple_GET_ITEM(p, 1) >= c:
            out.append(p)
    return out


def filter_2d(list points, a, b, c, d):
    cdef list out = []
    cdef object p, x, y
    for p in points:
        x = <object>PyTuple_GET_ITEM(p, 0)
        if a <= x <= b:
            y = <object>PyTuple_GET_ITEM(p, 1)
            if c <= y <= d:
                out.append(p)
    return out


def scan_ydesc(list points, a, b, c):
    cdef list out = []
    cdef object p, x
    for p in points:
        if <object>PyTuple_GET_ITEM(p, 1) < c:
            break
        x = <object>PyTuple_GET_ITEM(p, 0)
        if a <= x <= b:
            out.append(p)
    return out


def scan_yasc(list points, Py_ssize_t start, d, a, b):
    cdef list out = []
    cdef Py_ssize_t i, n = len(points)
    cdef object p, x
    for i in range(start, n):
        p = points[i]
        if <object>PyTuple_GET_ITEM(p, 1) > d:
            return out, False
        x = <object>PyTuple_GET_ITEM(p, 0)
        if a <= x <= b:
            out.append(p)
    return out, True
