"""Simulated external memory: fixed-capacity blocks behind an exact LRU cache.

Every structure in the package keeps its persistent state in a
:class:`BlockStore`; the store counts block transfers the way the I/O model
does. Mutating data that is already cached is free, a read of an uncached
block costs one read, and a dirty block costs one write when it leaves the
cache (eviction or :meth:`BlockStore.flush`).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, NamedTuple, Sequence

from ._kernels import EVICTED_DIRTY, MISS, LRUCore

BlockId = int


class StoreFault(Exception):
    """Access to an unknown or freed block, or an oversized write."""


@dataclass(frozen=True)
class StoreConfig:
    block_capacity_B: int = 64
    cache_blocks_M: int = 16
    track_writes: bool = True

    def __post_init__(self):
        if self.block_capacity_B < 4:
            raise ValueError("block_capacity_B must be >= 4")
        if self.cache_blocks_M < 1:
            raise ValueError("cache_blocks_M must be >= 1")


class IOStats(NamedTuple):
    reads: int
    writes: int
    live_blocks: int

    def __sub__(self, other: "IOStats") -> "IOStats":
        return IOStats(self.reads - other.reads, self.writes - other.writes,
                       self.live_blocks - other.live_blocks)

    @property
    def total(self) -> int:
        return self.reads + self.writes


class BlockStore:
    """Block device with an M-block LRU cache and read/write counters."""

    def __init__(self, config: StoreConfig | None = None, **kwargs):
        self.config = config if config is not None else StoreConfig(**kwargs)
        self.B = self.config.block_capacity_B
        self._track_writes = self.config.track_writes
        self._blocks: dict[BlockId, list] = {}
        self._cache = LRUCore(self.config.cache_blocks_M)
        self._next_id = 0
        self.reads = 0
        self.writes = 0
        self.allocations = 0
        self.frees = 0

    # -- primitive operations ------------------------------------------------

    def alloc(self) -> BlockId:
        bid = self._next_id
        self._next_id += 1
        self._blocks[bid] = []
        self.allocations += 1
        return bid

    def read(self, bid: BlockId) -> list:
        """Return the block's records. Callers must treat the list as read-only."""
        try:
            data = self._blocks[bid]
        except KeyError:
            raise StoreFault(f"read of unknown block {bid}") from None
        flags = self._cache.touch(bid, False)
        if flags:
            if flags & MISS:
                self.reads += 1
            if flags & EVICTED_DIRTY and self._track_writes:
                self.writes += 1
        return data

    def write(self, bid: BlockId, contents: Sequence) -> None:
        if bid not in self._blocks:
            raise StoreFault(f"write to unknown block {bid}")
        if len(contents) > self.B:
            raise StoreFault(f"block {bid}: {len(contents)} records exceed B={self.B}")
        self._blocks[bid] = list(contents)
        if self._cache.touch(bid, True) & EVICTED_DIRTY and self._track_writes:
            self.writes += 1

    def free(self, bid: BlockId) -> None:
        if self._blocks.pop(bid, None) is None:
            raise StoreFault(f"free of unknown block {bid}")
        self._cache.discard(bid)
        self.frees += 1

    def flush(self) -> None:
        n = self._cache.flush()
        if self._track_writes:
            self.writes += n

    def charge_reads(self, n: int) -> None:
        """Account for ``n`` transfers of working data that spilled out of memory."""
        self.reads += n

    def is_live(self, bid: BlockId) -> bool:
        return bid in self._blocks

    def is_cached(self, bid: BlockId) -> bool:
        return bid in self._cache

    # -- accounting ----------------------------------------------------------

    def io_stats(self) -> IOStats:
        return IOStats(self.reads, self.writes, len(self._blocks))

    def reset_stats(self) -> None:
        self.reads = 0
        self.writes = 0

    def drop_cache(self) -> None:
        """Flush dirty blocks, then start from a cold cache."""
        self.flush()
        self._cache.clear()

    # -- multi-block helpers -------------------------------------------------

    def read_all(self, bids: Iterable[BlockId]) -> list:
        out: list = []
        for bid in bids:
            out.extend(self.read(bid))
        return out

    def write_all(self, bids: list[BlockId], records: Sequence,
                  keep_unchanged: bool = False) -> list[BlockId]:
        """Store ``records`` packed B per block, reusing ``bids`` where possible.

        Returns the new block-id list (surplus blocks are freed). With
        ``keep_unchanged`` a reused block whose contents would not change is
        left alone; only callers that already know the old contents (because
        they read the data it was derived from) may ask for this.
        """
        B = self.B
        need = (len(records) + B - 1) // B
        out = bids[:need]
        while len(out) < need:
            out.append(self.alloc())
        for bid in bids[need:]:
            self.free(bid)
        blocks = self._blocks
        for i, bid in enumerate(out):
            chunk = records[i * B:(i + 1) * B]
            if keep_unchanged and blocks.get(bid) == chunk:
                continue
            self.write(bid, chunk)
        return out

    def free_all(self, bids: Iterable[BlockId]) -> None:
        for bid in bids:
            self.free(bid)

    def peek(self, bid: BlockId) -> Any:
        """Uncharged read for invariant checkers and tests."""
        try:
            return self._blocks[bid]
        except KeyError:
            raise StoreFault(f"peek of unknown block {bid}") from None
