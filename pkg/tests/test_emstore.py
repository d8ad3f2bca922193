from collections import OrderedDict

import pytest
from hypothesis import given
from hypothesis import strategies as st

from emrange.emstore import BlockStore, StoreConfig, StoreFault


def store(B=4, M=2):
    return BlockStore(StoreConfig(B, M))


def test_first_alloc_makes_one_live_block():
    s = store()
    bid = s.alloc()
    assert s.io_stats().live_blocks == 1
    assert s.is_live(bid)


def test_two_allocs_are_distinct():
    s = store()
    assert s.alloc() != s.alloc()


def test_ids_are_never_reused():
    s = store()
    b0 = s.alloc()
    s.free(b0)
    assert s.alloc() != b0


def test_repeat_read_hits_cache():
    s = store(M=1)
    b0 = s.alloc()
    s.drop_cache()
    s.reset_stats()
    s.read(b0)
    s.read(b0)
    assert s.io_stats().reads == 1


def test_single_block_cache_evicts():
    s = store(M=1)
    b0, b1 = s.alloc(), s.alloc()
    s.drop_cache()
    s.reset_stats()
    for b in (b0, b1, b0):
        s.read(b)
    assert s.io_stats().reads == 3


def test_read_of_freed_block_faults():
    s = store()
    b0 = s.alloc()
    s.free(b0)
    with pytest.raises(StoreFault):
        s.read(b0)


def test_oversized_write_faults():
    s = store(B=4)
    b0 = s.alloc()
    with pytest.raises(StoreFault):
        s.write(b0, list(range(5)))


def test_write_then_flush_costs_one_write():
    s = store()
    b0 = s.alloc()
    s.flush()
    s.reset_stats()
    s.write(b0, [1, 2])
    s.flush()
    assert s.io_stats().writes == 1
    assert s.read(b0) == [1, 2]


def test_reset_keeps_live_blocks():
    s = store()
    for _ in range(3):
        s.alloc()
    s.read(0)
    s.reset_stats()
    st_ = s.io_stats()
    assert (st_.reads, st_.writes, st_.live_blocks) == (0, 0, 3)


def test_free_everything_leaves_nothing_live():
    s = store()
    ids = [s.alloc() for _ in range(5)]
    s.free_all(ids)
    assert s.io_stats().live_blocks == 0


def test_bad_config_rejected():
    with pytest.raises(ValueError):
        StoreConfig(block_capacity_B=2)
    with pytest.raises(ValueError):
        StoreConfig(cache_blocks_M=0)


def test_write_all_packs_and_frees_surplus():
    s = store(B=4)
    bids = s.write_all([], list(range(10)))
    assert len(bids) == 3
    bids = s.write_all(bids, list(range(3)))
    assert len(bids) == 1
    assert s.io_stats().live_blocks == 1


def reference_misses(accesses, M):
    """Miss count of an exact LRU cache with room for M blocks."""
    cache: OrderedDict = OrderedDict()
    misses = 0
    for b in accesses:
        if b in cache:
            cache.move_to_end(b)
            continue
        misses += 1
        cache[b] = None
        if len(cache) > M:
            cache.popitem(last=False)
    return misses


@given(st.integers(1, 6), st.lists(st.integers(0, 9), max_size=200))
def test_reads_match_reference_lru(M, accesses):
    s = store(M=M)
    for _ in range(10):
        s.alloc()
    s.drop_cache()
    s.reset_stats()
    for b in accesses:
        s.read(b)
    assert s.io_stats().reads == reference_misses(accesses, M)


@given(st.lists(st.tuples(st.sampled_from("afrw"), st.integers(0, 30)), max_size=150))
def test_live_blocks_is_allocs_minus_frees(script):
    s = store()
    live = []
    for kind, k in script:
        if kind == "a" or not live:
            live.append(s.alloc())
        elif kind == "f":
            s.free(live.pop(k % len(live)))
        elif kind == "r":
            s.read(live[k % len(live)])
        else:
            s.write(live[k % len(live)], [k])
    assert s.io_stats().live_blocks == s.allocations - s.frees == len(live)


@given(st.lists(st.tuples(st.booleans(), st.integers(0, 7)), max_size=120))
def test_same_sequence_same_stats(script):
    def replay():
        s = store(M=3)
        ids = [s.alloc() for _ in range(8)]
        for w, k in script:
            if w:
                s.write(ids[k], [k])
            else:
                s.read(ids[k])
        s.flush()
        return s.io_stats()

    assert replay() == replay()
