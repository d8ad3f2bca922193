"""Uniform adapters over every structure, plus large-B / small-B dispatch."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..emstore import BlockStore, IOStats, StoreConfig
from ..epst import Epst, EpstParams
from ..geometry import Point
from ..grouped_tree import GroupedParams, GroupedTree
from ..planar_large import PlanarLarge, PlanarParams, Variant
from ..planar_small import PlanarSmall, SmallBParams

STRUCTURES = ("epst3s", "large2d", "large2d-wide", "small2d", "grouped2d")
CHOICES = STRUCTURES + ("auto",)
Y_TOP = 1 << 62               # stands in for +inf in three-sided queries


@dataclass(frozen=True)
class RunParams:
    """Everything needed to build one structure over a fresh store."""

    B: int = 64
    delta: float = 0.25
    eps: float = 0.5
    cache: int = 16
    h: int = 4
    capacity_hint: int = 1 << 16
    strict_regime: bool = False
    small: str = "small2d"     # auto-dispatch target when B is small

    def store(self) -> BlockStore:
        return BlockStore(StoreConfig(self.B, self.cache))


def auto_dispatch(params: RunParams) -> str:
    """planar_large when B^delta >= 4 h log_B N0 for the capacity hint, else the small-B pick."""
    if params.small not in ("small2d", "grouped2d"):
        raise ValueError("small must be 'small2d' or 'grouped2d'")
    n0 = max(params.capacity_hint, 2)
    if params.B ** params.delta >= 4 * params.h * math.log(n0, params.B):
        return "large2d"
    return params.small


class Adapter:
    """Common face: insert, delete, both query kinds, audits, block counts."""

    name: str = ""

    def __init__(self, impl, store: BlockStore):
        self.impl = impl
        self.store = store

    def insert(self, p: Point) -> None:
        self.impl.insert(p)

    def delete(self, p: Point) -> None:
        self.impl.delete(p)

    def query2d(self, a: int, b: int, c: int, d: int) -> list[Point]:
        return self.impl.query2d(a, b, c, d)

    def query3s(self, a: int, b: int, c: int) -> list[Point]:
        return self.impl.query2d(a, b, c, Y_TOP)

    def check_invariants(self) -> list[str]:
        return self.impl.check_invariants()

    def live_blocks(self) -> int:
        return self.store.io_stats().live_blocks

    def io_stats(self) -> IOStats:
        return self.store.io_stats()

    def __len__(self) -> int:
        return len(self.impl)


class EpstAdapter(Adapter):
    """Two-sided-in-y queries are answered by a three-sided query and a filter.

    The tree's weight balance only reacts to growth, so once the live set
    falls below half of everything inserted since the last build, the adapter
    rebuilds the tree bottom-up from the live points.
    """

    def __init__(self, impl, store: BlockStore):
        super().__init__(impl, store)
        self.inserted = 0
        self.rebuilds = 0

    def insert(self, p: Point) -> None:
        self.impl.insert(p)
        self.inserted += 1

    def delete(self, p: Point) -> None:
        self.impl.delete(p)
        t = self.impl
        if self.inserted >= 2 * t.params.B and 2 * len(t) < self.inserted:
            t.bulk_load(t.live_points())
            self.inserted = len(t)
            self.rebuilds += 1

    def query2d(self, a, b, c, d):
        return [p for p in self.impl.query3s((a, b, c)) if p.y <= d]

    def query3s(self, a, b, c):
        return self.impl.query3s((a, b, c))


class PlanarAdapter(Adapter):
    def check_invariants(self) -> list[str]:
        return self.impl.check_invariants(deep=False)


class GroupedAdapter(Adapter):
    def query2d(self, a, b, c, d):
        out = self.impl.query2d(a, b, c, d)
        self.walk_errors = self.impl.walk_violations()
        return out

    def check_invariants(self) -> list[str]:
        return self.impl.check_invariants() + list(getattr(self, "walk_errors", ()))


def make_structure(name: str, params: RunParams) -> Adapter:
    if name == "auto":
        name = auto_dispatch(params)
    store = params.store()
    if name == "epst3s":
        ad = EpstAdapter(Epst(EpstParams(params.B, params.delta, params.h,
                                         params.strict_regime), store), store)
    elif name in ("large2d", "large2d-wide"):
        var = Variant.WIDE_FANOUT if name == "large2d-wide" else Variant.CONST_FANOUT
        pp = PlanarParams(params.B, params.delta, params.h, var, params.strict_regime,
                          params.capacity_hint)
        ad = PlanarAdapter(PlanarLarge(pp, store), store)
    elif name == "small2d":
        sp = SmallBParams(params.B, params.eps, params.capacity_hint, params.delta)
        ad = PlanarAdapter(PlanarSmall(sp, store), store)
    elif name == "grouped2d":
        gp = GroupedParams(params.B, params.eps, params.capacity_hint)
        ad = GroupedAdapter(GroupedTree(gp, store), store)
    else:
        raise ValueError(f"unknown structure {name!r}; pick one of {CHOICES}")
    ad.name = name
    return ad
