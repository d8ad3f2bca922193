"""Seeded workload generation and JSONL (de)serialization.

A workload is a sequence of :class:`WorkloadOp` records, one JSON object per
line with integer fields only::

    {"op": "insert", "x": 5, "y": 9, "id": 0}
    {"op": "delete", "x": 5, "y": 9, "id": 0}
    {"op": "query3s", "a": 0, "b": 10, "c": 4}
    {"op": "query2d", "a": 0, "b": 10, "c": 4, "d": 7}

Point ids are unique over the whole workload, so every live point is
identified by its id alone and deletes always name a live point.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

from ..errors import WorkloadError

COORD_MAX = 1 << 20
DISTRIBUTIONS = ("uniform", "clustered", "x-sorted")
CLUSTER_COUNT = 8
CLUSTER_SHARE = 0.95          # fraction of clustered points drawn inside a box
QUERY3S_SHARE = 0.25          # fraction of queries that are three-sided

_FIELDS = {
    "insert": ("x", "y", "id"),
    "delete": ("x", "y", "id"),
    "query3s": ("a", "b", "c"),
    "query2d": ("a", "b", "c", "d"),
}


class WorkloadOp(NamedTuple):
    """One operation; ``args`` follows the field order of its kind."""

    op: str
    args: tuple[int, ...]

    @property
    def is_query(self) -> bool:
        return self.op.startswith("query")

    def to_json(self) -> str:
        rec = {"op": self.op}
        rec.update(zip(_FIELDS[self.op], self.args))
        return json.dumps(rec, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "WorkloadOp":
        try:
            rec = json.loads(line)
            kind = rec["op"]
            names = _FIELDS[kind]
            args = tuple(rec[f] for f in names)
        except (ValueError, KeyError, TypeError) as exc:
            raise WorkloadError(f"malformed workload line: {line.strip()!r}") from exc
        if not all(type(v) is int for v in args):
            raise WorkloadError(f"non-integer field in: {line.strip()!r}")
        return cls(kind, args)


@dataclass(frozen=True)
class Box:
    x0: int
    x1: int
    y0: int
    y1: int

    def contains(self, x: int, y: int) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1


@dataclass
class Workload:
    ops: list[WorkloadOp]
    seed: int
    distribution: str
    boxes: list[Box] = field(default_factory=list)

    def __iter__(self) -> Iterator[WorkloadOp]:
        return iter(self.ops)

    def __len__(self) -> int:
        return len(self.ops)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for o in self.ops:
            out[o.op] = out.get(o.op, 0) + 1
        return out

    def inserted_points(self) -> list[tuple[int, int, int]]:
        return [o.args for o in self.ops if o.op == "insert"]

    def inside_share(self) -> float:
        """Fraction of inserted points lying in a declared cluster box."""
        pts = self.inserted_points()
        if not pts:
            return 1.0
        hit = sum(1 for x, y, _ in pts if any(b.contains(x, y) for b in self.boxes))
        return hit / len(pts)

    def meta(self) -> dict:
        return {
            "seed": self.seed,
            "distribution": self.distribution,
            "counts": self.counts(),
            "boxes": [[b.x0, b.x1, b.y0, b.y1] for b in self.boxes],
        }


# ------------------------------------------------------------------ generator

def _cluster_boxes(rng: random.Random) -> list[Box]:
    boxes = []
    for _ in range(CLUSTER_COUNT):
        w = rng.randint(COORD_MAX // 64, COORD_MAX // 16)
        h = rng.randint(COORD_MAX // 64, COORD_MAX // 16)
        x0 = rng.randrange(0, COORD_MAX - w)
        y0 = rng.randrange(0, COORD_MAX - h)
        boxes.append(Box(x0, x0 + w, y0, y0 + h))
    return boxes


def _points(rng: random.Random, n: int, distribution: str, boxes: list[Box]):
    if distribution == "uniform":
        return [(rng.randrange(COORD_MAX), rng.randrange(COORD_MAX)) for _ in range(n)]
    if distribution == "clustered":
        out = []
        for _ in range(n):
            if rng.random() < CLUSTER_SHARE:
                b = rng.choice(boxes)
                out.append((rng.randint(b.x0, b.x1), rng.randint(b.y0, b.y1)))
            else:
                out.append((rng.randrange(COORD_MAX), rng.randrange(COORD_MAX)))
        return out
    if distribution == "x-sorted":
        # inserts arrive in increasing x: every insert lands on the rightmost
        # path, the worst case for split and rebalancing work
        xs = sorted(rng.randrange(COORD_MAX) for _ in range(n))
        return [(x, rng.randrange(COORD_MAX)) for x in xs]
    raise ValueError(f"unknown distribution {distribution!r}; pick one of {DISTRIBUTIONS}")


def random_span(rng: random.Random) -> tuple[int, int]:
    # log-uniform widths from the full range down to ~COORD_MAX / 2^10
    width = int(COORD_MAX * 2.0 ** -rng.uniform(0.0, 10.0))
    lo = rng.randrange(0, COORD_MAX - width + 1)
    return lo, lo + width


def _query(rng: random.Random) -> WorkloadOp:
    a, b = random_span(rng)
    if rng.random() < QUERY3S_SHARE:
        return WorkloadOp("query3s", (a, b, rng.randrange(COORD_MAX)))
    c, d = random_span(rng)
    return WorkloadOp("query2d", (a, b, c, d))


def gen(seed: int, n_points: int, n_queries: int, distribution: str = "uniform",
        n_deletes: int | None = None) -> Workload:
    """Deterministic workload of n_points inserts, deletes and n_queries queries.

    Deletes default to ``n_points // 3`` and always target a live point. Op
    kinds are interleaved at random; a delete drawn while nothing is live is
    postponed to the next slot.
    """
    if n_points < 0 or n_queries < 0:
        raise ValueError("counts must be non-negative")
    if distribution not in DISTRIBUTIONS:
        raise ValueError(f"unknown distribution {distribution!r}; pick one of {DISTRIBUTIONS}")
    n_deletes = n_points // 3 if n_deletes is None else n_deletes
    if not 0 <= n_deletes <= n_points:
        raise ValueError("n_deletes must lie in [0, n_points]")
    rng = random.Random(seed)
    boxes = _cluster_boxes(rng) if distribution == "clustered" else []
    coords = _points(rng, n_points, distribution, boxes)
    kinds = ["insert"] * n_points + ["delete"] * n_deletes + ["query"] * n_queries
    rng.shuffle(kinds)

    ops: list[WorkloadOp] = []
    live: list[tuple[int, int, int]] = []
    owed = 0
    nxt = 0
    for kind in kinds:
        if kind == "insert":
            x, y = coords[nxt]
            p = (x, y, nxt)
            nxt += 1
            live.append(p)
            ops.append(WorkloadOp("insert", p))
        elif kind == "query":
            ops.append(_query(rng))
        else:
            owed += 1
        while owed and live:
            i = rng.randrange(len(live))
            live[i], live[-1] = live[-1], live[i]
            ops.append(WorkloadOp("delete", live.pop()))
            owed -= 1
    return Workload(ops, seed, distribution, boxes)


def mixed(seed: int, n_ops: int, distribution: str = "uniform",
          mix: tuple[int, int, int] = (60, 20, 20)) -> Workload:
    """Workload of about n_ops ops split insert/delete/query by ``mix``."""
    tot = sum(mix)
    n_ins = n_ops * mix[0] // tot
    n_del = n_ops * mix[1] // tot
    return gen(seed, n_ins, n_ops - n_ins - n_del, distribution, n_deletes=n_del)


# ------------------------------------------------------------------------ I/O

def meta_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_workload(wl: Workload, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for o in wl.ops:
            fh.write(o.to_json())
            fh.write("\n")
    meta_path(path).write_text(json.dumps(wl.meta(), indent=1, sort_keys=True) + "\n",
                               encoding="utf-8")


def iter_ops(lines: Iterable[str]) -> Iterator[WorkloadOp]:
    for line in lines:
        if line.strip():
            yield WorkloadOp.from_json(line)


def read_workload(path: str | Path) -> Workload:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        ops = list(iter_ops(fh))
    seed, dist, boxes = 0, "unknown", []
    mp = meta_path(path)
    if mp.exists():
        meta = json.loads(mp.read_text(encoding="utf-8"))
        seed, dist = meta.get("seed", 0), meta.get("distribution", "unknown")
        boxes = [Box(*b) for b in meta.get("boxes", [])]
    return Workload(ops, seed, dist, boxes)
