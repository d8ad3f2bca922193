"""Replaying a workload: measured runs and oracle-checked verification."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable

from ..geometry import Point, canonical
from ..oracle import OracleSet
from .structures import Adapter, RunParams, make_structure
from .workload import WorkloadOp


@dataclass
class BenchRow:
    structure: str
    B: int
    delta: float
    eps: float
    M: int
    N: int
    op_index: int
    op: str
    reads: int
    writes: int
    reported: int
    live_blocks: int
    invariants_ok: str = ""          # "", "1" or "0" (empty: not checked)


BENCH_FIELDS = [f.name for f in fields(BenchRow)]


def _apply(ad: Adapter, o: WorkloadOp):
    if o.op == "insert":
        ad.insert(Point(*o.args))
        return None
    if o.op == "delete":
        ad.delete(Point(*o.args))
        return None
    if o.op == "query3s":
        return ad.query3s(*o.args)
    return ad.query2d(*o.args)


def _oracle(oracle: OracleSet, o: WorkloadOp):
    if o.op == "insert":
        oracle.o_insert(o.args)
    elif o.op == "delete":
        oracle.o_delete(o.args)
    elif o.op == "query3s":
        return oracle.o_query3s(*o.args)
    else:
        return oracle.o_query2d(*o.args)
    return None


@dataclass
class RunResult:
    structure: str
    rows: list[BenchRow]
    answers: list[tuple[int, list[Point]]]

    def write_results(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            for i, pts in self.answers:
                rec = {"op_index": i, "points": [list(p) for p in pts]}
                fh.write(json.dumps(rec, separators=(",", ":")) + "\n")

    def write_csv(self, path: str | Path) -> None:
        write_rows(self.rows, path)


def write_rows(rows: Iterable, path: str | Path) -> None:
    rows = list(rows)
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(asdict(rows[0])))
        w.writeheader()
        for r in rows:
            w.writerow(asdict(r))


def run(ops: Iterable[WorkloadOp], structure: str, params: RunParams,
        check_every: int = 0) -> RunResult:
    """Replay ops, recording each op's I/O deltas and each query's sorted answer."""
    ad = make_structure(structure, params)
    rows: list[BenchRow] = []
    answers: list[tuple[int, list[Point]]] = []
    before = ad.io_stats()
    for i, o in enumerate(ops):
        got = _apply(ad, o)
        after = ad.io_stats()
        ok = ""
        if check_every and (i + 1) % check_every == 0:
            ok = "0" if ad.check_invariants() else "1"
        rows.append(BenchRow(ad.name, params.B, params.delta, params.eps, params.cache,
                             len(ad), i, o.op, after.reads - before.reads,
                             after.writes - before.writes,
                             0 if got is None else len(got), after.live_blocks, ok))
        if got is not None:
            answers.append((i, canonical(got)))
        before = after
    return RunResult(ad.name, rows, answers)


@dataclass
class VerifyReport:
    structure: str
    ops: int = 0
    queries: int = 0
    checkpoints: int = 0
    first_mismatch: dict | None = None
    invariant_failures: list[tuple[int, list[str]]] = field(default_factory=list)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return (self.first_mismatch is None and not self.invariant_failures
                and self.error is None)

    def summary(self) -> str:
        head = (f"{self.structure}: {'PASS' if self.passed else 'FAIL'} "
                f"ops={self.ops} queries={self.queries} checkpoints={self.checkpoints}")
        lines = [head]
        if self.error:
            lines.append(f"  error: {self.error}")
        if self.first_mismatch:
            m = self.first_mismatch
            lines.append(f"  first mismatch at op {m['op_index']} {m['op']}: "
                         f"{len(m['missing'])} missing, {len(m['extra'])} extra")
        for i, errs in self.invariant_failures[:3]:
            lines.append(f"  invariants broken after op {i}: {errs[0]}")
        return "\n".join(lines)


def verify(ops: Iterable[WorkloadOp], structure: str, params: RunParams,
           check_every: int = 0, adapter: Adapter | None = None) -> VerifyReport:
    """Replay ops against the structure and the brute-force oracle.

    Stops at the first query whose answer set differs. With check_every > 0 the
    structure's invariant audit also runs after every check_every-th op.
    """
    ad = adapter if adapter is not None else make_structure(structure, params)
    rep = VerifyReport(ad.name)
    oracle = OracleSet()
    for i, o in enumerate(ops):
        rep.ops += 1
        want = _oracle(oracle, o)
        try:
            got = _apply(ad, o)
        except Exception as exc:  # report, never mask, a structure crash
            rep.error = f"op {i} {o.op}{o.args}: {type(exc).__name__}: {exc}"
            return rep
        if want is not None:
            rep.queries += 1
            gs, ws = set(got), set(want)
            if gs != ws or len(got) != len(gs):
                rep.first_mismatch = {
                    "op_index": i, "op": o.op, "args": list(o.args),
                    "missing": canonical(ws - gs), "extra": canonical(gs - ws),
                    "duplicates": len(got) - len(gs),
                }
                return rep
        if check_every and (i + 1) % check_every == 0:
            rep.checkpoints += 1
            errs = ad.check_invariants()
            if errs:
                rep.invariant_failures.append((i, errs))
                return rep
    return rep
