"""Command line: ``emrange gen|run|verify|bench``.

Exit status: 0 on success (verify passed), 1 when verify finds a mismatch or
a broken invariant, 2 on a usage error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import WorkloadError
from .bench import SWEEP_B, SWEEP_N, bench, write_bench
from .replay import run, verify
from .structures import CHOICES, STRUCTURES, RunParams, auto_dispatch
from .workload import DISTRIBUTIONS, gen, read_workload, write_workload

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2


def _params_args(p: argparse.ArgumentParser, many: bool = False) -> None:
    if many:
        p.add_argument("--structure", choices=CHOICES, nargs="+", default=list(STRUCTURES))
        p.add_argument("--B", type=int, nargs="+", default=list(SWEEP_B))
    else:
        p.add_argument("--structure", choices=CHOICES, default="auto")
        p.add_argument("--B", type=int, default=64)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--cache", type=int, default=16, help="cache size M in blocks")
    p.add_argument("--capacity", type=int, default=None,
                   help="capacity hint N0 (default: number of inserts in the workload)")
    p.add_argument("--small", choices=("small2d", "grouped2d"), default="small2d",
                   help="structure 'auto' picks when B is small")
    p.add_argument("--strict", action="store_true", help="strict query regime")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="emrange",
                                 description="External-memory range reporting workbench")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="write a seeded JSONL workload")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n", type=int, default=6000, help="number of inserted points")
    g.add_argument("--queries", type=int, default=2000)
    g.add_argument("--deletes", type=int, default=None, help="default: n // 3")
    g.add_argument("--distribution", choices=DISTRIBUTIONS, default="uniform")
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="replay a workload, write answers and per-op I/O")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--out", required=True, help="results JSONL")
    r.add_argument("--csv", default=None, help="per-op CSV (default: <out>.csv)")
    r.add_argument("--check-every", type=int, default=0)
    _params_args(r)

    v = sub.add_parser("verify", help="replay a workload against the oracle")
    v.add_argument("--in", dest="inp", required=True)
    v.add_argument("--check-every", type=int, default=0)
    _params_args(v)

    b = sub.add_parser("bench", help="sweep B, N and structures; write CSV")
    b.add_argument("--n", type=int, nargs="+", default=list(SWEEP_N))
    b.add_argument("--queries", type=int, default=200)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    _params_args(b, many=True)
    return ap


def _run_params(ns, B: int, n0: int) -> RunParams:
    return RunParams(B=B, delta=ns.delta, eps=ns.eps, cache=ns.cache,
                     capacity_hint=ns.capacity or max(n0, 2),
                     strict_regime=ns.strict, small=ns.small)


def _load(ns):
    wl = read_workload(ns.inp)
    params = _run_params(ns, ns.B, wl.counts().get("insert", 0))
    structure = auto_dispatch(params) if ns.structure == "auto" else ns.structure
    return wl, params, structure


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return _dispatch(ns)
    except (OSError, WorkloadError, ValueError) as exc:
        print(f"emrange: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _dispatch(ns) -> int:
    if ns.cmd == "gen":
        wl = gen(ns.seed, ns.n, ns.queries, ns.distribution, ns.deletes)
        write_workload(wl, ns.out)
        print(f"wrote {len(wl)} ops to {ns.out} {wl.counts()}")
        return EXIT_OK

    if ns.cmd == "run":
        wl, params, structure = _load(ns)
        res = run(wl.ops, structure, params, ns.check_every)
        res.write_results(ns.out)
        csv_path = ns.csv or ns.out + ".csv"
        res.write_csv(csv_path)
        reads = sum(r.reads for r in res.rows)
        writes = sum(r.writes for r in res.rows)
        print(f"{structure}: {len(res.rows)} ops, {reads} reads, {writes} writes; "
              f"answers -> {ns.out}, per-op I/O -> {csv_path}")
        if any(r.invariants_ok == "0" for r in res.rows):
            print("invariant audit failed at some checkpoint", file=sys.stderr)
            return EXIT_MISMATCH
        return EXIT_OK

    if ns.cmd == "verify":
        wl, params, structure = _load(ns)
        rep = verify(wl.ops, structure, params, ns.check_every)
        print(rep.summary())
        return EXIT_OK if rep.passed else EXIT_MISMATCH

    # bench
    structures = []
    for s in ns.structure:
        if s == "auto":
            s = auto_dispatch(_run_params(ns, ns.B[0], max(ns.n)))
        if s not in structures:
            structures.append(s)

    def progress(row):
        print(f"{row.structure:13s} B={row.B:<4d} N={row.N:<7d} update={row.update_io:.3f} "
              f"query={row.query_io:.1f} K={row.mean_K:.0f} blocks={row.live_blocks} "
              f"c={row.space_c:.2f} ({row.seconds:.1f}s)", flush=True)

    base = _run_params(ns, ns.B[0], max(ns.n))
    rows, fits = bench(structures, ns.B, ns.n, base, ns.queries, ns.seed, progress)
    fit_path = write_bench(rows, fits, ns.out)
    for f in fits:
        print(f"{f.structure:13s} I/O ~ {f.alpha_logBN:.2f} log_B N + "
              f"{f.beta_output:.2f} (1 + K/B); slope vs K/B {f.slope_K_over_B:.2f}")
    print(f"sweep -> {ns.out}, fits -> {fit_path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
