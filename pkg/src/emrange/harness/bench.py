"""Parameter sweeps measuring update I/O, query I/O and space per structure.

For each (structure, B, N) the sweep inserts N uniform points one at a time,
then runs random queries and records each query's I/O and output size K.
Per structure, query I/O is fitted to ``alpha * log_B N + beta * (1 + K/B)``
by least squares, giving empirical envelope constants.
"""
from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..geometry import Point
from .replay import write_rows
from .structures import STRUCTURES, RunParams, make_structure
from .workload import COORD_MAX, random_span

SWEEP_B = (16, 64, 256)
SWEEP_N = (10_000, 100_000)


@dataclass
class SweepRow:
    structure: str
    B: int
    N: int
    M: int
    update_io: float          # mean I/Os per insert while growing to N
    query_io: float           # mean I/Os per query at size N
    mean_K: float
    live_blocks: int
    space_c: float            # live_blocks / ((N/B) log2 N)
    blocks_per_N_over_B: float
    seconds: float


@dataclass
class EnvelopeFit:
    structure: str
    alpha_logBN: float        # coefficient of log_B N
    beta_output: float        # coefficient of (1 + K/B)
    slope_K_over_B: float     # slope of query I/O against K/B alone
    update_slope_logBN: float
    samples: int


@dataclass
class QuerySample:
    structure: str
    B: int
    N: int
    K: int
    io: int


def measure(structure: str, params: RunParams, n: int, n_queries: int = 200,
            seed: int = 0, samples: list | None = None) -> SweepRow:
    rng = random.Random(seed)
    params = replace(params, capacity_hint=n)
    t0 = time.perf_counter()
    ad = make_structure(structure, params)
    s0 = ad.io_stats()
    for i in range(n):
        ad.insert(Point(rng.randrange(COORD_MAX), rng.randrange(COORD_MAX), i))
    s1 = ad.io_stats()
    upd = (s1.total - s0.total) / max(n, 1)
    tot_io = tot_k = 0
    for _ in range(n_queries):
        a, b = random_span(rng)
        c, d = random_span(rng)
        before = ad.io_stats()
        k = len(ad.query2d(a, b, c, d))
        io = ad.io_stats().total - before.total
        tot_io += io
        tot_k += k
        if samples is not None:
            samples.append(QuerySample(ad.name, params.B, n, k, io))
    blocks = ad.live_blocks()
    denom = (n / params.B) * math.log2(max(n, 2))
    return SweepRow(ad.name, params.B, n, params.cache, upd,
                    tot_io / max(n_queries, 1), tot_k / max(n_queries, 1), blocks,
                    blocks / denom if denom else 0.0,
                    blocks / max(n / params.B, 1e-9), time.perf_counter() - t0)


def fit_envelope(structure: str, samples: list[QuerySample],
                 rows: list[SweepRow]) -> EnvelopeFit:
    qs = [s for s in samples if s.structure == structure]
    logbn = np.array([math.log(max(s.N, 2), s.B) for s in qs])
    out = np.array([s.K / s.B for s in qs])
    io = np.array([s.io for s in qs], dtype=float)
    if len(qs) >= 2:
        (alpha, beta), *_ = np.linalg.lstsq(np.column_stack([logbn, 1 + out]), io, rcond=None)
        (_, slope), *_ = np.linalg.lstsq(np.column_stack([np.ones_like(out), out]), io,
                                         rcond=None)
    else:
        alpha = beta = slope = float("nan")
    rs = [r for r in rows if r.structure == structure]
    if len(rs) >= 2:
        x = np.array([math.log(max(r.N, 2), r.B) for r in rs])
        y = np.array([r.update_io for r in rs])
        (_, uslope), *_ = np.linalg.lstsq(np.column_stack([np.ones_like(x), x]), y,
                                          rcond=None)
    else:
        uslope = float("nan")
    return EnvelopeFit(structure, float(alpha), float(beta), float(slope),
                       float(uslope), len(qs))


def bench(structures=STRUCTURES, Bs=SWEEP_B, Ns=SWEEP_N, base: RunParams | None = None,
          n_queries: int = 200, seed: int = 0, progress=None):
    """Run the sweep; returns (rows, fits)."""
    base = base or RunParams()
    rows: list[SweepRow] = []
    samples: list[QuerySample] = []
    for s in structures:
        for B in Bs:
            for n in Ns:
                row = measure(s, replace(base, B=B), n, n_queries, seed, samples)
                rows.append(row)
                if progress:
                    progress(row)
    names = list(dict.fromkeys(r.structure for r in rows))
    fits = [fit_envelope(s, samples, rows) for s in names]
    return rows, fits


def write_bench(rows, fits, path) -> str:
    """Write the sweep CSV at path and the fitted constants beside it."""
    path = Path(path)
    write_rows(rows, path)
    fit_path = path.with_name(path.stem + ".fit.csv")
    write_rows(fits, fit_path)
    return str(fit_path)
