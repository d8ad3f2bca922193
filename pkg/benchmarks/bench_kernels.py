"""Compiled kernels versus the pure-Python fallback.

Each backend runs in its own interpreter (the fallback is forced with
EMRANGE_PURE_PYTHON=1), timing the hot kernels in isolation and one
end-to-end oracle replay per structure. I/O counts must be identical across
backends; only wall time may differ.

    python benchmarks/bench_kernels.py [--repeat 5] [--ops 4000]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, random, sys, time, timeit
from emrange import _kernels as K
from emrange.geometry import Point
from emrange.harness.replay import run
from emrange.harness.structures import RunParams
from emrange.harness.workload import mixed

repeat, n_ops = int(sys.argv[1]), int(sys.argv[2])
rng = random.Random(0)
pts = [Point(rng.randrange(10**6), rng.randrange(10**6), i) for i in range(4096)]
ydesc = sorted(pts, key=lambda p: -p.y)
yasc = ydesc[::-1]
bids = [rng.randrange(256) for _ in range(20000)]

def lru():
    core = K.LRUCore(16)
    for i, b in enumerate(bids):
        core.touch(b, i & 1)

micro = {
    "lru_touch x20000": lru,
    "filter_2d x4096": lambda: K.filter_2d(pts, 2 * 10**5, 8 * 10**5, 10**5, 9 * 10**5),
    "filter_3s x4096": lambda: K.filter_3s(pts, 2 * 10**5, 8 * 10**5, 5 * 10**5),
    "scan_ydesc x4096": lambda: K.scan_ydesc(ydesc, 0, 10**6, 2 * 10**5),
    "scan_yasc x4096": lambda: K.scan_yasc(yasc, 0, 8 * 10**5, 0, 10**6),
}
out = {"backend": K.BACKEND, "micro": {}, "replay": {}}
for name, fn in micro.items():
    out["micro"][name] = min(timeit.repeat(fn, number=10, repeat=repeat)) / 10
wl = mixed(1, n_ops)
for s in ("epst3s", "large2d", "small2d", "grouped2d"):
    t0 = time.perf_counter()
    res = run(wl.ops, s, RunParams(B=64, capacity_hint=n_ops))
    io = sum(r.reads + r.writes for r in res.rows)
    out["replay"][s] = [time.perf_counter() - t0, io]
print(json.dumps(out))
"""


def measure(pure: bool, repeat: int, ops: int) -> dict:
    env = dict(os.environ)
    env["EMRANGE_PURE_PYTHON"] = "1" if pure else "0"
    proc = subprocess.run([sys.executable, "-c", CHILD, str(repeat), str(ops)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--ops", type=int, default=4000, help="ops per replay workload")
    ns = ap.parse_args(argv)
    fast = measure(False, ns.repeat, ns.ops)
    slow = measure(True, ns.repeat, ns.ops)
    if fast["backend"] != "cython":
        print("compiled kernels not built; run `python setup.py build_ext --inplace`")
        return 1
    print(f"{'kernel':24s} {'cython':>12s} {'python':>12s} {'speedup':>8s}")
    for name, t in fast["micro"].items():
        tp = slow["micro"][name]
        print(f"{name:24s} {t * 1e3:10.3f}ms {tp * 1e3:10.3f}ms {tp / t:7.2f}x")
    print(f"\n{'replay (' + str(ns.ops) + ' ops, B=64)':24s} {'cython':>12s} {'python':>12s} "
          f"{'speedup':>8s}  I/Os")
    same = True
    for s, (t, io) in fast["replay"].items():
        tp, iop = slow["replay"][s]
        same &= io == iop
        print(f"{s:24s} {t:11.2f}s {tp:11.2f}s {tp / t:7.2f}x  {io}"
              + ("" if io == iop else f" != {iop}"))
    print("\nI/O counts identical across backends:", "yes" if same else "NO")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
