import json

import pytest

from emrange.harness.cli import EXIT_MISMATCH, EXIT_OK, EXIT_USAGE, main
from emrange.harness.replay import run, verify
from emrange.harness.structures import (STRUCTURES, RunParams, auto_dispatch,
                                        make_structure)
from emrange.harness.workload import (WorkloadOp, gen, meta_path, mixed, read_workload,
                                      write_workload)
from emrange.errors import WorkloadError
from emrange.geometry import Point


def test_same_seed_gives_identical_files(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_workload(gen(5, 300, 100, "clustered"), a)
    write_workload(gen(5, 300, 100, "clustered"), b)
    assert a.read_bytes() == b.read_bytes()
    assert meta_path(a).read_bytes() == meta_path(b).read_bytes()
    assert gen(6, 300, 100).ops != gen(5, 300, 100).ops


def test_zero_queries_is_update_only():
    wl = gen(1, 500, 0)
    assert set(wl.counts()) == {"insert", "delete"}
    assert wl.counts() == {"insert": 500, "delete": 500 // 3}


def test_clustered_points_stay_in_boxes():
    wl = gen(2, 5000, 0, "clustered")
    assert len(wl.boxes) == 8
    assert wl.inside_share() >= 0.90


def test_deletes_target_live_points_and_ids_are_unique():
    wl = mixed(3, 3000)
    live = set()
    ids = set()
    for o in wl.ops:
        if o.op == "insert":
            assert o.args[2] not in ids
            ids.add(o.args[2])
            live.add(o.args)
        elif o.op == "delete":
            live.remove(o.args)
    c = wl.counts()
    assert c["insert"] == 1800 and c["delete"] == 600
    assert c["query2d"] + c.get("query3s", 0) == 600


def test_x_sorted_inserts_ascend():
    xs = [o.args[0] for o in gen(4, 400, 10, "x-sorted").ops if o.op == "insert"]
    assert xs == sorted(xs)


def test_round_trip_and_malformed_lines(tmp_path):
    wl = gen(7, 100, 50)
    path = tmp_path / "w.jsonl"
    write_workload(wl, path)
    back = read_workload(path)
    assert back.ops == wl.ops and back.seed == 7
    for bad in ('{"op":"insert","x":1,"y":2}', '{"op":"fly"}', "not json",
                '{"op":"query3s","a":1.5,"b":2,"c":3}'):
        with pytest.raises(WorkloadError):
            WorkloadOp.from_json(bad)


def test_auto_dispatch():
    big = RunParams(B=2**20, delta=0.25, capacity_hint=10**6)
    assert big.B ** big.delta >= 4 * big.h * 1      # 32 >= 16 * log_B N
    assert auto_dispatch(big) == "large2d"
    assert auto_dispatch(RunParams(B=64)) == "small2d"
    assert auto_dispatch(RunParams(B=64, small="grouped2d")) == "grouped2d"
    with pytest.raises(ValueError):
        auto_dispatch(RunParams(small="epst3s"))


@pytest.mark.parametrize("name", STRUCTURES)
def test_every_structure_verifies(name):
    wl = gen(8, 1500, 400)
    rep = verify(wl.ops, name, RunParams(B=16, capacity_hint=1500), check_every=200)
    assert rep.passed, rep.summary()
    assert rep.queries == 400 and rep.checkpoints == len(wl) // 200


def test_verify_reports_first_mismatch():
    class Lossy:
        def __init__(self, inner):
            self.inner = inner
            self.name = inner.name

        def __getattr__(self, k):
            return getattr(self.inner, k)

        def query2d(self, *q):
            return self.inner.query2d(*q)[1:]

        def query3s(self, *q):
            return self.inner.query3s(*q)[1:]

    ops = [WorkloadOp("insert", (1, 1, 0)), WorkloadOp("insert", (2, 2, 1)),
           WorkloadOp("query2d", (0, 5, 0, 5))]
    ad = Lossy(make_structure("large2d", RunParams(B=16)))
    rep = verify(ops, "large2d", RunParams(B=16), adapter=ad)
    assert not rep.passed
    m = rep.first_mismatch
    assert m["op_index"] == 2 and len(m["missing"]) == 1 and m["extra"] == []


def test_run_records_io_per_op(tmp_path):
    wl = gen(9, 300, 100)
    res = run(wl.ops, "epst3s", RunParams(B=16), check_every=100)
    assert len(res.rows) == len(wl)
    assert all(r.reads >= 0 and r.writes >= 0 for r in res.rows)
    assert [r.invariants_ok for r in res.rows if r.invariants_ok] == ["1"] * (len(wl) // 100)
    out = tmp_path / "r.jsonl"
    res.write_results(out)
    lines = [json.loads(x) for x in out.read_text().splitlines()]
    assert len(lines) == 100
    assert all(r["points"] == sorted(r["points"], key=lambda p: (p[0], p[1], p[2]))
               for r in lines)


def test_cli_end_to_end(tmp_path, capsys):
    w = str(tmp_path / "w.jsonl")
    assert main(["gen", "--seed", "1", "--n", "400", "--queries", "100", "--out", w]) == EXIT_OK
    assert main(["verify", "--in", w, "--structure", "grouped2d", "--B", "16",
                 "--check-every", "100"]) == EXIT_OK
    out = str(tmp_path / "r.jsonl")
    assert main(["run", "--in", w, "--out", out, "--structure", "auto", "--B", "16"]) == EXIT_OK
    assert (tmp_path / "r.jsonl.csv").exists()
    csv_path = str(tmp_path / "b.csv")
    assert main(["bench", "--structure", "epst3s", "--B", "16", "--n", "300", "600",
                 "--queries", "20", "--out", csv_path]) == EXIT_OK
    assert (tmp_path / "b.fit.csv").exists()
    assert "PASS" in capsys.readouterr().out


def test_cli_usage_errors(tmp_path):
    assert main([]) == EXIT_USAGE
    assert main(["verify", "--in", str(tmp_path / "missing.jsonl")]) == EXIT_USAGE
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"op":"nope"}\n')
    assert main(["verify", "--in", str(bad)]) == EXIT_USAGE
    assert main(["gen", "--n", "-1", "--out", str(tmp_path / "x")]) == EXIT_USAGE


def test_cli_invalid_workload_is_usage_error(tmp_path):
    # deleting a point that was never inserted makes the workload itself invalid
    w = tmp_path / "w.jsonl"
    w.write_text('{"op":"delete","x":1,"y":1,"id":0}\n')
    assert main(["verify", "--in", str(w), "--structure", "small2d", "--B", "16"]) == EXIT_USAGE


def test_cli_reports_mismatch(tmp_path, monkeypatch):
    import emrange.harness.replay as replay

    real = replay.make_structure

    def lossy(name, params):
        ad = real(name, params)
        inner = ad.query2d
        ad.query2d = lambda *q: inner(*q)[1:]
        return ad

    monkeypatch.setattr(replay, "make_structure", lossy)
    w = tmp_path / "w.jsonl"
    w.write_text('{"op":"insert","x":1,"y":1,"id":0}\n'
                 '{"op":"query2d","a":0,"b":5,"c":0,"d":5}\n')
    assert main(["verify", "--in", str(w), "--structure", "large2d", "--B", "16"]) == EXIT_MISMATCH


def test_epst_adapter_rebuilds_after_shrinking():
    ad = make_structure("epst3s", RunParams(B=16))
    pts = [Point(i, (i * 7919) % 1000, i) for i in range(600)]
    for p in pts:
        ad.insert(p)
    for p in pts[:400]:
        ad.delete(p)
    assert ad.rebuilds == 1 and ad.inserted == 299
    assert ad.check_invariants() == []
    assert set(ad.query3s(0, 10**6, 0)) == set(pts[400:])
