import json

import numpy as np
import pytest

from fdelab.cli import main
from fdelab.config import build_scenario
from fdelab.runner import csv_bytes, fmt, run, stability_summary, sweep, verify_all, Table

FAST = dict(N=64, T=0.2, snapshots=(0.05, 0.1))


def _write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_fmt_roundtrip():
    for x in (0.1, 1 / 3, 1e-300, 12345678.9):
        assert float(fmt(x)) == x
    assert fmt(True) == "true" and fmt(3) == "3"


def test_csv_bytes():
    data = csv_bytes(Table(("a", "b"), [(1, 0.5), (2, 1 / 3)]))
    lines = data.decode().splitlines()
    assert lines[0] == "a,b"
    assert float(lines[2].split(",")[1]) == 1 / 3


def test_run_layout(tmp_path):
    sc = build_scenario("comparison", dict(FAST, pairs=2))
    m = run(sc, tmp_path)
    d = tmp_path / sc.config_hash()[:16]
    assert m["status"] == "ok"
    assert (d / "manifest.json").exists()
    lines = (d / "verdicts.jsonl").read_text().splitlines()
    rec = json.loads(lines[0])
    assert {"check", "pass", "measured", "tolerance", "anchor"} <= set(rec)
    assert (d / "results.csv").read_text().startswith("check,pass,measured")
    assert list((d / "diagnostics").glob("*.csv"))
    man = json.loads((d / "manifest.json").read_text())
    assert man["config_hash"] == sc.config_hash()
    assert set(man["files"]) >= {"verdicts.jsonl", "results.csv"}
    assert man["info"]["max_violation"] <= 1e-10 * 1e6


def test_run_is_deterministic(tmp_path):
    sc = build_scenario("l1-contraction", dict(FAST, R=5.0, r_min=1e-4))
    run(sc, tmp_path / "a")
    run(sc, tmp_path / "b")
    h = sc.config_hash()[:16]
    for rel in ("results.csv", "fields/snapshots.csv", "diagnostics/l1.csv"):
        assert (tmp_path / "a" / h / rel).read_bytes() == (tmp_path / "b" / h / rel).read_bytes()


def test_run_records_errors(tmp_path):
    # r_min above delta1/16 leaves an empty fit window
    sc = build_scenario("rate-sandwich", dict(FAST, r_min=1e-2, snapshots=(0.1,)))
    m = run(sc, tmp_path)
    assert m["status"] == "error" and not m["passed"]
    assert "WindowTooSmall" in m["error"]


def test_verify_all_detects_tampering(tmp_path):
    sc = build_scenario("comparison", dict(FAST, pairs=1))
    run(sc, tmp_path)
    res = verify_all(tmp_path)
    assert res and all(c for _, _, c, _ in res)
    vf = next(tmp_path.rglob("verdicts.jsonl"))
    rec = json.loads(vf.read_text().splitlines()[0])
    rec["pass"] = not rec["pass"]
    vf.write_text(json.dumps(rec) + "\n")
    res = verify_all(tmp_path)
    checks = {c: ok for _, c, ok, _ in res}
    assert checks["file-integrity"] is False
    assert checks[rec["check"]] is False


def test_sweep_empty(tmp_path):
    assert sweep(build_scenario("cap-sweep", {}), "cap", [], tmp_path) == []


def test_sweep_over_cap(tmp_path):
    sc = build_scenario("l1-contraction", dict(FAST, R=5.0, r_min=1e-4))
    ms = sweep(sc, "cap", ["1e2", "1e3", "1e4"], tmp_path)
    assert [m["status"] for m in ms] == ["ok"] * 3
    stab = next(tmp_path.glob("sweep-*/stability.csv")).read_text().splitlines()
    assert stab[0] == "axis,value_a,value_b,sup_difference,shared_times"
    diffs = [float(row.split(",")[3]) for row in stab[1:]]
    assert len(diffs) == 2 and all(d >= 0 for d in diffs)


def test_stability_summary_identical_runs(p3, mesh256):
    from fdelab.solver_radial import Trajectory
    tr = Trajectory(mesh256, [0.0, 1.0], np.ones((2, 257)))
    table = stability_summary([tr, tr], 0.1)
    assert table.rows == [(0, 1, 0.0, 1)]


def test_cli_run_and_verify(tmp_path, capsys):
    cfg = _write(tmp_path, "[scenario]\nname = comparison\n[mesh]\nN = 64\n"
                           "[profile]\npairs = 1\n[time]\nT = 0.1\nsnapshots = 0.05\n")
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out), "--seed", "7"]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["verify-all", str(out)]) == 0
    assert "0 inconsistent" in capsys.readouterr().out


def test_cli_sweep(tmp_path, capsys):
    cfg = _write(tmp_path, "[scenario]\nname = l1-contraction\n[mesh]\nN = 64\nR = 5\nr_min = 1e-4\n"
                           "[time]\nT = 0.1\nsnapshots = 0.05\n")
    code = main(["sweep", str(cfg), "--axis", "gamma", "--values", "2.75,3.0",
                 "--out", str(tmp_path / "o"), "--jobs", "1"])
    assert code == 0
    assert capsys.readouterr().out.count("status=ok") == 2


def test_cli_errors(tmp_path, capsys):
    bad = _write(tmp_path, "[scenario]\nname = rate-sandwich\n[model]\nm = 0.4\n")
    assert main(["run", str(bad), "--out", str(tmp_path)]) == 2
    assert "(n-2)/n" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.ini")]) == 2
    assert main(["verify-all", str(tmp_path / "empty")]) == 1


def test_cli_failing_check_exit_code(tmp_path):
    cfg = _write(tmp_path, "[scenario]\nname = l1-contraction\n[mesh]\nN = 64\nR = 5\nr_min = 1e-4\n"
                           "[time]\nT = 0.1\nsnapshots = 0.05\n[checks]\nrtol = -1\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 1
