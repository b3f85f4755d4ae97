import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from prioctl import cli, harness
from prioctl.cli import int_range, main

MODELS = Path(__file__).resolve().parent.parent / "models"


def model(name):
    return str(MODELS / name)


def test_int_range():
    assert int_range("3") == [3]
    assert int_range("0..4") == [0, 1, 2, 3, 4]
    assert int_range("1,3") == [1, 3]
    for bad in ("4..1", "x", "1..y"):
        with pytest.raises(Exception):
            int_range(bad)


def test_check_ok(capsys):
    assert main(["check", model("ring4_d3.prio")]) == 0
    out = capsys.readouterr().out
    assert "priority order: ok" in out
    assert "a1 -> P2" in out


def test_check_json(capsys):
    assert main(["check", "--json", model("triangle.prio")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["order_valid"] and len(report["cycles"]) == 1


def test_check_cycle_exits_2(capsys):
    assert main(["check", model("cyclic.prio")]) == 2
    assert "CYCLIC" in capsys.readouterr().out


def test_check_confusion_exits_2(capsys):
    assert main(["check", model("confusion.prio")]) == 2
    assert "inhibited by c" in capsys.readouterr().out


def test_run_star1(capsys, tmp_path):
    out_csv = tmp_path / "star1.csv"
    trace = tmp_path / "star1.jsonl"
    code = main(["run", model("star1.prio"), "--max-interactions", "100",
                 "--csv", str(out_csv), "--trace", str(trace)])
    assert code == 0
    out = capsys.readouterr().out
    assert "messages: 300" in out and "validation: valid" in out
    row = next(csv.DictReader(out_csv.open()))
    assert row["messages"] == "300" and row["validated"] == "yes"
    lines = trace.read_text().splitlines()
    assert sum(json.loads(x)["event"] == "send" for x in lines) == 300


def test_run_refuses_confusion_without_force(capsys):
    assert main(["run", model("confusion.prio")]) == 2
    assert "--force" in capsys.readouterr().err
    assert main(["run", model("confusion.prio"), "--force", "--max-interactions", "5"]) in (0, 4)


def test_run_cycle_exits_2():
    assert main(["run", model("cyclic.prio")]) == 2


def test_run_deadlock_exits_3(capsys):
    code = main(["run", model("triangle.prio"), "--schedule", "adversarial", "--seed", "1",
                 "--no-cyclebreaking", "--max-interactions", "30"])
    assert code == 3
    assert "final state" in capsys.readouterr().out


def test_run_invalid_exits_4(monkeypatch, capsys):
    real = harness.validate_run

    def broken(result, **kw):
        v = real(result, **kw)
        v.no_duplication = False
        return v

    monkeypatch.setattr(harness, "validate_run", broken)
    assert main(["run", model("star1.prio"), "--max-interactions", "3"]) == 4
    assert "duplication" in capsys.readouterr().out


def test_usage_errors_exit_1(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["run"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["run", model("star1.prio"), "--latency-ms", "-1"])
    assert info.value.code == 1
    assert main(["run", str(tmp_path / "missing.prio")]) == 1
    bad = tmp_path / "bad.prio"
    bad.write_text("process P1 init s\n  s -a->\n")
    assert main(["check", str(bad)]) == 1
    assert f"{bad}:2:" in capsys.readouterr().err
    assert main(["bench", "ring", "--d", "9", "--seeds", "1"]) == 1
    assert main(["bench", "star", "--k", "0", "--seeds", "1"]) == 1


def test_exhaustive_validation_too_large(capsys):
    code = main(["run", model("star1.prio"), "--max-interactions", "20", "--validate", "exhaustive"])
    assert code == 1
    assert "exhaustive" in capsys.readouterr().err


def test_bench_ring_csv(tmp_path, capsys):
    out = tmp_path / "ring.csv"
    assert main(["bench", "ring", "--seeds", "2", "--d", "0..4", "--csv", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 10
    by_d = {}
    for r in rows:
        by_d.setdefault(int(r["d_or_k"]), []).append(float(r["msg_count"]))
    assert [by_d[d][0] for d in range(5)] == [4, 4, 6, 6, 6]
    assert len(capsys.readouterr().err.strip().splitlines()) == 5


def test_bench_star_stdout(capsys):
    assert main(["bench", "star", "--k", "1..2", "--interactions", "20", "--seeds", "1"]) == 0
    text = capsys.readouterr().out
    rows = list(csv.DictReader(text.splitlines()))
    assert [r["config"] for r in rows] == ["star_k1", "star_k2"]


def test_bench_aborts_exit_4(monkeypatch, tmp_path):
    def boom(cfg, dump_dir=None):
        raise harness.SweepAborted(cfg.name, 0, "fabricated", None)

    monkeypatch.setattr(cli.harness, "sweep", boom)
    assert main(["bench", "star", "--k", "1", "--seeds", "1"]) == 4


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "prioctl", "check", model("star1.prio")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "confusion: none" in proc.stdout
