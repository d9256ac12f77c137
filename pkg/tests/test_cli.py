import csv
import json
import subprocess
import sys

import pytest

from wsnagg.bench import CSV_HEADER
from wsnagg.cli import main

TIMING = {"encryption_s", "decryption_s", "aggregation_s", "overall_s", "cpu_energy_j"}


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "wsnagg.cli", *args], capture_output=True, text=True)


def test_selftest_exits_zero():
    proc = _cli("selftest")
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "FAIL" not in proc.stdout


def test_missing_config_exits_one(tmp_path):
    proc = _cli("run", "--config", str(tmp_path / "absent.cfg"))
    assert proc.returncode == 1
    assert "absent.cfg" in proc.stderr


def test_unknown_flag_exits_one(capsys):
    assert main(["run", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err


def test_no_subcommand_exits_one():
    assert main([]) == 1


def test_bad_config_value_exits_one(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("cluster_count = 99\n")
    assert main(["run", "--config", str(cfg)]) == 1
    assert "cluster_count" in capsys.readouterr().err


def test_run_output_is_reproducible(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["run", "--seed", "7", "--out", str(a)]) == 0
    assert main(["run", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    head = json.loads(lines[0])["config"]
    assert head["seed"] == 7 and head["digest"] == "sha256" and head["curve"].startswith("p=")
    rounds = [json.loads(line) for line in lines[1:]]
    assert [r["round"] for r in rounds] == list(range(10))
    assert all(r["ground_truth_ok"] for r in rounds)


def _non_timing(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: v for k, v in r.items() if k not in TIMING} for r in rows]


def test_sweep_csv_non_timing_columns_are_stable(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("rounds = 3\npayload_kb = 0.2\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["sweep-nodes", "--config", str(cfg), "--counts", "5,10", "--trials", "1", "--out", str(out)]) == 0
    assert a.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    assert _non_timing(a) == _non_timing(b)
    assert [r["sweep_value"] for r in _non_timing(a)] == ["5", "10"]


def test_sweep_bad_counts_exit_one():
    assert main(["sweep-agents", "--counts", "a,b"]) == 1


def test_sweep_unwritable_output_exits_one(tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("rounds = 1\npayload_kb = 0.1\nnode_count = 4\ncluster_count = 1\n")
    out = tmp_path / "no" / "dir.csv"
    assert main(["sweep-agents", "--config", str(cfg), "--counts", "1", "--trials", "1", "--out", str(out)]) == 1
    assert "dir.csv" in capsys.readouterr().err
