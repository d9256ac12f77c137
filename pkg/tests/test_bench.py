import math

import pytest

from wsnagg import SimConfig
from wsnagg.bench import (
    CSV_HEADER,
    MetricsRecord,
    Workload,
    compute_cpu_energy,
    csv_rows,
    emit_csv,
    measure_phases,
    measure_point,
    sweep_agents,
    time_phase,
)

FAST = dict(node_count=6, cluster_count=2, rounds=3, payload_kb=0.1, trials=1)


def test_cpu_energy_at_nominal_draw():
    # 3 V at 8 mA for one second
    assert compute_cpu_energy(3.0, 0.008, 1.0) == pytest.approx(0.024)
    assert compute_cpu_energy(3.0, 0.008, 0.0) == 0.0
    with pytest.raises(ValueError):
        compute_cpu_energy(3.0, -1.0, 1.0)


def test_emit_csv_empty_writes_header_only(capsys):
    emit_csv([], "-")
    assert capsys.readouterr().out == ",".join(CSV_HEADER) + "\n"


def test_emit_csv_single_record(tmp_path):
    rec = MetricsRecord("node_count", 10, 0.5, 0.25, 0.125, 1.0, 0.024, 0.003, 7)
    path = tmp_path / "one.csv"
    emit_csv([rec], path)
    lines = path.read_text().splitlines()
    assert lines == [",".join(CSV_HEADER), "node_count,10,0.5,0.25,0.125,1,0.024,0.003,7"]
    emit_csv([rec], tmp_path / "two.csv")
    assert (tmp_path / "two.csv").read_bytes() == path.read_bytes()


def test_emit_csv_unwritable_path(tmp_path):
    with pytest.raises(OSError, match="missing"):
        emit_csv([], tmp_path / "missing" / "x.csv")


def test_error_rows_are_nan():
    rows = csv_rows([MetricsRecord("cluster_count", 25, error="too many")])
    assert rows == [["cluster_count", "25", "nan", "nan", "nan", "nan", "nan", "nan", "0"]]


def test_empty_workload_is_fast():
    work = Workload(SimConfig(payload_kb=0, **{k: v for k, v in FAST.items() if k != "payload_kb"}))
    assert work.slots == 0
    assert time_phase("encrypt", work, trials=3) < 1e-3
    with pytest.raises(ValueError):
        time_phase("sleep", work)


def test_overall_contains_phases():
    work = Workload(SimConfig(**FAST))
    t = measure_phases(work, trials=3)
    assert t["overall"] >= t["encrypt"] + t["decrypt"] + t["aggregate"]
    assert work.ok


def test_measure_point_fields():
    rec = measure_point(SimConfig(**FAST), "node_count", 6)
    assert rec.rounds_survived == 3 and rec.invariants_ok
    assert rec.bs_messages == [2, 2, 2]
    assert rec.cpu_energy_j == pytest.approx(3.0 * 0.008 * rec.overall_s)
    assert rec.radio_energy_j > 0


def test_radio_energy_grows_with_nodes():
    energies = [measure_point(SimConfig(**{**FAST, "node_count": n}), "node_count", n).radio_energy_j for n in (10, 20, 40)]
    assert energies[0] < energies[1] < energies[2]


def test_sweep_records_invalid_points():
    recs = sweep_agents(SimConfig(**FAST), [7, 1])
    assert [r.sweep_value for r in recs] == [1, 7]
    assert recs[1].error and math.isnan(recs[1].overall_s) and recs[1].rounds_survived == 0
