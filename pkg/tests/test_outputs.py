import json

from harness.outputs import (
    write_json, write_search_json, write_surface_csv, write_surface_rows_csv,
    write_sweep_csv, write_trace_csv,
)
from harness.search import SearchReport
from harness.surface import demo_surface
from harness.sweep import SweepRow, SweepTable
from harness.training import EpochRecord, TrainingTrace


def test_trace_csv(tmp_path):
    trace = TrainingTrace(records=[
        EpochRecord(0, 61.0, 61.5, 1.1, 0.25),
        EpochRecord(1, 30.125, 31.0, 1.2, 0.5),
    ])
    path = tmp_path / "trace.csv"
    assert write_trace_csv(path, trace) == 2
    assert path.read_bytes() == (
        b"epoch,train_ce,valid_ce,spectral_radius,seconds\n"
        b"0,61.0,61.5,1.1,0.25\n"
        b"1,30.125,31.0,1.2,0.5\n"
    )


def test_sweep_csv_leaves_out_run_counts(tmp_path):
    table = SweepTable("lambda", [SweepRow(0.01, 8.5, 0.25, 3, 1)])
    path = tmp_path / "nested" / "sweep.csv"
    write_sweep_csv(path, table)
    assert path.read_text().splitlines() == ["value,mean_test_ce,stddev", "0.01,8.5,0.25"]


def test_surface_csv(tmp_path):
    surface = demo_surface(steps=2, resolution=4)
    path = tmp_path / "surface.csv"
    assert write_surface_csv(path, surface) == 16
    lines = path.read_text().splitlines()
    assert lines[0] == "w,b,loss"
    assert len(lines) == 17


def test_json_output_is_stable(tmp_path):
    path = tmp_path / "out.json"
    write_json(path, {"b": 1, "a": [1.5]})
    assert path.read_text() == '{\n  "a": [\n    1.5\n  ],\n  "b": 1\n}\n'


def test_search_json_without_results(tmp_path):
    path = tmp_path / "search.json"
    write_search_json(path, SearchReport("plain", 2, 2))
    payload = json.loads(path.read_text())
    assert payload["all_diverged"] is True
    assert payload["mean_test_ce"] is None
    assert payload["best_configuration"] is None


def test_surface_rows_csv(tmp_path):
    surface = demo_surface(steps=5, resolution=6)
    path = tmp_path / "surface_rows.csv"
    assert write_surface_rows_csv(path, surface) == 6
    lines = path.read_text().splitlines()
    assert lines[0] == "b,max_gradient"
    for line, b, gradient in zip(lines[1:], surface.b_values, surface.row_max_gradient):
        assert line == f"{float(b)!r},{float(gradient)!r}"
