"""
Plot-ready result files. CSV files use "\\n" line endings and Python's
shortest round-trip float formatting, so equal runs give equal bytes.
"""
import csv
import json
from pathlib import Path
from typing import Iterable

from .search import SearchReport
from .surface import SurfaceGrid
from .sweep import SweepTable
from .training import TrainingTrace

TRACE_FIELDS = ["epoch", "train_ce", "valid_ce", "spectral_radius", "seconds"]
SWEEP_FIELDS = ["value", "mean_test_ce", "stddev"]
SURFACE_FIELDS = ["w", "b", "loss"]
SURFACE_ROW_FIELDS = ["b", "max_gradient"]


def write_csv(path: str | Path, fieldnames: list[str], rows: Iterable[dict]) -> int:
    """
    Write dict rows with a header line.
    Returns:
        int: Number of data rows written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(
            handle, fieldnames=fieldnames, extrasaction="ignore", lineterminator="\n"
        )
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
            count += 1
    return count


def write_trace_csv(path: str | Path, trace: TrainingTrace) -> int:
    return write_csv(path, TRACE_FIELDS, (vars(record) for record in trace.records))


def write_sweep_csv(path: str | Path, table: SweepTable) -> int:
    return write_csv(path, SWEEP_FIELDS, (vars(row) for row in table.rows))


def write_surface_csv(path: str | Path, surface: SurfaceGrid) -> int:
    return write_csv(path, SURFACE_FIELDS, surface.rows())


def write_surface_rows_csv(path: str | Path, surface: SurfaceGrid) -> int:
    return write_csv(path, SURFACE_ROW_FIELDS, surface.row_summaries())


def write_json(path: str | Path, payload: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_search_json(path: str | Path, report: SearchReport):
    write_json(path, report.to_json())
