"""CSV persistence for time series and field snapshots.

Floats use 17 significant digits so that values round-trip exactly.
"""
from __future__ import annotations

import csv
import json
import os
from typing import List, Optional, Sequence

import numpy as np

from ..diagnostics import SERIES_COLUMNS, DiagnosticsRecord
from ..geometry import Grid
from ..solver.scheme import FlowState

FMT = "%.17g"


def _f(v) -> str:
    return FMT % v


def write_series(path: str, records: Sequence[DiagnosticsRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SERIES_COLUMNS)
        for r in records:
            w.writerow([_f(v) for v in r.row()])


def read_series(path: str) -> List[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: float(v) for k, v in row.items()} for row in rows]


def snapshot_header(dim: int) -> List[str]:
    return (["x", "rho", "mx"] if dim == 1 else ["x", "y", "rho", "mx", "my"])


def write_snapshot(path: str, grid: Grid, rho, m) -> None:
    """Row-major over cells (last axis fastest): ``x[,y],rho,mx[,my]``."""
    x = grid.centers().reshape(-1, grid.dim)
    rho = np.asarray(rho).reshape(-1)
    m = np.asarray(m).reshape(-1, grid.dim)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(snapshot_header(grid.dim))
        for k in range(rho.size):
            w.writerow([_f(v) for v in (*x[k], rho[k], *m[k])])


def write_state(path: str, grid: Grid, state: FlowState) -> None:
    write_snapshot(path, grid, state.rho, state.m)


def load_snapshot(path: str, grid: Grid, t: float = 0.0) -> FlowState:
    """Read a snapshot written for ``grid``; cell centres must match."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    if header != snapshot_header(grid.dim):
        raise ValueError(f"{path}: expected header {snapshot_header(grid.dim)}, got {header}")
    data = np.array(rows)
    n = int(np.prod(grid.cells))
    if data.shape[0] != n:
        raise ValueError(f"{path}: {data.shape[0]} rows for a grid of {n} cells")
    d = grid.dim
    x = grid.centers().reshape(-1, d)
    if np.max(np.abs(data[:, :d] - x)) > 1e-9 * max(grid.extent):
        raise ValueError(f"{path}: cell centres do not match the configured grid")
    rho = np.ascontiguousarray(data[:, d].reshape(grid.shape))
    m = np.ascontiguousarray(data[:, d + 1:].reshape(grid.shape + (d,)))
    if np.any(rho <= 0):
        raise ValueError(f"{path}: density must be positive in every cell")
    return FlowState(t, rho, m)


def write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
