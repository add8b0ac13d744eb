"""CSV/JSON serialization for matrices, estimates and run manifests.

Numeric CSV output uses 17 significant digits so values round-trip
bitwise; JSON is written with sorted keys and no timestamps so identical
runs produce identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InvalidData
from .ranks import CorrelationEstimate, CovarianceEstimate

FLOAT_FMT = "%.17g"


def read_matrix_csv(path, header: bool = False) -> np.ndarray:
    """Read a dense comma-separated matrix; missing or non-numeric cells are rejected."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader):
            if header and i == 0:
                continue
            if not row:
                continue
            parsed = []
            for cell in row:
                cell = cell.strip()
                if cell == "":
                    raise InvalidData(f"{path}: missing value in row {i + 1}")
                try:
                    parsed.append(float(cell))
                except ValueError as exc:
                    raise InvalidData(f"{path}: non-numeric value {cell!r} in row {i + 1}") from exc
            rows.append(parsed)
    if not rows:
        raise InvalidData(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidData(f"{path}: ragged rows (widths {sorted(widths)})")
    matrix = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(matrix)):
        raise InvalidData(f"{path}: non-finite values")
    return matrix


def write_matrix_csv(path, matrix) -> None:
    np.savetxt(path, np.asarray(matrix, dtype=float), delimiter=",", fmt=FLOAT_FMT)


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def estimate_to_dict(estimate) -> dict:
    if not isinstance(estimate, (CorrelationEstimate, CovarianceEstimate)):
        raise InvalidData("expected a correlation or covariance estimate")
    return {"kind": estimate.kind, "matrix": estimate.matrix.tolist()}


def write_estimate_json(path, estimate) -> None:
    write_json(path, estimate_to_dict(estimate))


def write_table_csv(path, rows, fieldnames) -> None:
    """Write dict rows; floats are rendered with full round-trip precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_render(row[name]) for name in fieldnames])


def _render(value):
    if isinstance(value, float):
        return FLOAT_FMT % value
    return value


def manifest_path(output_path) -> Path:
    p = Path(output_path)
    return p.with_name(p.name + ".manifest.json")
