"""Field files: a JSON header that references a CSV body.

Header keys are ``d``, ``L``, ``N``, ``description`` and ``data`` (the CSV
file name, relative to the header).  CSV rows are ``x_1, ..., x_d, Re, Im`` in
row-major grid order, preceded by one header row.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import FieldFormatError, InvalidGrid
from .spectral import Field, Grid

__all__ = ["write_field", "read_field", "field_rows"]


def field_rows(f: Field) -> np.ndarray:
    """``(N^d, d + 2)`` array of coordinates, real and imaginary parts."""
    g = f.grid
    cols = [c.ravel() for c in g.coords] if g.d > 1 else [g.axis]
    v = f.values.ravel()
    return np.column_stack(cols + [v.real, v.imag])


def write_field(path: str | Path, f: Field, description: str = "") -> Path:
    """Write ``path`` (header) and a sibling ``.csv`` body; returns the header path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = path.with_suffix(".csv")
    g = f.grid
    names = [f"x{i + 1}" for i in range(g.d)] + ["re", "im"]
    with open(body, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in field_rows(f):
            w.writerow([repr(float(a)) for a in row])
    header = {"d": g.d, "L": g.L, "N": g.N, "description": description, "data": body.name}
    path.write_text(json.dumps(header, indent=2) + "\n")
    return path


def read_field(path: str | Path) -> Field:
    path = Path(path)
    try:
        header = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FieldFormatError(f"cannot read field header {path}: {exc}") from exc
    missing = {"d", "L", "N", "data"} - set(header)
    if missing:
        raise FieldFormatError(f"field header lacks {sorted(missing)}")
    try:
        grid = Grid(int(header["d"]), float(header["L"]), int(header["N"]))
    except (InvalidGrid, TypeError, ValueError) as exc:
        raise FieldFormatError(f"bad grid in {path}: {exc}") from exc
    body = path.parent / header["data"]
    try:
        rows = np.loadtxt(body, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise FieldFormatError(f"cannot read field body {body}: {exc}") from exc
    if rows.shape != (grid.N**grid.d, grid.d + 2):
        raise FieldFormatError(
            f"body has shape {rows.shape}, expected {(grid.N**grid.d, grid.d + 2)}"
        )
    coords = np.column_stack([c.ravel() for c in grid.coords] if grid.d > 1 else [grid.axis])
    if not np.allclose(rows[:, : grid.d], coords, rtol=0, atol=1e-9 * max(1.0, grid.L)):
        raise FieldFormatError("coordinates in the body do not match the header grid")
    values = (rows[:, grid.d] + 1j * rows[:, grid.d + 1]).reshape(grid.shape)
    return Field(grid, values)
