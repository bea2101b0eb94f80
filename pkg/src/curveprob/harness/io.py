"""CSV/JSON input and output for curves and experiment reports.

Curves are stored one per row with a header row of grid points. Floats are
written with ``repr``, the shortest decimal that parses back to the exact
same double, so save-then-load is an identity.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..curves import Curve, Grid
from ..errors import ParseError, UsageError


def _format_row(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def save_curves(curves: list, path) -> None:
    if not curves:
        Path(path).write_text("", encoding="utf-8")
        return
    grid = curves[0].grid
    lines = [_format_row(grid.points)]
    lines.extend(_format_row(c.values) for c in curves)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_curves(path) -> list:
    """Read a curve-per-row CSV; an empty file gives an empty list."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        return []
    header = lines[0].split(",")
    if len(header) < 3:
        raise ParseError(f"{path}: header must list at least 3 grid points", row=1)
    grid = Grid(len(header) - 1)

    curves = []
    for r, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != grid.size:
            raise ParseError(
                f"{path}: expected {grid.size} columns, found {len(cells)}", row=r
            )
        values = np.empty(grid.size)
        for c, cell in enumerate(cells, start=1):
            try:
                values[c - 1] = float(cell)
            except ValueError:
                raise ParseError(f"{path}: non-numeric cell {cell!r}", row=r, column=c) from None
        curves.append(Curve(grid, values))
    return curves


def load_single_curve(path) -> Curve:
    curves = load_curves(path)
    if len(curves) != 1:
        raise UsageError(f"{path}: expected exactly one curve, found {len(curves)}")
    return curves[0]


def load_index(path) -> np.ndarray:
    """One integer per line (day-of-year or day-of-week labels)."""
    text = Path(path).read_text(encoding="utf-8")
    out = []
    for r, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(int(line.strip()))
        except ValueError:
            raise ParseError(f"{path}: non-integer index {line.strip()!r}", row=r) from None
    return np.asarray(out, dtype=int)


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def save_report(report, path) -> None:
    """Write a report as CSV or JSON depending on the file extension.

    The CSV form contains only the deterministic cells, so identical seeds
    give byte-identical files; wall-clock runtime lives in the JSON form.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    elif path.suffix.lower() == ".csv":
        rows = report.to_csv_rows()
        lines = [",".join(_format_cell(cell) for cell in row) for row in rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        raise UsageError(f"report path must end in .csv or .json, got {path.name!r}")
