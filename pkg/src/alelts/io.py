"""Output writers: solution CSV, space-time mesh records and a run summary."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

FLOAT_FORMAT = "%.17g"
MESH_COLUMNS = ("cell", "t0", "t1", "x_left_0", "x_right_0", "x_right_1", "x_left_1")


def _fmt(v):
    return FLOAT_FORMAT % v


def solution_columns(system):
    return ("x_center", "dx") + tuple(f"q_{n}" for n in system.conserved_names) + tuple(
        f"w_{n}" for n in system.primitive_names
    )


def write_solution(path, report, system):
    """One row per cell: center, width, conserved then primitive components."""
    path = Path(path)
    prim = system.to_primitive(report.Q)
    rows = np.column_stack((report.centers, report.widths, report.Q, prim))
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(solution_columns(system))
        writer.writerows([[_fmt(v) for v in row] for row in rows])
    return path


def read_solution(path):
    """Read a solution CSV back as ``(header, array)``."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    return header, data.reshape(-1, len(header))


def write_spacetime_mesh(path, mesh_log):
    """Write one space-time quadrilateral per element update.

    Corners in order are ``(x_left_0, t0)``, ``(x_right_0, t0)``,
    ``(x_right_1, t1)``, ``(x_left_1, t1)``; closing the polygon back to the
    first corner draws the element.
    """
    if mesh_log is None:
        raise ValueError("the run did not record its space-time mesh (enable mesh logging)")
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MESH_COLUMNS)
        for cell, xl0, xr0, t0, xl1, xr1, t1 in mesh_log:
            writer.writerow([int(cell)] + [_fmt(v) for v in (t0, t1, xl0, xr0, xr1, xl1)])
    return path


def read_spacetime_mesh(path):
    """Mesh records as a float array with columns :data:`MESH_COLUMNS`."""
    _, data = read_solution(path)
    return data


def report_summary(report, system=None, extra=None):
    """JSON-serialisable digest of a :class:`~alelts.lts.RunReport`."""
    out = {
        "mode": report.mode,
        "t_end": report.t_end,
        "updates": int(report.updates),
        "cycles": int(report.cycles),
        "wall_time": report.wall_time,
        "conservation_abs": [float(v) for v in report.conservation_abs],
        "conservation_rel": [float(v) for v in report.conservation_rel],
        "osher_fallbacks": int(report.osher_fallbacks),
        "max_predictor_iterations": int(report.max_predictor_iterations),
        "diagnostics": {k: int(v) for k, v in (report.extra or {}).items()},
    }
    if system is not None:
        out["components"] = list(system.conserved_names)
    if extra:
        out.update(extra)
    return out


def write_report(path, report, system=None, extra=None):
    path = Path(path)
    path.write_text(json.dumps(report_summary(report, system, extra), indent=2) + "\n", encoding="utf-8")
    return path
