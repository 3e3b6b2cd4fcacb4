"""Stored fine-grid reference solutions and the thresholds pinned against them.

The MHD shock tubes have no exact solver here, so each case is compared with
a global-time-stepping run on a four times finer grid.  The dumps live in the
package ``data`` directory in the solution CSV format of :mod:`alelts.io`;
``golden.json`` holds the error thresholds recorded at the first verified run.
"""
from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import parse_config
from .errors import ComparisonError
from .io import read_solution, write_solution
from .studies import l1_difference, run

DATA_DIR = Path(__file__).resolve().parent / "data"
REFERENCE_CELLS = 800
GOLDEN_FILE = "golden.json"


def reference_path(name, data_dir=DATA_DIR):
    return Path(data_dir) / f"{name.replace('/', '_')}_gts{REFERENCE_CELLS}.csv"


def make_reference(name, cells=REFERENCE_CELLS, data_dir=DATA_DIR):
    """Run ``name`` (e.g. ``"mhd/rp1"``) in GTS mode on ``cells`` cells and store the dump."""
    system, case = name.split("/")
    cfg = parse_config(system=system, case=case, mode="gts", cells=cells)
    report, solver, _ = run(cfg)
    path = reference_path(name, data_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_solution(path, report, solver.system)
    return path, report


def load_reference(name, data_dir=DATA_DIR):
    """``(x_node, conserved averages)`` of a stored reference."""
    path = reference_path(name, data_dir)
    if not path.exists():
        raise ComparisonError(f"no stored reference for {name} ({path.name})")
    header, data = read_solution(path)
    centers, widths = data[:, 0], data[:, 1]
    nodes = np.concatenate(([centers[0] - 0.5 * widths[0]], centers + 0.5 * widths))
    q_cols = [k for k, h in enumerate(header) if h.startswith("q_")]
    return nodes, data[:, q_cols]


def reference_l1(report, name, component=0, data_dir=DATA_DIR):
    """L1 distance between a run's cell averages and the stored reference."""
    nodes, q = load_reference(name, data_dir)
    return float(l1_difference(report.x_node, report.Q, nodes, q)[component])


def load_golden(data_dir=DATA_DIR):
    path = Path(data_dir) / GOLDEN_FILE
    if not path.exists():
        return {}
    return json.loads(path.read_text(encoding="utf-8"))


def save_golden(values, data_dir=DATA_DIR):
    path = Path(data_dir) / GOLDEN_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(values, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def lts_run(name, cells=200, **overrides):
    """The production configuration a golden threshold refers to."""
    system, case = name.split("/")
    cfg = parse_config(system=system, case=case, mode="lts", cells=cells)
    return run(replace(cfg, **overrides) if overrides else cfg)
