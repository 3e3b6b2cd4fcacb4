"""Convergence-study and GTS/LTS comparison harnesses."""
from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError
from .riemann import convergence_order, error_norms

# default grids per scheme order for the smooth Alfven test
DEFAULT_GRIDS = {2: (100, 200, 400), 3: (200, 400, 800), 4: (100, 200, 300), 5: (100, 150, 200)}
BY_INDEX = 6  # B_y in the conserved MHD vector
COMPARE_TOLERANCE = 1e-3  # default L1 gap per component accepted between GTS and LTS


def run(cfg, log_mesh=None, log_fluxes=False):
    """Run one configuration; returns ``(report, solver, case)``."""
    solver, case = cfg.build(log_mesh=log_mesh, log_fluxes=log_fluxes)
    report = solver.run()
    return report, solver, case


@dataclass(frozen=True)
class ConvergenceRow:
    order: int
    cells: int
    error: float
    observed: float | None
    updates: int
    wall_time: float


def convergence_study(cfg, grids, component=BY_INDEX, norm="L2"):
    """Run ``cfg`` on each grid and return one :class:`ConvergenceRow` per grid.

    The case must provide an exact solution ``case.exact(x, t)``.  The mesh
    velocity is forced to the transverse velocity ``fluid-v``.
    """
    cfg = replace(cfg, velocity="fluid-v")
    case = cfg.resolve_case()
    exact = getattr(case, "exact", None)
    if exact is None:
        raise ConfigurationError(f"case {cfg.name} has no exact solution for a convergence study")
    errors, reports = [], []
    for n in grids:
        t0 = time.perf_counter()
        report, _, _ = run(replace(cfg, cells=int(n)))
        elapsed = time.perf_counter() - t0
        t_end = report.t_end
        err = error_norms(report, lambda x: exact(x, t_end)[..., component], component, norm, t=t_end)
        errors.append(float(err))
        reports.append((report, elapsed))
    orders = list(convergence_order(errors, list(grids))) if len(grids) > 1 else []
    rows = []
    for k, (n, e, (rep, el)) in enumerate(zip(grids, errors, reports)):
        rows.append(ConvergenceRow(cfg.order, int(n), e, float(orders[k - 1]) if k > 0 else None,
                                   rep.updates, el))
    return rows


def l1_difference(x_a, q_a, x_b, q_b):
    """L1 distance of two piecewise-constant fields on different meshes.

    Integration runs over the intersection of both supports.
    """
    x_a, x_b = np.asarray(x_a, float), np.asarray(x_b, float)
    q_a, q_b = np.asarray(q_a, float), np.asarray(q_b, float)
    lo, hi = max(x_a[0], x_b[0]), min(x_a[-1], x_b[-1])
    cuts = np.unique(np.concatenate((x_a, x_b)))
    cuts = cuts[(cuts >= lo) & (cuts <= hi)]
    mid = 0.5 * (cuts[1:] + cuts[:-1])
    ia = np.clip(np.searchsorted(x_a, mid) - 1, 0, len(q_a) - 1)
    ib = np.clip(np.searchsorted(x_b, mid) - 1, 0, len(q_b) - 1)
    return np.sum(np.diff(cuts)[:, None] * np.abs(q_a[ia] - q_b[ib]), axis=0)


@dataclass(frozen=True)
class Comparison:
    gts: object
    lts: object
    l1_difference: np.ndarray

    @property
    def ratio(self):
        """GTS/LTS update-count ratio."""
        return self.gts.updates / self.lts.updates


def compare_modes(cfg):
    """Run ``cfg`` with global and local time stepping."""
    gts, _, _ = run(replace(cfg, mode="gts"))
    lts, _, _ = run(replace(cfg, mode="lts"))
    diff = l1_difference(gts.x_node, gts.Q, lts.x_node, lts.Q)
    return Comparison(gts, lts, diff)
