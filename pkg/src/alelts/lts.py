"""Cycle-based local time stepping (LTS) and its global-step baseline (GTS).

Each cell carries its own time ``t_cell`` and target time ``t_next``; each
node carries the time ``t_node`` at which its position is valid.  Flux
time-integrals that a neighbour has already exchanged across a shared edge
are parked in the lagging cell's memory variable ``QM`` until that cell
updates, which keeps the scheme exactly conservative.

Within a cycle every cell that passes the update test is advanced.  Two
adjacent cells that qualify together necessarily share the same target time,
so their common edge integral is evaluated once and applied to both.
"""
from __future__ import annotations

import logging
import time as _time
from dataclasses import dataclass, field

import numpy as np

from .basis import build_tables, gauss_legendre
from .errors import (
    ConfigurationError,
    DeadlockError,
    InvalidStateError,
    MeshTanglingError,
    OutOfDomainError,
    PredictorDivergenceError,
)
from .flux import FLUX_KINDS, OSHER_POINTS, edge_quadrature
from .predictor import PREDICTOR_MAX_ITER, PREDICTOR_TOL, TAU_TOL, predict_batch
from .reconstruction import (
    LAMBDA_CENTRAL,
    LAMBDA_SIDED,
    WENO_EPS,
    WENO_POWER,
    gather_virtual_data,
    positivity_limit,
    reconstruct_cells,
    stencil_layout,
)
from .systems import MESH_VELOCITIES, mesh_velocity

log = logging.getLogger(__name__)

MODES = ("lts", "gts")
CFL_SPEEDS = ("physical", "ale")
MAX_CYCLES = 10**9
COLLAPSE_TOL = 1e-10  # relative to the smallest initial width
DT_FLOOR = 1e-13  # relative to t_end
DAMPING = (0.5, 0.25, 0.125, 0.0)  # successive high-mode scalings of a rejected predictor


def local_cfl_step(widths, speeds, cfl, t, t_end):
    """Local step ``cfl * min_j width_j / speed_j`` clamped to ``t_end - t``.

    ``widths`` and ``speeds`` have the neighbourhood on the last axis; NaN
    entries (neighbours outside the domain) are ignored.
    """
    widths = np.asarray(widths, dtype=float)
    speeds = np.asarray(speeds, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(np.isnan(widths) | np.isnan(speeds), np.inf, widths / speeds)
    if np.any(ratio <= 0.0):
        raise MeshTanglingError("non-positive width or wave speed in the CFL neighbourhood")
    dt = cfl * np.min(ratio, axis=-1)
    if not np.all(np.isfinite(dt)):
        raise MeshTanglingError("local time step is not finite")
    return np.minimum(dt, np.asarray(t_end, dtype=float) - np.asarray(t, dtype=float))


def ale_speeds(system, q, inside, velocity):
    """ALE spectral radius of every cell measured against its own edge speeds.

    Edge ``e`` between cells ``j-1`` and ``j`` moves with the mean mesh
    velocity of the two states; the speed of cell ``j`` is the larger of
    ``max |lambda(A(q_j)) - V_e|`` over its two edges.  Edges with a
    neighbour missing from the window use the cell's own velocity.

    ``q`` has shape ``(..., W, nvar)`` and ``inside`` shape ``(..., W)``.
    """
    q = np.asarray(q, dtype=float)
    inside = np.asarray(inside, dtype=bool)
    v = mesh_velocity(q, velocity)
    both = inside[..., 1:] & inside[..., :-1]
    mid = 0.5 * (v[..., 1:] + v[..., :-1])
    v_left = v.copy()
    v_left[..., 1:] = np.where(both, mid, v[..., 1:])
    v_right = v.copy()
    v_right[..., :-1] = np.where(both, mid, v[..., :-1])
    return np.maximum(system.max_speed(q, v_left), system.max_speed(q, v_right))


def causal_step_bound(cells, widths, speeds, cfl):
    """Largest step for which no signal from a distant cell can reach ``cells``.

    For each cell ``i`` and every cell ``j`` at least two positions away this
    is ``cfl * reach_ij / speed_j`` where ``reach_ij`` is the summed width of
    the cells strictly between ``i`` and ``j`` plus that of ``j``.  Widths are
    used rather than node positions because neighbouring nodes may sit at
    different local times.  Adjacent cells enter the ordinary local CFL
    formula instead.
    """
    widths = np.asarray(widths, dtype=float)
    n = len(speeds)
    cells = np.asarray(cells)
    j = np.arange(n)
    with np.errstate(divide="ignore"):
        inv = np.where(speeds > 0.0, 1.0 / speeds, np.inf)
    edge = np.concatenate(([0.0], np.cumsum(widths)))
    right = edge[j + 1][None, :] - edge[cells + 1][:, None]
    left = edge[cells][:, None] - edge[j][None, :]
    gap = j[None, :] - cells[:, None]
    reach = np.where(gap >= 2, right, np.where(gap <= -2, left, np.inf))
    return cfl * np.min(reach * inv[None, :], axis=1)


def next_times(t, dt, t_end):
    """``t + dt``, snapped to exactly ``t_end`` once it is reached."""
    t_next = t + dt
    return np.where(t_next >= t_end * (1.0 - 1e-14), t_end, t_next)


def updatable_mask(t_cell, t_next, t_end, radius):
    """Cells allowed to advance from ``t_cell`` to ``t_next`` in this cycle.

    A live cell qualifies when no cell within ``radius`` targets an earlier
    time and none of them already sits beyond its target, so every stencil
    cell can supply data at the new time.  Ties pass.  Out-of-domain
    neighbours are ignored.
    """
    n = len(t_cell)
    lo = np.full(n, np.inf)
    hi = np.full(n, -np.inf)
    for d in range(1, radius + 1):
        if d >= n:
            break
        lo[:-d] = np.minimum(lo[:-d], t_next[d:])
        lo[d:] = np.minimum(lo[d:], t_next[:-d])
        hi[:-d] = np.maximum(hi[:-d], t_cell[d:])
        hi[d:] = np.maximum(hi[d:], t_cell[:-d])
    return (t_cell < t_end) & (t_next <= lo) & (hi <= t_next)


@dataclass
class RunReport:
    """Summary of a finished run."""

    mode: str
    t_end: float
    updates: int
    cycles: int
    wall_time: float
    conservation_abs: np.ndarray
    conservation_rel: np.ndarray
    osher_fallbacks: int
    max_predictor_iterations: int
    x_node: np.ndarray
    Q: np.ndarray
    w_hat: np.ndarray
    updates_per_cell: np.ndarray
    mesh: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def centers(self):
        return 0.5 * (self.x_node[1:] + self.x_node[:-1])

    @property
    def widths(self):
        return np.diff(self.x_node)


class Solver:
    """ALE ADER-WENO finite-volume solver on a moving 1D mesh.

    Parameters
    ----------
    system : ConservationLaw
    nodes : array_like, shape (N+1,)
        Initial node positions, strictly increasing.
    averages : array_like, shape (N, nvar)
        Initial cell averages.
    M : int
        Polynomial degree (scheme order ``M + 1``).
    t_end : float
    mode : {"lts", "gts"}
    boundary : {"mirror", "clip"}
        Treatment of reconstruction stencils reaching past the domain ends.
    cfl_speed : {"physical", "ale"}
        Spectral radius used in the local CFL condition: that of the flux
        Jacobian ``A``, or that of ``A - V I`` with ``V`` the speeds of the
        cell's own edges (see :func:`ale_speeds`).
    causal_bound : bool
        Also cap each local step by the time the fastest signal of any other
        cell needs to reach it (see :func:`causal_step_bound`).  Without it a
        quiet cell next to a strong discontinuity may take one long step and
        be overrun mid-step.
    positivity : bool
        Scale reconstructions that reach non-positive density or pressure
        toward their cell mean (see :func:`~alelts.reconstruction.positivity_limit`).
    log_mesh : bool
        Record the space-time quadrilateral of every element update.
    log_fluxes : bool
        Record every edge flux integral (used by the memory-variable audit).
    """

    def __init__(self, system, nodes, averages, M, t_end, cfl=0.5, flux="osher", mode="lts",
                 velocity="fluid-u", osher_points=OSHER_POINTS, lambda_central=LAMBDA_CENTRAL,
                 lambda_sided=LAMBDA_SIDED, weno_eps=WENO_EPS, weno_power=WENO_POWER, predictor_tol=PREDICTOR_TOL,
                 predictor_max_iter=PREDICTOR_MAX_ITER, boundary="mirror", cfl_speed="physical",
                 causal_bound=True, positivity=True, log_mesh=False,
                 log_fluxes=False, max_cycles=MAX_CYCLES):
        if mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
        if flux not in FLUX_KINDS:
            raise ConfigurationError(f"flux must be one of {FLUX_KINDS}, got {flux!r}")
        if velocity not in MESH_VELOCITIES:
            raise ConfigurationError(f"mesh velocity must be one of {MESH_VELOCITIES}, got {velocity!r}")
        if cfl_speed not in CFL_SPEEDS:
            raise ConfigurationError(f"cfl_speed must be one of {CFL_SPEEDS}, got {cfl_speed!r}")
        if not 0.0 < cfl <= 1.0:
            raise ConfigurationError(f"CFL must lie in (0, 1], got {cfl}")
        if not t_end > 0.0:
            raise ConfigurationError(f"t_end must be positive, got {t_end}")
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2 or np.any(np.diff(nodes) <= 0.0):
            raise MeshTanglingError("initial nodes must be strictly increasing")
        averages = system.validate(np.array(averages, dtype=float))
        if averages.shape != (len(nodes) - 1, system.nvar):
            raise ConfigurationError(
                f"expected averages of shape {(len(nodes) - 1, system.nvar)}, got {averages.shape}"
            )
        if not np.all(system.admissible(averages)):
            raise InvalidStateError("initial data contains inadmissible states")

        self.system = system
        self.tables = build_tables(M)
        self.M = self.tables.M
        self.radius = self.M
        self.stencils = stencil_layout(self.M, lambda_central, lambda_sided)
        self.weno_eps = float(weno_eps)
        self.weno_power = int(weno_power)
        self.quad_nodes, self.quad_weights = gauss_legendre(self.M + 1)
        self.t_end = float(t_end)
        self.cfl = float(cfl)
        self.flux_kind = flux
        self.mode = mode
        self.velocity = velocity
        self.osher_points = int(osher_points)
        self.predictor_tol = predictor_tol
        self.predictor_max_iter = predictor_max_iter
        self.max_cycles = max_cycles
        self.boundary = boundary
        self.cfl_speed = cfl_speed
        self.causal_bound = bool(causal_bound)
        self.positivity = bool(positivity)
        self.limited_cells = 0
        self.damped_predictors = 0

        n = self.n_cells = len(nodes) - 1
        nv = self.nvar = system.nvar
        nb = self.tables.n
        self.x_node = nodes.copy()
        self.t_node = np.zeros(n + 1)
        self.t_cell = np.zeros(n)
        self.t_next = np.zeros(n)
        self.Q = averages.copy()
        self.QM = np.zeros((n, nv))
        self.dx = np.diff(nodes)
        self.x_left = nodes[:-1].copy()
        self.w_hat = np.zeros((n, nb, nv))
        self.q_hat = np.zeros((n, nb, nb, nv))
        self.x_hat = np.zeros((n, nb, nb))
        self.side_q = np.zeros((2, n, nb, nv))
        self.fresh = np.zeros(n, dtype=bool)
        self.updates = np.zeros(n, dtype=np.int64)
        self.cycles = 0
        self.osher_fallbacks = 0
        self.max_iterations = 0
        # integrated flux through the left and right boundary, positive along +x
        self.boundary_flux = np.zeros((2, nv))
        mass = self.dx[:, None] * self.Q
        self.initial_total = mass.sum(axis=0)
        self.initial_scale = np.abs(mass).sum(axis=0)
        self.min_width = float(self.dx.min())

        self.mesh_log = [] if log_mesh else None
        self.flux_log = [] if log_fluxes else None
        self._prepare(np.arange(n))

    # ------------------------------------------------------------ queries
    @property
    def done(self):
        return bool(np.all(self.t_cell >= self.t_end))

    def is_updatable(self, i):
        return bool(updatable_mask(self.t_cell, self.t_next, self.t_end, self.radius)[i])

    def conservation_error(self):
        """Absolute and relative deviation of the conserved totals per component."""
        total = (self.dx[:, None] * self.Q).sum(axis=0) + self.QM.sum(axis=0)
        expected = self.initial_total + self.boundary_flux[0] - self.boundary_flux[1]
        err = np.abs(total - expected)
        scale = np.maximum(self.initial_scale, np.abs(self.boundary_flux).sum(axis=0))
        # components that stay (numerically) zero are measured against the largest one
        scale = np.maximum(scale, np.finfo(float).eps * scale.max())
        rel = np.where(scale > 0.0, err / np.where(scale > 0.0, scale, 1.0), err)
        return err, rel

    # ------------------------------------------------------------ stepping
    def step(self):
        """Run one cycle; returns the number of element updates performed."""
        if self.done:
            return 0
        cells = np.flatnonzero(updatable_mask(self.t_cell, self.t_next, self.t_end, self.radius))
        if cells.size == 0:
            raise DeadlockError(
                f"cycle {self.cycles}: no cell can advance (min t = {self.t_cell.min()!r})"
            )
        self._update(cells)
        self._prepare(cells)
        self.cycles += 1
        return int(cells.size)

    def run(self):
        """Advance every cell to ``t_end`` and return a :class:`RunReport`."""
        start = _time.perf_counter()
        while not self.done:
            if self.cycles >= self.max_cycles:
                raise DeadlockError(f"cycle limit {self.max_cycles} reached")
            self.step()
        return self.report(_time.perf_counter() - start)

    def report(self, wall_time=0.0):
        err, rel = self.conservation_error()
        mesh = None
        if self.mesh_log is not None:
            mesh = np.concatenate(self.mesh_log) if self.mesh_log else np.zeros((0, 7))
        return RunReport(
            mode=self.mode,
            t_end=self.t_end,
            updates=int(self.updates.sum()),
            cycles=self.cycles,
            wall_time=wall_time,
            conservation_abs=err,
            conservation_rel=rel,
            osher_fallbacks=self.osher_fallbacks,
            max_predictor_iterations=self.max_iterations,
            x_node=self.x_node.copy(),
            Q=self.Q.copy(),
            w_hat=self.w_hat.copy(),
            updates_per_cell=self.updates.copy(),
            mesh=mesh,
            extra={"limited_cells": self.limited_cells, "damped_predictors": self.damped_predictors},
        )

    # ------------------------------------------------------------ internals
    def _trace(self, cells, sides, times):
        """Boundary traces of ``cells`` on ``sides`` at physical ``times`` (k, g)."""
        t0 = self.t_cell[cells][:, None]
        length = (self.t_next[cells] - self.t_cell[cells])[:, None]
        tau = (times - t0) / length
        if np.any(tau < -TAU_TOL) or np.any(tau > 1.0 + TAU_TOL) or not np.all(self.fresh[cells]):
            raise OutOfDomainError("edge quadrature left a predictor's time window")
        lt = self.tables.lagrange(np.clip(tau, 0.0, 1.0))
        return np.einsum("kgb,kbv->kgv", lt, self.side_q[sides, cells])

    def _update(self, cells):
        n = self.n_cells
        active = np.zeros(n, dtype=bool)
        active[cells] = True
        edges = np.unique(np.concatenate((cells, cells + 1)))
        lc = edges - 1
        rc = edges.copy()
        has_l = lc >= 0
        has_r = rc < n
        lc_safe = np.where(has_l, lc, 0)
        rc_safe = np.where(has_r, rc, n - 1)
        upd_l = has_l & active[lc_safe]
        upd_r = has_r & active[rc_safe]
        t_b = np.where(upd_r, self.t_next[rc_safe], self.t_next[lc_safe])
        t_a = self.t_node[edges]

        ne = len(edges)
        F = np.zeros((ne, self.nvar))
        disp = np.zeros(ne)
        need = t_b > t_a
        if np.any(need):
            # transmissive boundaries mirror the boundary cell's own trace
            l_cell = np.where(has_l, lc_safe, rc_safe)[need]
            l_side = np.where(has_l, 1, 0)[need]
            r_cell = np.where(has_r, rc_safe, lc_safe)[need]
            r_side = np.where(has_r, 0, 1)[need]
            F[need], disp[need], nbad = edge_quadrature(
                t_a[need], t_b[need],
                lambda t: self._trace(l_cell, l_side, t),
                lambda t: self._trace(r_cell, r_side, t),
                self.system, self.velocity, self.flux_kind, self.M + 1, self.osher_points,
            )
            if nbad:
                self.osher_fallbacks += nbad
                log.info("cycle %d: %d Osher evaluations replaced by Rusanov", self.cycles, nbad)
            if self.flux_log is not None:
                for k in np.flatnonzero(need):
                    self.flux_log.append(
                        (self.cycles, int(edges[k]), float(t_a[k]), float(t_b[k]), F[k].copy(),
                         bool(upd_l[k]), bool(upd_r[k]))
                    )

        t0 = self.t_cell[cells]
        T = self.t_next[cells]
        xl_old = self.x_left[cells]
        dx_old = self.dx[cells]

        self.x_node[edges] += disp
        self.t_node[edges] = np.maximum(t_a, t_b)
        dx_new = self.x_node[cells + 1] - self.x_node[cells]
        collapsed = dx_new <= COLLAPSE_TOL * self.min_width
        if np.any(collapsed):
            bad = cells[collapsed]
            raise MeshTanglingError(f"cells {bad.tolist()} collapsed at t={float(T.min())!r}")

        pos_l = np.searchsorted(edges, cells)
        pos_r = np.searchsorted(edges, cells + 1)
        mass = dx_old[:, None] * self.Q[cells] - (F[pos_r] - F[pos_l]) + self.QM[cells]
        q_new = mass / dx_new[:, None]
        ok = self.system.admissible(q_new)
        if not np.all(ok):
            bad = cells[~ok]
            raise InvalidStateError(
                f"inadmissible average in cells {bad.tolist()} at t={float(T[~ok].min())!r}: "
                f"{q_new[~ok][0].tolist()}"
            )

        # park one-sided edge integrals in the lagging neighbour
        to_right = upd_l & ~upd_r & has_r
        to_left = upd_r & ~upd_l & has_l
        self.QM[rc[to_right]] += F[to_right]
        self.QM[lc[to_left]] -= F[to_left]
        if edges[0] == 0:
            self.boundary_flux[0] += F[0]
        if edges[-1] == n:
            self.boundary_flux[1] += F[-1]

        self.Q[cells] = q_new
        self.dx[cells] = dx_new
        self.x_left[cells] = self.x_node[cells]
        self.QM[cells] = 0.0
        self.t_cell[cells] = T
        self.fresh[cells] = False
        self.updates[cells] += 1

        if self.mesh_log is not None:
            self.mesh_log.append(np.column_stack((
                cells, xl_old, xl_old + dx_old, t0, self.x_node[cells], self.x_node[cells + 1], T,
            )))

    def _prepare(self, cells):
        """Reconstruct ``cells`` at their current time and build their next predictors."""
        t = self.t_cell[cells]
        vdata = gather_virtual_data(self, cells, t, self.radius, self.boundary)
        w_hat, _, _ = reconstruct_cells(vdata, self.tables, self.stencils, self.weno_eps, self.weno_power)
        if self.positivity:
            w_hat, theta = positivity_limit(w_hat, self.tables, self.system)
            self.limited_cells += int(np.count_nonzero(theta < 1.0))
        self.w_hat[cells] = w_hat

        live = t < self.t_end
        if not np.any(live):
            return
        cells, t, w_hat = cells[live], t[live], w_hat[live]
        R = self.radius
        widths = vdata.widths[live][:, R - 1:R + 2]
        q = vdata.q[live][:, R - 1:R + 2]
        inside = vdata.inside[live][:, R - 1:R + 2]
        q_safe = np.where(inside[..., None], q, self.Q[cells][:, None, :])
        if self.cfl_speed == "ale":
            win = slice(R - 2, R + 3) if R >= 2 else slice(R - 1, R + 2)
            wide = ale_speeds(self.system, vdata.q[live][:, win], vdata.inside[live][:, win], self.velocity)
            raw = wide[:, 1:4] if R >= 2 else wide
        else:
            raw = self.system.max_speed(q_safe, np.zeros(q_safe.shape[:-1]))
        speeds = np.where(inside, raw, np.nan)
        dt = local_cfl_step(np.where(inside, widths, np.nan), speeds, self.cfl, t, self.t_end)
        if self.causal_bound and self.n_cells > 2:
            # signals cross distant cells at their lab-frame speed, whatever the mesh does
            s_all = self.system.max_speed(self.Q, np.zeros(self.n_cells))
            far = causal_step_bound(cells, self.dx, s_all, self.cfl)
            dt = np.minimum(dt, far)
        if np.any(dt <= DT_FLOOR * self.t_end):
            bad = cells[dt <= DT_FLOOR * self.t_end]
            raise MeshTanglingError(f"local time step underflow at t={float(t.min())!r}", cells=bad.tolist())
        if self.mode == "gts":
            # synchronous by construction: every live cell is prepared together
            dt = np.full_like(dt, dt.min())
        t_next = next_times(t, dt, self.t_end)

        q_hat, x_hat, it = self._predict(cells, w_hat, t, t_next)
        self.max_iterations = max(self.max_iterations, int(it))
        self.t_next[cells] = t_next
        self.q_hat[cells] = q_hat
        self.x_hat[cells] = x_hat
        self.side_q[0, cells] = np.einsum("a,kabv->kbv", self.tables.phi0, q_hat)
        self.side_q[1, cells] = np.einsum("a,kabv->kbv", self.tables.phi1, q_hat)
        self.fresh[cells] = True

    def _predict(self, cells, w_hat, t, t_next):
        """Predictors of ``cells``.

        With ``positivity`` on, a cell whose predictor fails, reaches an
        inadmissible state or outruns its step has the high modes of its
        reconstruction scaled down (see ``DAMPING``) and is predicted again.
        The last stage is the bare cell mean, which the predictor carries
        unchanged.
        """
        w0 = w_hat
        w_hat = w_hat.copy()
        stage = np.zeros(len(cells), dtype=int)
        last = len(DAMPING)
        while True:
            try:
                q_hat, x_hat, it = predict_batch(
                    w_hat, self.x_node[cells], self.dx[cells], t_next - t, self.system, self.tables,
                    self.velocity, self.predictor_tol, self.predictor_max_iter,
                )
            except (MeshTanglingError, PredictorDivergenceError) as exc:
                bad = np.asarray(getattr(exc, "cells", None) or [], dtype=int)
                bad = bad[stage[bad] < last] if self.positivity else bad[:0]
                if bad.size:
                    self._damp(cells, w0, w_hat, stage, bad)
                    continue
                cells_bad = getattr(exc, "cells", None)
                if cells_bad:
                    exc.cells = cells[np.asarray(cells_bad)].tolist()
                    exc.args = (f"{exc.args[0]}; mesh cells {exc.cells} at t={float(t.min())!r}",)
                raise
            if not self.positivity:
                return q_hat, x_hat, it
            phi = np.stack((self.tables.phi0, self.tables.phi1))
            traces = np.einsum("sa,kabv->ksbv", phi, q_hat)
            ok = np.all(self.system.admissible(q_hat), axis=(1, 2))
            ok &= np.all(self.system.admissible(traces), axis=(1, 2))
            ok &= self._speed_ok(cells, np.concatenate((q_hat, traces), axis=1), t_next - t, ok)
            bad = np.flatnonzero(~ok & (stage < last))
            if bad.size == 0:
                return q_hat, x_hat, it
            self._damp(cells, w0, w_hat, stage, bad)

    def _damp(self, cells, w0, w_hat, stage, bad):
        self.damped_predictors += int(np.count_nonzero(stage[bad] == 0))
        stage[bad] += 1
        w_hat[bad, 1:] = w0[bad, 1:] * np.asarray(DAMPING)[stage[bad] - 1][:, None, None]
        self.w_hat[cells[bad]] = w_hat[bad]
        log.info("cycle %d: damped predictors in cells %s", self.cycles, cells[bad].tolist())

    def _speed_ok(self, cells, states, dt, admissible):
        """Whether the signal speeds of each predictor's ``states`` fit its step at CFL 1.

        The step is sized from cell means; a reconstruction dipping toward
        vacuum can carry much faster waves than its mean.
        """
        ok = np.ones(len(cells), dtype=bool)
        k = np.flatnonzero(admissible)
        if k.size == 0:
            return ok
        q = states[k]
        v = mesh_velocity(q, self.velocity) if self.cfl_speed == "ale" else np.zeros(q.shape[:-1])
        speed = np.max(self.system.max_speed(q, v), axis=(1, 2))
        ok[k] = speed * dt[k] <= self.dx[cells[k]]
        return ok
