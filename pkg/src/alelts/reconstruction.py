"""Polynomial WENO reconstruction on (virtual) moving-mesh stencils.

With local time stepping the neighbours of a cell generally sit at other
local times, so reconstruction works on *virtual* data: neighbour averages
and node positions are moved to the reconstruction time with the
neighbours' space-time predictors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MeshTanglingError
from .predictor import TAU_TOL, spatial_average
from .systems import mesh_velocity

WENO_EPS = 1e-14
WENO_POWER = 8
LAMBDA_CENTRAL = 1e5
LAMBDA_SIDED = 1.0
POSITIVITY_FLOOR = 1e-8  # density/pressure kept above this fraction of the cell mean's
POSITIVITY_BISECTIONS = 40


@dataclass(frozen=True)
class Stencil:
    left: int
    right: int
    weight: float


def stencil_layout(M, central=LAMBDA_CENTRAL, sided=LAMBDA_SIDED):
    """Stencils of a degree-``M`` reconstruction.

    Odd orders (even ``M``) get one central stencil, even orders two; every
    order adds the fully left- and right-sided stencils.
    """
    if M % 2 == 0:
        middle = [Stencil(M // 2, M // 2, central)]
    else:
        h = M // 2
        middle = [Stencil(h + 1, h, central), Stencil(h, h + 1, central)]
    return tuple(middle + [Stencil(M, 0, sided), Stencil(0, M, sided)])


@dataclass(frozen=True)
class ReconstructionPolynomial:
    """Modal reconstruction ``w_h(xi) = sum_m psi_m(xi) coeffs[m]`` of one cell."""

    coeffs: np.ndarray  # (M+1, nvar)
    cell: int
    time: float
    x_left: float
    dx: float
    tables: object

    def evaluate(self, x):
        xi = (np.asarray(x, dtype=float) - self.x_left) / self.dx
        return self.tables.modal_values(xi) @ self.coeffs

    def mean(self):
        # only psi_0 has a nonzero mean on [0, 1]
        return self.coeffs[0].copy()


def reconstruct_stencil(bounds, averages, tables):
    """Coefficients matching the given interval means.

    Parameters
    ----------
    bounds : array_like, shape (..., M+1, 2)
        Stencil cell intervals in the target cell's reference coordinate.
    averages : array_like, shape (..., M+1, nvar)
    """
    bounds = np.asarray(bounds, dtype=float)
    averages = np.asarray(averages, dtype=float)
    width = bounds[..., 1] - bounds[..., 0]
    if np.any(width <= 0.0):
        raise MeshTanglingError("stencil contains a collapsed or inverted cell")
    mat = tables.modal_interval_means(bounds[..., 0], bounds[..., 1])
    try:
        return np.linalg.solve(mat, averages)
    except np.linalg.LinAlgError as exc:
        raise MeshTanglingError("singular reconstruction system") from exc


def oscillation_indicators(candidates, tables):
    """``sigma = w^T Sigma w`` per candidate and component (clamped at 0)."""
    sigma = np.einsum("...lv,lm,...mv->...v", candidates, tables.osc, candidates)
    return np.maximum(sigma, 0.0)


def nonlinear_weights(sigma, lambdas, eps=WENO_EPS, power=WENO_POWER):
    """Normalised WENO weights along axis -2 of ``sigma`` (stencil axis).

    ``lambdas`` broadcasts against ``sigma[..., 0]``; zero entries switch a
    stencil off.  The ratio form avoids overflow of ``(sigma + eps)^-r``.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    lam = lambdas[..., None] * np.ones_like(sigma)
    s = sigma + eps
    active = lam > 0.0
    s_min = np.min(np.where(active, s, np.inf), axis=-2, keepdims=True)
    raw = np.where(active, lam * (s_min / s) ** power, 0.0)
    return raw / np.sum(raw, axis=-2, keepdims=True)


def weno_combine(candidates, lambdas, tables, eps=WENO_EPS, power=WENO_POWER):
    """Blend candidate coefficients ``(..., S, M+1, nvar)`` componentwise."""
    candidates = np.asarray(candidates, dtype=float)
    sigma = oscillation_indicators(candidates, tables)  # (..., S, nvar)
    omega = nonlinear_weights(sigma, lambdas, eps, power)
    return np.einsum("...sv,...smv->...mv", omega, candidates)


# ---------------------------------------------------------------------------
# virtual data
# ---------------------------------------------------------------------------


@dataclass
class VirtualData:
    """Stencil-window data of a batch of cells at their reconstruction times.

    Window position ``p`` holds cell ``cells + p - radius``; node position
    ``p`` is the left node of that cell.
    """

    cells: np.ndarray
    time: np.ndarray
    radius: int
    x: np.ndarray  # (k, 2R+2) virtual node positions
    q: np.ndarray  # (k, 2R+1, nvar) virtual averages
    inside: np.ndarray  # (k, 2R+1) window cell lies in the domain
    valid: np.ndarray = None  # (k, 2R+1) window cell usable in a stencil

    def __post_init__(self):
        if self.valid is None:
            self.valid = self.inside.copy()

    @property
    def widths(self):
        return self.x[:, 1:] - self.x[:, :-1]


def predictor_valid(state, cells, t):
    """Whether the stored predictor of ``cells`` can be evaluated at ``t``."""
    lo = state.t_cell[cells]
    hi = state.t_next[cells]
    tol = TAU_TOL * np.maximum(hi - lo, 0.0)
    return state.fresh[cells] & (t >= lo - tol) & (t <= hi + tol)


def trace_velocity(state, cells, side, t):
    """Mesh speed of the predictor traces of ``cells`` at physical times ``t``."""
    length = state.t_next[cells] - state.t_cell[cells]
    # finished cells have an empty window; their values are masked by the caller
    tau = (t - state.t_cell[cells]) / np.where(length > 0.0, length, 1.0)
    lt = state.tables.lagrange(np.clip(tau, 0.0, 1.0))
    poly = state.side_q[side][cells]  # (..., n, nvar)
    q = np.einsum("...b,...bv->...v", lt, poly)
    return mesh_velocity(q, state.velocity)


def virtual_node_positions(state, nodes, t):
    """Interface positions moved from their node times to ``t``.

    The interface speed is the mean of the mesh speeds of both adjacent
    predictors; where only one side has a predictor covering a quadrature
    time (or the node is a domain boundary) that side alone is used.
    """
    nodes = np.asarray(nodes)
    t = np.broadcast_to(np.asarray(t, dtype=float), nodes.shape)
    out = state.x_node[nodes].astype(float)
    t_from = state.t_node[nodes]
    move = t_from != t
    if not np.any(move):
        return out
    k = nodes[move]
    ta = t_from[move]
    tb = t[move]
    n_cells = state.n_cells
    sg, wg = state.quad_nodes, state.quad_weights
    times = ta[:, None] + (tb - ta)[:, None] * sg[None, :]
    left = np.broadcast_to(np.clip(k - 1, 0, n_cells - 1)[:, None], times.shape)
    right = np.broadcast_to(np.clip(k, 0, n_cells - 1)[:, None], times.shape)
    has_left = np.broadcast_to((k > 0)[:, None], times.shape)
    has_right = np.broadcast_to((k < n_cells)[:, None], times.shape)
    ok_l = has_left & predictor_valid(state, left, times)
    ok_r = has_right & predictor_valid(state, right, times)
    if not np.all(ok_l | ok_r):
        bad = np.unique(k[~np.all(ok_l | ok_r, axis=1)])
        raise MeshTanglingError(f"no predictor covers the motion of nodes {bad.tolist()}")
    vl = np.where(ok_l, trace_velocity(state, left, 1, times), 0.0)
    vr = np.where(ok_r, trace_velocity(state, right, 0, times), 0.0)
    vbar = (vl + vr) / (ok_l.astype(float) + ok_r.astype(float))
    out[move] = state.x_node[k] + (tb - ta) * (vbar @ wg)
    return out


def gather_virtual_data(state, cells, t, radius, boundary="mirror"):
    """Virtual geometry and averages around ``cells`` at times ``t``.

    Cells already at time ``t`` contribute their true averages; the others
    contribute the mean of their predictor at the matching local time.

    ``boundary="mirror"`` fills window slots beyond the domain with mirror
    images of the interior cells (transmissive ghost cells), so every
    stencil stays available; ``"clip"`` leaves them empty (NaN) and the
    stencils reaching outside are dropped.
    """
    if boundary not in ("mirror", "clip"):
        raise ValueError(f"boundary must be 'mirror' or 'clip', got {boundary!r}")
    cells = np.asarray(cells)
    t = np.asarray(t, dtype=float)
    n_cells = state.n_cells
    offs = np.arange(-radius, radius + 1)
    win = cells[:, None] + offs[None, :]
    inside = (win >= 0) & (win < n_cells)
    nodes = cells[:, None] + np.arange(-radius, radius + 2)[None, :]
    node_in = (nodes >= 0) & (nodes <= n_cells)

    tt = np.broadcast_to(t[:, None], nodes.shape)
    x = np.full(nodes.shape, np.nan)
    x[node_in] = virtual_node_positions(state, nodes[node_in], tt[node_in])

    q = np.full(win.shape + (state.nvar,), np.nan)
    jj = win[inside]
    tj = np.broadcast_to(t[:, None], win.shape)[inside]
    vals = state.Q[jj].copy()
    lagging = state.t_cell[jj] != tj
    if np.any(lagging):
        j = jj[lagging]
        if not np.all(predictor_valid(state, j, tj[lagging])):
            raise RuntimeError("virtual average requested outside a predictor window")
        tau = (tj[lagging] - state.t_cell[j]) / (state.t_next[j] - state.t_cell[j])
        vals[lagging], _ = spatial_average(state.q_hat[j], state.x_hat[j], state.tables, np.clip(tau, 0.0, 1.0))
    q[inside] = vals

    widths = x[:, 1:] - x[:, :-1]
    if np.any(widths[inside] <= 0.0):
        k, p = np.argwhere(inside & ~(widths > 0.0))[0]
        raise MeshTanglingError(
            f"virtual cell {int(win[k, p])} has non-positive width at t={float(t[k])!r}"
        )
    valid = inside
    if boundary == "mirror" and not np.all(inside):
        _mirror_ghosts(cells, x, q, inside, radius, n_cells)
        valid = np.ones_like(inside)
    return VirtualData(cells=cells, time=t, radius=radius, x=x, q=q, inside=inside, valid=valid)


def _mirror_ghosts(cells, x, q, inside, radius, n_cells):
    """Fill out-of-domain window slots in place with mirrored interior cells."""
    rows = np.arange(len(cells))
    width = x[:, 1:] - x[:, :-1]
    for p in range(radius - 1, -1, -1):
        g = ~inside[:, p]
        if not np.any(g):
            continue
        j = cells[g] + p - radius  # negative ghost index
        pm = (-1 - j) - cells[g] + radius
        q[g, p] = q[rows[g], pm]
        x[g, p] = x[g, p + 1] - width[rows[g], pm]
    for p in range(radius + 1, 2 * radius + 1):
        g = ~inside[:, p]
        if not np.any(g):
            continue
        j = cells[g] + p - radius
        pm = (2 * n_cells - 1 - j) - cells[g] + radius
        q[g, p] = q[rows[g], pm]
        x[g, p + 1] = x[g, p] + width[rows[g], pm]


def reconstruct_cells(vdata, tables, stencils, eps=WENO_EPS, power=WENO_POWER):
    """WENO reconstruction of every cell in ``vdata`` -> (k, M+1, nvar)."""
    R = vdata.radius
    k = len(vdata.cells)
    M = tables.M
    nvar = vdata.q.shape[-1]
    xl = vdata.x[:, R]
    dx = vdata.x[:, R + 1] - xl
    eta = (vdata.x - xl[:, None]) / dx[:, None]
    cands = np.zeros((k, len(stencils), M + 1, nvar))
    lams = np.zeros((k, len(stencils)))
    for s, st in enumerate(stencils):
        ok = vdata.valid[:, R - st.left] & vdata.valid[:, R + st.right]
        if not np.any(ok):
            continue
        p = np.arange(R - st.left, R + st.right + 1)
        bounds = np.stack((eta[ok][:, p], eta[ok][:, p + 1]), axis=-1)
        cands[ok, s] = reconstruct_stencil(bounds, vdata.q[ok][:, p], tables)
        lams[ok, s] = st.weight
    return weno_combine(cands, lams, tables, eps, power), cands, lams


def _floor_ok(system, q, qbar):
    ok = system.admissible(q)
    pressure = getattr(system, "pressure", None)
    if pressure is None:
        return ok
    with np.errstate(all="ignore"):
        ok &= q[..., 0] >= POSITIVITY_FLOOR * qbar[..., 0]
        ok &= pressure(q) >= POSITIVITY_FLOOR * pressure(qbar)
    return ok


def positivity_limit(w_hat, tables, system, points=None):
    """Scale the high modes of inadmissible reconstructions toward the cell mean.

    For each cell the largest ``theta`` in [0, 1] is found (by bisection) such
    that ``mean + theta * (w(x) - mean)`` keeps positive density and pressure
    at every point in ``points`` (default: the predictor's spatial nodes and
    both cell faces).  Admissible reconstructions are returned unchanged.

    Returns ``(limited w_hat, theta)``.
    """
    w_hat = np.array(w_hat, dtype=float)
    k = w_hat.shape[0]
    theta = np.ones(k)
    if points is None:
        points = np.concatenate(([0.0], tables.nodes, [1.0]))
    basis = tables.modal_values(points)
    vals = np.einsum("pm,kmv->kpv", basis, w_hat)
    qbar = w_hat[:, None, 0, :]  # psi_0 = 1, so mode 0 is the cell mean
    good = np.all(_floor_ok(system, vals, np.broadcast_to(qbar, vals.shape)), axis=1)
    bad = np.flatnonzero(~good)
    if bad.size == 0:
        return w_hat, theta
    lo = np.zeros(bad.size)
    hi = np.ones(bad.size)
    mean = qbar[bad]
    dev = vals[bad] - mean
    for _ in range(POSITIVITY_BISECTIONS):
        mid = 0.5 * (lo + hi)
        trial = mean + mid[:, None, None] * dev
        ok = np.all(_floor_ok(system, trial, np.broadcast_to(mean, trial.shape)), axis=1)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    theta[bad] = lo
    w_hat[bad, 1:] *= lo[:, None, None]
    return w_hat, theta
