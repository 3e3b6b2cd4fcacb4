"""Numerical ALE fluxes and their time integrals over edge intervals."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .basis import gauss_legendre
from .errors import IntervalError, OsherUnavailableError
from .systems import mesh_velocity

log = logging.getLogger(__name__)

FLUX_KINDS = ("rusanov", "osher")
OSHER_POINTS = 3


def interface_speed(q_left, q_right, kind="fluid-u"):
    """Mean of the mesh speeds of the two interface states."""
    return 0.5 * (mesh_velocity(q_left, kind) + mesh_velocity(q_right, kind))


def _central(q_left, q_right, v, system):
    v = np.asarray(v, dtype=float)[..., None]
    return 0.5 * (system.flux(q_left) - v * q_left + system.flux(q_right) - v * q_right)


def rusanov_flux(q_left, q_right, v, system):
    """Local Lax-Friedrichs flux with the larger ALE spectral radius of both states."""
    q_left = np.asarray(q_left, dtype=float)
    q_right = np.asarray(q_right, dtype=float)
    smax = np.maximum(system.max_speed(q_left, v), system.max_speed(q_right, v))
    return _central(q_left, q_right, v, system) - 0.5 * smax[..., None] * (q_right - q_left)


def osher_dissipation(q_left, q_right, v, system, path_points=OSHER_POINTS):
    """Path-averaged ``|A^V|`` along the straight segment between the states.

    Returns ``(matrix, ok)``; ``ok`` is False where a path state is not
    admissible or its eigendecomposition failed.
    """
    s, w = gauss_legendre(path_points)
    jump = q_right - q_left
    path = q_left[..., None, :] + s[:, None] * jump[..., None, :]
    vv = np.broadcast_to(np.asarray(v, dtype=float)[..., None], path.shape[:-1])
    mats, ok = system.abs_jacobian(path, vv)
    ok = np.all(ok, axis=-1)
    return np.einsum("g,...gij->...ij", w, mats), ok


def osher_flux(q_left, q_right, v, system, path_points=OSHER_POINTS):
    """Osher-type flux with a straight-line path in phase space.

    Raises
    ------
    OsherUnavailableError
        If some path state is inadmissible or has a degenerate Jacobian.
    """
    q_left = np.asarray(q_left, dtype=float)
    q_right = np.asarray(q_right, dtype=float)
    flux, ok = _osher(q_left, q_right, v, system, path_points)
    if not np.all(ok):
        raise OsherUnavailableError("Osher flux unavailable for some interface states")
    return flux


def _osher(q_left, q_right, v, system, path_points):
    dmat, ok = osher_dissipation(q_left, q_right, v, system, path_points)
    jump = q_right - q_left
    flux = _central(q_left, q_right, v, system) - 0.5 * np.einsum("...ij,...j->...i", dmat, jump)
    return flux, ok


def numerical_flux(kind, q_left, q_right, v, system, path_points=OSHER_POINTS):
    """Evaluate the configured flux; Osher failures fall back to Rusanov.

    Returns ``(flux, n_fallback)``.
    """
    if kind == "rusanov":
        return rusanov_flux(q_left, q_right, v, system), 0
    if kind != "osher":
        raise ValueError(f"unknown flux kind {kind!r}; expected one of {FLUX_KINDS}")
    flux, ok = _osher(q_left, q_right, v, system, path_points)
    n_bad = int(np.size(ok) - np.count_nonzero(ok))
    if n_bad:
        bad = ~ok
        flux[bad] = rusanov_flux(q_left[bad], q_right[bad], np.broadcast_to(v, ok.shape)[bad], system)
        log.debug("osher flux replaced by rusanov at %d states", n_bad)
    return flux, n_bad


@dataclass(frozen=True)
class EdgeFluxResult:
    """Time integral of the numerical flux over one edge interval."""

    integral: np.ndarray  # int f^V dt over the interval
    dt_edge: float
    x_new: float
    mean_speed: float
    fallbacks: int = 0

    @property
    def displacement(self):
        return self.mean_speed * self.dt_edge


def edge_quadrature(t_a, t_b, q_left_at, q_right_at, system, velocity, flux_kind,
                    n_gauss, path_points=OSHER_POINTS):
    """Shared quadrature core of :func:`integrate_edge` and the solver.

    ``q_left_at(times)`` / ``q_right_at(times)`` return the interface states
    for a ``(k, n_gauss)`` array of physical times.
    Returns ``(flux_integral, displacement, fallbacks)`` with leading shape ``(k,)``.
    """
    s, w = gauss_legendre(n_gauss)
    length = t_b - t_a
    times = t_a[:, None] + length[:, None] * s[None, :]
    ql = q_left_at(times)
    qr = q_right_at(times)
    vbar = interface_speed(ql, qr, velocity)
    f, nbad = numerical_flux(flux_kind, ql, qr, vbar, system, path_points)
    lw = length[:, None] * w[None, :]
    return np.einsum("kg,kgv->kv", lw, f), np.sum(lw * vbar, axis=1), nbad


def integrate_edge(pred_left, pred_right, interval, flux_kind="osher", n_gauss=None,
                   x_start=None, path_points=OSHER_POINTS):
    """Integrate the numerical flux between two predictors over ``interval``.

    Each predictor is evaluated at its own local time ``tau = (t - t0) / dt``.
    ``x_start`` is the node position at ``interval[0]``; by default the left
    predictor's right boundary position there.
    """
    t_a, t_b = (float(t) for t in interval)
    if not t_b > t_a:
        raise IntervalError(f"empty or inverted edge interval [{t_a}, {t_b}]")
    tables = pred_left.tables
    n_gauss = tables.n if n_gauss is None else int(n_gauss)
    system = pred_left.system

    def side(pred, name):
        def at(times):
            q, _, _ = pred.trace(name, pred.tau_of(times))
            return q
        return at

    integral, disp, nbad = edge_quadrature(
        np.array([t_a]), np.array([t_b]), side(pred_left, "right"), side(pred_right, "left"),
        system, pred_left.velocity, flux_kind, n_gauss, path_points,
    )
    if x_start is None:
        _, x_start, _ = pred_left.trace("right", pred_left.tau_of(t_a))
    dt_edge = t_b - t_a
    return EdgeFluxResult(
        integral=integral[0],
        dt_edge=dt_edge,
        x_new=float(x_start) + float(disp[0]),
        mean_speed=float(disp[0]) / dt_edge,
        fallbacks=nbad,
    )
