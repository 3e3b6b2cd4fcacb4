"""Element-local space-time Galerkin predictor on moving cells.

For each cell the nodal space-time solution ``q_hat[a, b]`` and the nodal
coordinates ``x_hat[a, b]`` (space node ``a``, time node ``b``) are found by
a fixed-point iteration of the discrete weak form.  Because the time-mass
structure factorises as ``diag(w) (x) T`` both linear solves reduce to a
multiplication with the precomputed ``T^{-1} diag(w)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import MeshTanglingError, OutOfDomainError
from .systems import mesh_velocity

log = logging.getLogger(__name__)

PREDICTOR_TOL = 1e-11
PREDICTOR_MAX_ITER = 100
TAU_TOL = 1e-12


def predict_batch(w_hat, x_left, dx, dt, system, tables, velocity="fluid-u",
                  tol=PREDICTOR_TOL, max_iter=PREDICTOR_MAX_ITER):
    """Run the predictor for a batch of cells.

    Parameters
    ----------
    w_hat : ndarray, shape (ncell, M+1, nvar)
        Modal reconstruction coefficients at the start of each local step.
    x_left, dx, dt : ndarray, shape (ncell,)
        Left node, width and local time step.

    Returns
    -------
    q_hat : ndarray, shape (ncell, M+1, M+1, nvar)
    x_hat : ndarray, shape (ncell, M+1, M+1)
    iterations : int
    """
    w_hat = np.asarray(w_hat, dtype=float)
    x_left = np.asarray(x_left, dtype=float)
    dx = np.asarray(dx, dtype=float)
    dt = np.asarray(dt, dtype=float)
    if np.any(dt <= 0.0):
        raise ValueError("predictor needs a positive time step")
    if np.any(dx <= 0.0):
        raise MeshTanglingError("predictor called on a cell with non-positive width")
    return kernels.predictor(w_hat, x_left, dx, dt, system, tables, velocity, tol, max_iter)


def time_basis(tables, tau, tol=TAU_TOL):
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < -tol) or np.any(tau > 1.0 + tol):
        raise OutOfDomainError(f"predictor evaluated outside its time window (tau={tau})")
    return tables.lagrange(np.clip(tau, 0.0, 1.0))


def side_polynomials(q_hat, x_hat, tables, side):
    """Spatial traces at ``xi = 0`` (``side="left"``) or ``xi = 1`` as time nodal data."""
    phi = tables.phi0 if side == "left" else tables.phi1
    q = np.einsum("a,...abv->...bv", phi, q_hat)
    x = np.einsum("a,...ab->...b", phi, x_hat)
    return q, x


def spatial_average(q_hat, x_hat, tables, tau):
    """Average of ``q_h(., tau)`` over the predictor's own extent and that extent's width."""
    lt = time_basis(tables, tau)  # (..., n)
    q = np.einsum("...b,...abv->...av", lt, q_hat)
    x = np.einsum("...b,...ab->...a", lt, x_hat)
    x_xi = np.einsum("ac,...c->...a", tables.diff, x)
    width = np.einsum("a,...a->...", tables.phi1 - tables.phi0, x)
    mass = np.einsum("a,...a,...av->...v", tables.weights, x_xi, q)
    return mass / width[..., None], width


@dataclass(frozen=True)
class SpaceTimePredictor:
    """Predictor of one cell, valid on ``[t0, t0 + dt]``."""

    q_hat: np.ndarray  # (M+1, M+1, nvar)
    x_hat: np.ndarray  # (M+1, M+1)
    x0: np.ndarray  # initial spatial nodes
    t0: float
    dt: float
    v_hat: np.ndarray
    iterations: int
    tables: object
    system: object
    velocity: str = "fluid-u"

    def coefficients(self):
        """Flat ``((M+1)^2, nvar)`` nodal coefficients."""
        n = self.tables.n
        return self.q_hat.reshape(n * n, -1)

    def evaluate(self, xi, tau):
        from .basis import evaluate_spacetime

        return evaluate_spacetime(self.q_hat, xi, tau, self.tables)

    def position(self, xi, tau):
        from .basis import evaluate_spacetime

        return evaluate_spacetime(self.x_hat[..., None], xi, tau, self.tables)[..., 0]

    def tau_of(self, t):
        return (np.asarray(t, dtype=float) - self.t0) / self.dt

    def trace(self, side, tau):
        """State, position and mesh speed on one element boundary at ``tau``."""
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        lt = time_basis(self.tables, tau)
        qs, xs = side_polynomials(self.q_hat, self.x_hat, self.tables, side)
        q = lt @ qs
        x = lt @ xs
        return q, x, mesh_velocity(q, self.velocity)


def run_predictor(w_hat, geometry, dt, system, tables, t0=0.0, velocity="fluid-u",
                  tol=PREDICTOR_TOL, max_iter=PREDICTOR_MAX_ITER):
    """Build the :class:`SpaceTimePredictor` of one cell.

    ``w_hat`` holds the modal reconstruction coefficients ``(M+1, nvar)``
    (or a :class:`~alelts.reconstruction.ReconstructionPolynomial`) and
    ``geometry`` the pair ``(x_left, x_right)`` at ``t0``.
    """
    coeffs = getattr(w_hat, "coeffs", w_hat)
    coeffs = np.asarray(coeffs, dtype=float)
    xl, xr = (float(g) for g in geometry)
    if not xr > xl:
        raise MeshTanglingError(f"degenerate cell [{xl}, {xr}]")
    q_hat, x_hat, it = predict_batch(
        coeffs[None], np.array([xl]), np.array([xr - xl]), np.array([float(dt)]),
        system, tables, velocity, tol, max_iter,
    )
    q_hat, x_hat = q_hat[0], x_hat[0]
    return SpaceTimePredictor(
        q_hat=q_hat,
        x_hat=x_hat,
        x0=xl + (xr - xl) * tables.nodes,
        t0=float(t0),
        dt=float(dt),
        v_hat=mesh_velocity(q_hat, velocity),
        iterations=int(it),
        tables=tables,
        system=system,
        velocity=velocity,
    )
