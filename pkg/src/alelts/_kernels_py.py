"""Pure NumPy implementation of the hot kernels.

Used when the compiled extension is unavailable, and as the reference the
compiled kernels are tested against.
"""
import numpy as np

from .errors import MeshTanglingError, PredictorDivergenceError
from .systems import mesh_velocity


def _d_xi(diff, f):
    """Spatial derivative at the nodes in difference form.

    ``sum_e D[a, e] (f_e - f_a)`` equals ``D f`` because the rows of ``D``
    sum to zero, and it vanishes exactly on constant data.
    """
    jump = f[:, None, :] - f[:, :, None]  # (c, a, e, ...)
    return np.einsum("ae,cae...->ca...", diff, jump)


def predictor(w_hat, x_left, dx, dt, system, tables, velocity, tol, max_iter):
    n = tables.n
    diff = tables.diff
    tinv_w = tables.tinv_w
    zeta = tables.nodes

    w_nodes = tables.psi_at_nodes @ w_hat  # (c, a, v)
    x0 = x_left[:, None] + dx[:, None] * zeta[None, :]
    dt3 = dt[:, None, None]

    q = np.repeat(w_nodes[:, :, None, :], n, axis=2)
    vel = mesh_velocity(q, velocity)
    x = x0[:, :, None] + vel * dt3 * zeta[None, None, :]
    base_q = w_nodes[:, :, None, :]
    base_x = x0[:, :, None]

    for it in range(1, max_iter + 1):
        vel = mesh_velocity(q, velocity)
        x_new = base_x + dt3 * (vel @ tinv_w.T)
        x_xi = diff @ x_new
        x_tau = x_new @ diff.T
        if np.any(x_xi <= 0.0):
            bad = np.unique(np.nonzero(x_xi <= 0.0)[0])
            raise MeshTanglingError("space-time element inverted inside predictor", cells=bad.tolist())
        f = system.flux(q)
        f_xi = _d_xi(diff, f)
        q_xi = _d_xi(diff, q)
        res = (dt3 / x_xi)[..., None] * f_xi - (x_tau / x_xi)[..., None] * q_xi
        q_new = base_q - tinv_w @ res
        change_q = np.abs(q_new - q)
        done = np.all(change_q <= tol * (1.0 + np.abs(q_new))) and np.all(
            np.abs(x_new - x) <= tol * (1.0 + np.abs(x_new))
        )
        q, x = q_new, x_new
        if not np.all(np.isfinite(q)):
            bad = np.unique(np.nonzero(~np.isfinite(q))[0])
            raise PredictorDivergenceError("non-finite predictor state", cells=bad.tolist())
        if done:
            return q, x, it
    cells = np.unique(np.nonzero(change_q > tol * (1.0 + np.abs(q)))[0])
    raise PredictorDivergenceError(
        f"predictor did not converge in {max_iter} iterations",
        cells=cells.tolist(),
        residual=float(change_q.max()),
    )
