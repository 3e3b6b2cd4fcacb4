"""Verification oracles: exact Euler Riemann solver, travelling Alfven wave, error norms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import gauss_legendre
from .errors import ComparisonError, UnsupportedCaseError
from .systems import SQRT_4PI, IdealMHD

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 100


def _pressure_function(p, rho, pk, gamma):
    """Toro's ``f_K(p)`` and its derivative for one side."""
    c = math.sqrt(gamma * pk / rho)
    if p > pk:  # shock
        a = 2.0 / ((gamma + 1.0) * rho)
        b = (gamma - 1.0) / (gamma + 1.0) * pk
        root = math.sqrt(a / (p + b))
        f = (p - pk) * root
        df = root * (1.0 - 0.5 * (p - pk) / (b + p))
    else:  # rarefaction
        ratio = p / pk
        e = (gamma - 1.0) / (2.0 * gamma)
        f = 2.0 * c / (gamma - 1.0) * (ratio**e - 1.0)
        df = ratio ** (-(gamma + 1.0) / (2.0 * gamma)) / (rho * c)
    return f, df


@dataclass(frozen=True)
class RiemannSolution:
    """Self-similar solution of an Euler Riemann problem.

    ``sample(xi)`` returns primitive ``(rho, u, p)`` at ``xi = (x - x_d) / t``.
    """

    left: tuple
    right: tuple
    gamma: float
    p_star: float
    u_star: float
    rho_star_left: float
    rho_star_right: float
    iterations: int

    def wave_speeds(self):
        """Head/tail (or shock) speeds of the left wave, contact, and right wave."""
        g = self.gamma
        rl, ul, pl = self.left
        rr, ur, pr = self.right
        cl = math.sqrt(g * pl / rl)
        cr = math.sqrt(g * pr / rr)
        ps, us = self.p_star, self.u_star
        if ps > pl:
            sl = ul - cl * math.sqrt((g + 1) / (2 * g) * ps / pl + (g - 1) / (2 * g))
            left = (sl, sl)
        else:
            csl = cl * (ps / pl) ** ((g - 1) / (2 * g))
            left = (ul - cl, us - csl)
        if ps > pr:
            sr = ur + cr * math.sqrt((g + 1) / (2 * g) * ps / pr + (g - 1) / (2 * g))
            right = (sr, sr)
        else:
            csr = cr * (ps / pr) ** ((g - 1) / (2 * g))
            right = (us + csr, ur + cr)
        return left, us, right

    def sample(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.empty(xi.shape + (3,))
        flat = out.reshape(-1, 3)
        for k, s in enumerate(xi.reshape(-1)):
            flat[k] = self._sample_one(float(s))
        return out

    def sample_at(self, x, t, x_d=0.0):
        """Primitive state at positions ``x`` and time ``t > 0``."""
        if t <= 0.0:
            x = np.asarray(x, dtype=float)
            return np.where((x <= x_d)[..., None], np.array(self.left), np.array(self.right))
        return self.sample((np.asarray(x, dtype=float) - x_d) / t)

    def _sample_one(self, s):
        g = self.gamma
        rl, ul, pl = self.left
        rr, ur, pr = self.right
        ps, us = self.p_star, self.u_star
        if s <= us:
            cl = math.sqrt(g * pl / rl)
            if ps > pl:
                sl = ul - cl * math.sqrt((g + 1) / (2 * g) * ps / pl + (g - 1) / (2 * g))
                return (rl, ul, pl) if s <= sl else (self.rho_star_left, us, ps)
            if s <= ul - cl:
                return (rl, ul, pl)
            csl = cl * (ps / pl) ** ((g - 1) / (2 * g))
            if s >= us - csl:
                return (self.rho_star_left, us, ps)
            c = 2.0 / (g + 1) * (cl + (g - 1) / 2 * (ul - s))
            u = 2.0 / (g + 1) * (cl + (g - 1) / 2 * ul + s)
            rho = rl * (c / cl) ** (2 / (g - 1))
            return (rho, u, pl * (c / cl) ** (2 * g / (g - 1)))
        cr = math.sqrt(g * pr / rr)
        if ps > pr:
            sr = ur + cr * math.sqrt((g + 1) / (2 * g) * ps / pr + (g - 1) / (2 * g))
            return (rr, ur, pr) if s >= sr else (self.rho_star_right, us, ps)
        if s >= ur + cr:
            return (rr, ur, pr)
        csr = cr * (ps / pr) ** ((g - 1) / (2 * g))
        if s <= us + csr:
            return (self.rho_star_right, us, ps)
        c = 2.0 / (g + 1) * (cr - (g - 1) / 2 * (ur - s))
        u = 2.0 / (g + 1) * (-cr + (g - 1) / 2 * ur + s)
        rho = rr * (c / cr) ** (2 / (g - 1))
        return (rho, u, pr * (c / cr) ** (2 * g / (g - 1)))


def _star_density(p, rho, pk, gamma):
    if p > pk:
        r = p / pk
        q = (gamma - 1.0) / (gamma + 1.0)
        return rho * (r + q) / (q * r + 1.0)
    return rho * (p / pk) ** (1.0 / gamma)


def solve_euler_rp(left, right, gamma=1.4, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    """Exact solution of the Euler Riemann problem with primitive states ``(rho, u, p)``.

    Newton iteration on the pressure function, started from the
    two-rarefaction estimate.

    Raises
    ------
    UnsupportedCaseError
        For non-positive input states or when the data generate vacuum.
    """
    rl, ul, pl = (float(v) for v in left)
    rr, ur, pr = (float(v) for v in right)
    if min(rl, pl, rr, pr) <= 0.0:
        raise UnsupportedCaseError("Riemann states need positive density and pressure")
    g = float(gamma)
    cl = math.sqrt(g * pl / rl)
    cr = math.sqrt(g * pr / rr)
    if 2.0 / (g - 1.0) * (cl + cr) <= ur - ul:
        raise UnsupportedCaseError("initial data generate vacuum")

    z = (g - 1.0) / (2.0 * g)
    p = ((cl + cr - 0.5 * (g - 1.0) * (ur - ul)) / (cl / pl**z + cr / pr**z)) ** (1.0 / z)
    p = max(p, 1e-14 * min(pl, pr))
    du = ur - ul
    for it in range(1, max_iter + 1):
        fl, dfl = _pressure_function(p, rl, pl, g)
        fr, dfr = _pressure_function(p, rr, pr, g)
        p_new = p - (fl + fr + du) / (dfl + dfr)
        if p_new <= 0.0:
            p_new = 0.5 * p
        change = 2.0 * abs(p_new - p) / (p_new + p)
        p = p_new
        if change <= tol:
            break
    else:
        raise UnsupportedCaseError("Newton iteration for the star pressure did not converge")
    fl, _ = _pressure_function(p, rl, pl, g)
    fr, _ = _pressure_function(p, rr, pr, g)
    u = 0.5 * (ul + ur) + 0.5 * (fr - fl)
    return RiemannSolution(
        left=(rl, ul, pl),
        right=(rr, ur, pr),
        gamma=g,
        p_star=p,
        u_star=u,
        rho_star_left=_star_density(p, rl, pl, g),
        rho_star_right=_star_density(p, rr, pr, g),
        iterations=it,
    )


# ---------------------------------------------------------------- Alfven wave
ALFVEN_AMPLITUDE = 0.1
ALFVEN_WIDTH = 0.25
ALFVEN_SPEED = 1.0


def alfven_primitive(x, t, amplitude=ALFVEN_AMPLITUDE, sigma=ALFVEN_WIDTH, speed=ALFVEN_SPEED):
    """Primitive MHD state ``(rho, u, v, w, p, Bx, By, Bz, psi)`` of the travelling wave."""
    x = np.asarray(x, dtype=float)
    v = 1.0 - amplitude * np.exp(-0.5 * (x - speed * t) ** 2 / sigma**2)
    root = np.sqrt(2.0 - v**2)
    one = np.ones_like(x)
    return np.stack(
        (one, 0.0 * one, v, -root, one, SQRT_4PI * one, -SQRT_4PI * v, SQRT_4PI * root, 0.0 * one),
        axis=-1,
    )


def alfven_exact(x, t, amplitude=ALFVEN_AMPLITUDE, sigma=ALFVEN_WIDTH, speed=ALFVEN_SPEED, gamma=5.0 / 3.0):
    """Conserved MHD state of the travelling Alfven wave at ``(x, t)``."""
    return IdealMHD(gamma=gamma).to_conserved(alfven_primitive(x, t, amplitude, sigma, speed))


# ---------------------------------------------------------------- error norms
NORMS = ("L1", "L2", "Linf")


def error_norm(x_node, values, exact, norm="L2", n_quad=None):
    """Error of a piecewise function against ``exact(x)`` on the mesh ``x_node``.

    Parameters
    ----------
    x_node : array_like, shape (N+1,)
    values : callable or array_like
        Either ``values(cell_index_array, xi)`` returning the numerical
        solution at reference points, or an array of cell values (constant
        per cell).
    exact : callable
        ``exact(x)`` for an array of positions.
    n_quad : int
        Quadrature points per cell.
    """
    if norm not in NORMS:
        raise ValueError(f"norm must be one of {NORMS}, got {norm!r}")
    x_node = np.asarray(x_node, dtype=float)
    dx = np.diff(x_node)
    n = len(dx)
    if n_quad is None:
        n_quad = 3
    s, w = gauss_legendre(n_quad)
    xq = x_node[:-1, None] + dx[:, None] * s[None, :]
    if callable(values):
        num = np.asarray(values(np.arange(n), s))
    else:
        vals = np.asarray(values, dtype=float)
        num = np.broadcast_to(vals.reshape(n, 1, *vals.shape[1:]), (n, n_quad) + vals.shape[1:])
    diff = np.abs(num - np.asarray(exact(xq)))
    wts = (dx[:, None] * w[None, :]).reshape((n, n_quad) + (1,) * (diff.ndim - 2))
    if norm == "L1":
        return np.sum(wts * diff, axis=(0, 1))
    if norm == "L2":
        return np.sqrt(np.sum(wts * diff**2, axis=(0, 1)))
    return np.max(diff, axis=(0, 1))


def error_norms(report, exact, component=0, norm="L2", t=None, n_quad=None, use_polynomial=True):
    """Error of one conserved or derived component of a finished run.

    ``exact(x)`` returns the reference value of the same component.  With
    ``use_polynomial`` the final reconstruction polynomials are integrated,
    otherwise the cell averages.  ``component`` may be an index into the
    conserved vector or a callable mapping conserved states to the quantity.
    """
    if t is not None and abs(float(t) - float(report.t_end)) > 1e-14 * max(1.0, abs(t)):
        raise ComparisonError(f"solution is at t={report.t_end}, reference requested at t={t}")
    pick = component if callable(component) else (lambda q: q[..., component])
    if use_polynomial:
        tables_n = report.w_hat.shape[1]
        from .basis import build_tables

        tables = build_tables(tables_n - 1)

        def values(cells, xi):
            return pick(np.einsum("gm,cmv->cgv", tables.modal_values(xi), report.w_hat[cells]))

        n_quad = tables_n if n_quad is None else n_quad
        return error_norm(report.x_node, values, exact, norm, n_quad)
    return error_norm(report.x_node, pick(report.Q), exact, norm, n_quad or 1)


def convergence_order(errors, cells):
    """Observed orders ``log(e_k / e_{k+1}) / log(N_{k+1} / N_k)``."""
    errors = np.asarray(errors, dtype=float)
    cells = np.asarray(cells, dtype=float)
    if errors.shape != cells.shape:
        raise ValueError("errors and grid sizes must have equal length")
    return np.log(errors[:-1] / errors[1:]) / np.log(cells[1:] / cells[:-1])
