"""Reference-element tables on [0, 1] and the space-time square [0, 1]^2.

Two bases live here:

* a nodal Lagrange basis through the Gauss-Legendre points, used in space and
  in time by the space-time predictor (tensor products ``theta_k(xi, tau) =
  phi_a(xi) phi_b(tau)`` with the flat index ``k = a * (M + 1) + b``);
* a modal basis of Legendre polynomials rescaled to [0, 1], used for the WENO
  reconstruction polynomials.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as leg
from numpy.polynomial import polynomial as poly

from .errors import ConfigurationError, OutOfDomainError

MAX_DEGREE = 5


def gauss_legendre(n):
    """``n``-point Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = leg.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _lagrange_coeffs(nodes):
    """Monomial coefficients of the Lagrange polynomials through ``nodes``."""
    n = len(nodes)
    coeffs = np.zeros((n, n))
    for b in range(n):
        others = np.delete(nodes, b)
        c = poly.polyfromroots(others)
        coeffs[b] = c / np.prod(nodes[b] - others)
    return coeffs


def _polyval_rows(coeffs, x):
    """Evaluate each row of ``coeffs`` at points ``x`` -> shape (len(x), rows)."""
    x = np.asarray(x, dtype=float)
    powers = x[..., None] ** np.arange(coeffs.shape[1])
    return powers @ coeffs.T


class BasisTables:
    """Precomputed quadrature, basis values and reference matrices for degree ``M``.

    Instances are immutable in practice and shared between every cell of a run.
    """

    def __init__(self, M):
        if not (isinstance(M, (int, np.integer)) and 1 <= M <= MAX_DEGREE):
            raise ConfigurationError(f"polynomial degree must be an integer in 1..{MAX_DEGREE}, got {M!r}")
        self.M = int(M)
        n = self.n = self.M + 1
        self.nodes, self.weights = gauss_legendre(n)
        zeta, w = self.nodes, self.weights

        # nodal Lagrange basis
        self._lag = _lagrange_coeffs(zeta)
        self._dlag = np.array([np.pad(poly.polyder(c), (0, 1)) for c in self._lag])
        self.phi0 = _polyval_rows(self._lag, 0.0)
        self.phi1 = _polyval_rows(self._lag, 1.0)
        # diff[a, c] = phi_c'(zeta_a)
        self.diff = _polyval_rows(self._dlag, zeta)

        # modal basis psi_m(xi) = P_m(2 xi - 1)
        self.psi_at_nodes = self.modal_values(zeta)
        self.psi0 = self.modal_values(0.0)
        self.psi1 = self.modal_values(1.0)

        # space-time matrices, assembled by tensor Gauss quadrature
        theta, dtheta_tau = self._spacetime_at_nodes()
        wst = np.outer(w, w).reshape(-1)
        self.mass = (theta * wst[:, None]).T @ theta
        trace0 = np.kron(np.eye(n), self.phi0)  # theta_m(zeta_a, 0) over (a, m)
        trace1 = np.kron(np.eye(n), self.phi1)
        self.bracket0 = (trace0 * w[:, None]).T @ trace0
        self.bracket1 = (trace1 * w[:, None]).T @ trace1
        self.K1 = (theta * wst[:, None]).T @ dtheta_tau + self.bracket0
        self.F0 = (trace0 * w[:, None]).T @ self.psi_at_nodes
        self.G0 = (trace0 * w[:, None]).T  # [theta_k, phi_m]^0
        self.dtau_mass = (dtheta_tau * wst[:, None]).T @ theta  # <d_tau theta_k, theta_m>

        # K1 is block diagonal in space: K1 = diag(w) (x) T
        self.time_matrix = self.K1[:n, :n] / w[0]
        self.time_inv = np.linalg.inv(self.time_matrix)
        # tinv_w[b, d] = (T^-1)_{bd} w_d
        self.tinv_w = self.time_inv * w[None, :]

        self.osc = self._oscillation_matrix()
        # antiderivatives of psi_m in the monomial basis of s = 2 xi - 1, shape (n, n+1)
        self._modal_int = np.zeros((n, n + 1))
        for m in range(n):
            c = leg.leg2poly(leg.legint(np.eye(n)[m]))
            self._modal_int[m, : len(c)] = c

    # ------------------------------------------------------------------ nodal
    def lagrange(self, x):
        """Values of the 1D Lagrange basis at ``x`` -> (..., M+1)."""
        return _polyval_rows(self._lag, x)

    def lagrange_deriv(self, x):
        return _polyval_rows(self._dlag, x)

    def _spacetime_at_nodes(self):
        n = self.n
        eye = np.eye(n)
        # row index (a, b) of the quadrature point, column index (c, d) of the basis
        theta = np.kron(eye, eye)
        dtheta_tau = np.kron(eye, self.diff)
        return theta, dtheta_tau

    # ------------------------------------------------------------------ modal
    def modal_values(self, xi):
        xi = np.asarray(xi, dtype=float)
        return leg.legvander(2.0 * xi - 1.0, self.M)

    def modal_deriv(self, xi, order=1):
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape + (self.n,))
        for m in range(self.n):
            c = leg.legder(np.eye(self.n)[m], order) * 2.0**order
            out[..., m] = leg.legval(2.0 * xi - 1.0, c) if len(c) else 0.0
        return out

    def modal_interval_means(self, lo, hi):
        """Mean of every ``psi_m`` over ``[lo, hi]`` (exact) -> (..., M+1)."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        powers = np.arange(self.n + 1)
        vhi = (2.0 * hi - 1.0)[..., None] ** powers
        vlo = (2.0 * lo - 1.0)[..., None] ** powers
        return 0.5 * ((vhi - vlo) @ self._modal_int.T) / (hi - lo)[..., None]

    def _oscillation_matrix(self):
        xq, wq = gauss_legendre(self.n + 2)
        sigma = np.zeros((self.n, self.n))
        for alpha in range(1, self.M + 1):
            d = self.modal_deriv(xq, alpha)
            sigma += (d * wq[:, None]).T @ d
        return sigma

    # ------------------------------------------------------------ space-time
    def spacetime_values(self, xi, tau):
        """``theta_k(xi, tau)`` for all k -> (..., (M+1)^2)."""
        px = self.lagrange(xi)
        pt = self.lagrange(tau)
        return (px[..., :, None] * pt[..., None, :]).reshape(px.shape[:-1] + (self.n * self.n,))


@lru_cache(maxsize=None)
def build_tables(M):
    """Cached :class:`BasisTables` for degree ``M``."""
    return BasisTables(M)


def evaluate_spacetime(coeffs, xi, tau, tables, tol=1e-12):
    """Evaluate a nodal space-time polynomial at ``(xi, tau)``.

    ``coeffs`` has shape ``((M+1)^2, nvar)`` (flat index ``a*(M+1)+b``) or
    ``(M+1, M+1, nvar)``.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    n = tables.n
    if coeffs.shape[0] != n * n and coeffs.shape[:2] != (n, n):
        raise ValueError(f"expected {n * n} space-time coefficients, got shape {coeffs.shape}")
    scalar = coeffs.ndim == 1
    flat = coeffs.reshape(n * n, -1)
    xi = np.asarray(xi, dtype=float)
    tau = np.asarray(tau, dtype=float)
    for name, val in (("xi", xi), ("tau", tau)):
        if np.any(val < -tol) or np.any(val > 1.0 + tol):
            raise OutOfDomainError(f"{name} outside the reference interval [0, 1]")
    out = tables.spacetime_values(xi, tau) @ flat
    return out[..., 0] if scalar else out
