# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled space-time predictor for the Euler and GLM-MHD systems.

Same algorithm and convergence test as :func:`alelts._kernels_py.predictor`;
other systems are delegated to that implementation.
"""
import numpy as np

from libc.math cimport fabs, isfinite

from .errors import MeshTanglingError, PredictorDivergenceError
from . import _kernels_py

cdef double FOUR_PI = 12.566370614359172


cdef inline void euler_flux(const double* q, double* f, double gamma) noexcept nogil:
    cdef double rho = q[0], mom = q[1], ene = q[2]
    cdef double u = mom / rho
    cdef double p = (gamma - 1.0) * (ene - 0.5 * mom * u)
    f[0] = mom
    f[1] = mom * u + p
    f[2] = u * (ene + p)


cdef inline void mhd_flux(const double* q, double* f, double gamma, double c_h) noexcept nogil:
    cdef double rho = q[0]
    cdef double u = q[1] / rho, v = q[2] / rho, w = q[3] / rho
    cdef double ene = q[4], bx = q[5], by = q[6], bz = q[7], psi = q[8]
    cdef double b2 = bx * bx + by * by + bz * bz
    cdef double p = (gamma - 1.0) * (ene - 0.5 * rho * (u * u + v * v + w * w) - b2 / (2.0 * FOUR_PI))
    cdef double pt = p + b2 / (2.0 * FOUR_PI)
    cdef double vb = u * bx + v * by + w * bz
    f[0] = rho * u
    f[1] = rho * u * u + pt - bx * bx / FOUR_PI
    f[2] = rho * u * v - bx * by / FOUR_PI
    f[3] = rho * u * w - bx * bz / FOUR_PI
    f[4] = u * (ene + pt) - bx * vb / FOUR_PI
    f[5] = psi
    f[6] = u * by - v * bx
    f[7] = u * bz - w * bx
    f[8] = c_h * c_h * bx


cdef inline double mesh_speed(const double* q, int kind) noexcept nogil:
    if kind == 0:
        return q[1] / q[0]
    if kind == 1:
        return q[2] / q[0]
    return 0.0


def predictor(w_hat, x_left, dx, dt, system, tables, velocity, double tol, int max_iter):
    """Picard iteration of the ALE space-time predictor for a batch of cells.

    Returns ``(q_hat (c, n, n, nvar), x_hat (c, n, n), iterations)``.
    """
    cdef int kind_sys
    if system.name == "euler":
        kind_sys = 0
    elif system.name == "mhd":
        kind_sys = 1
    else:
        return _kernels_py.predictor(w_hat, x_left, dx, dt, system, tables, velocity, tol, max_iter)
    cdef int kind_v = {"fluid-u": 0, "fluid-v": 1, "zero": 2}[velocity]
    cdef double gamma = system.gamma
    cdef double c_h = getattr(system, "c_h", 0.0)

    cdef double[:, :, ::1] W = np.ascontiguousarray(w_hat, dtype=np.float64)
    cdef double[::1] XL = np.ascontiguousarray(x_left, dtype=np.float64)
    cdef double[::1] DX = np.ascontiguousarray(dx, dtype=np.float64)
    cdef double[::1] DT = np.ascontiguousarray(dt, dtype=np.float64)
    cdef double[:, ::1] PSI = np.ascontiguousarray(tables.psi_at_nodes, dtype=np.float64)
    cdef double[:, ::1] D = np.ascontiguousarray(tables.diff, dtype=np.float64)
    cdef double[:, ::1] TW = np.ascontiguousarray(tables.tinv_w, dtype=np.float64)
    cdef double[::1] Z = np.ascontiguousarray(tables.nodes, dtype=np.float64)

    cdef Py_ssize_t nc = W.shape[0], n = W.shape[1], nv = W.shape[2]
    q_arr = np.empty((nc, n, n, nv))
    x_arr = np.empty((nc, n, n))
    cdef double[:, :, :, ::1] q = q_arr
    cdef double[:, :, ::1] x = x_arr
    cdef double[:, :, :, ::1] qn = np.empty((nc, n, n, nv))
    cdef double[:, :, ::1] xn = np.empty((nc, n, n))
    cdef double[:, :, ::1] base = np.zeros((nc, n, nv))
    cdef double[:, :, :, ::1] f = np.empty((nc, n, n, nv))
    cdef double[:, ::1] vel = np.empty((n, n))
    cdef double[:, ::1] x_xi = np.empty((n, n))
    cdef double[:, ::1] x_tau = np.empty((n, n))
    cdef double[:, :, ::1] R = np.empty((n, n, nv))
    cdef unsigned char[::1] bad = np.zeros(nc, dtype=np.uint8)
    cdef unsigned char[::1] pending = np.zeros(nc, dtype=np.uint8)

    cdef Py_ssize_t c, a, b, d, e, v, m
    cdef int it
    cdef bint done, inverted, finite
    cdef double s, fx, qx, x0, dtc, chg, worst = 0.0

    # initial guess: reconstruction at the spatial nodes, frozen in time
    for c in range(nc):
        for a in range(n):
            for v in range(nv):
                s = 0.0
                for m in range(n):
                    s = s + PSI[a, m] * W[c, m, v]
                base[c, a, v] = s
            for b in range(n):
                for v in range(nv):
                    q[c, a, b, v] = base[c, a, v]
        for a in range(n):
            x0 = XL[c] + DX[c] * Z[a]
            for b in range(n):
                x[c, a, b] = x0 + mesh_speed(&q[c, a, b, 0], kind_v) * DT[c] * Z[b]

    for it in range(1, max_iter + 1):
        done = True
        inverted = False
        finite = True
        worst = 0.0
        for c in range(nc):
            dtc = DT[c]
            pending[c] = 0
            for a in range(n):
                for b in range(n):
                    vel[a, b] = mesh_speed(&q[c, a, b, 0], kind_v)
            for a in range(n):
                x0 = XL[c] + DX[c] * Z[a]
                for b in range(n):
                    s = 0.0
                    for d in range(n):
                        s = s + vel[a, d] * TW[b, d]
                    xn[c, a, b] = x0 + dtc * s
            for a in range(n):
                for b in range(n):
                    s = 0.0
                    for e in range(n):
                        s = s + D[a, e] * xn[c, e, b]
                    x_xi[a, b] = s
                    if s <= 0.0:
                        bad[c] = 1
                        inverted = True
                    s = 0.0
                    for d in range(n):
                        s = s + xn[c, a, d] * D[b, d]
                    x_tau[a, b] = s
            if bad[c]:
                continue
            for a in range(n):
                for b in range(n):
                    if kind_sys == 0:
                        euler_flux(&q[c, a, b, 0], &f[c, a, b, 0], gamma)
                    else:
                        mhd_flux(&q[c, a, b, 0], &f[c, a, b, 0], gamma, c_h)
            for a in range(n):
                for d in range(n):
                    for v in range(nv):
                        fx = 0.0
                        qx = 0.0
                        # difference form: exact zero on constant data
                        for e in range(n):
                            fx = fx + D[a, e] * (f[c, e, d, v] - f[c, a, d, v])
                            qx = qx + D[a, e] * (q[c, e, d, v] - q[c, a, d, v])
                        R[a, d, v] = (dtc / x_xi[a, d]) * fx - (x_tau[a, d] / x_xi[a, d]) * qx
            for a in range(n):
                for b in range(n):
                    for v in range(nv):
                        s = 0.0
                        for d in range(n):
                            s = s + TW[b, d] * R[a, d, v]
                        s = base[c, a, v] - s
                        qn[c, a, b, v] = s
                        chg = fabs(s - q[c, a, b, v])
                        if chg > worst:
                            worst = chg
                        if chg > tol * (1.0 + fabs(s)):
                            done = False
                            pending[c] = 1
                        if not isfinite(s):
                            finite = False
                    if fabs(xn[c, a, b] - x[c, a, b]) > tol * (1.0 + fabs(xn[c, a, b])):
                        done = False
                        pending[c] = 1
        if inverted:
            cells = [int(i) for i in range(nc) if bad[i]]
            raise MeshTanglingError("space-time element inverted inside predictor", cells=cells)
        q[...] = qn
        x[...] = xn
        if not finite:
            arr = np.asarray(q)
            cells = np.unique(np.nonzero(~np.isfinite(arr))[0]).tolist()
            raise PredictorDivergenceError("non-finite predictor state", cells=cells)
        if done:
            return q_arr, x_arr, it
    raise PredictorDivergenceError(
        f"predictor did not converge in {max_iter} iterations", cells=[int(i) for i in range(nc) if pending[i]], residual=worst
    )
