"""Hyperbolic systems in one space dimension.

All kernels operate on arrays whose last axis holds the conserved
components, so a single call evaluates a whole batch of states.  The
module-level functions (:func:`physical_flux`, :func:`ale_flux`, ...) are the
validated entry points; the methods on the system objects skip validation and
are what the solver loops call.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateJacobianError, InvalidStateError

FOUR_PI = 4.0 * math.pi
SQRT_4PI = math.sqrt(FOUR_PI)

# eigenvector conditioning limit above which |A| is declared unusable
COND_LIMIT = 1e8


class ConservationLaw:
    """Common interface of every registered system."""

    name = "abstract"
    nvar = 0
    gamma = 1.4
    c_h = 0.0
    conserved_names: tuple = ()
    primitive_names: tuple = ()

    def flux(self, q):
        raise NotImplementedError

    def max_speed(self, q, v):
        """Spectral radius of the ALE Jacobian ``A - v I``."""
        raise NotImplementedError

    def abs_jacobian(self, q, v):
        """Return ``(|A^V|, ok)`` for a batch of states.

        ``ok`` flags the entries whose eigendecomposition is trustworthy.
        """
        raise NotImplementedError

    def admissible(self, q):
        """Boolean mask of states with positive density and pressure."""
        return np.all(np.isfinite(q), axis=-1)

    def to_primitive(self, q):
        return np.array(q, dtype=float)

    def to_conserved(self, w):
        return np.array(w, dtype=float)

    def validate(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape[-1] != self.nvar:
            raise InvalidStateError(
                f"{self.name} states need {self.nvar} components, got {q.shape[-1]}"
            )
        bad = ~np.isfinite(q)
        if bad.any():
            comp = int(np.argwhere(bad)[0][-1])
            raise InvalidStateError(
                f"non-finite value in component {self.conserved_names[comp]}",
                component=self.conserved_names[comp],
            )
        return q


class Euler(ConservationLaw):
    """Compressible Euler equations of an ideal gas, ``Q = (rho, rho u, rho E)``."""

    name = "euler"
    nvar = 3
    conserved_names = ("rho", "rho_u", "rho_E")
    primitive_names = ("rho", "u", "p")

    def __init__(self, gamma=1.4):
        if not gamma > 1.0:
            raise ValueError("gamma must exceed 1")
        self.gamma = float(gamma)

    def __repr__(self):
        return f"Euler(gamma={self.gamma!r})"

    def pressure(self, q):
        return (self.gamma - 1.0) * (q[..., 2] - 0.5 * q[..., 1] ** 2 / q[..., 0])

    def flux(self, q):
        rho, mom, ene = q[..., 0], q[..., 1], q[..., 2]
        u = mom / rho
        p = (self.gamma - 1.0) * (ene - 0.5 * mom * u)
        return np.stack((mom, mom * u + p, u * (ene + p)), axis=-1)

    def sound_speed(self, q):
        ratio = self.gamma * self.pressure(q) / q[..., 0]
        return np.sqrt(np.maximum(ratio, 0.0))

    def max_speed(self, q, v):
        return np.abs(q[..., 1] / q[..., 0] - v) + self.sound_speed(q)

    def admissible(self, q):
        with np.errstate(all="ignore"):
            return (
                np.all(np.isfinite(q), axis=-1)
                & (q[..., 0] > 0.0)
                & (self.pressure(q) > 0.0)
            )

    def abs_jacobian(self, q, v):
        g1 = self.gamma - 1.0
        rho = q[..., 0]
        u = q[..., 1] / rho
        p = g1 * (q[..., 2] - 0.5 * rho * u * u)
        c = np.sqrt(np.maximum(self.gamma * p / rho, 0.0))
        h = (q[..., 2] + p) / rho
        ok = (rho > 0.0) & (p > 0.0)
        c = np.where(ok, c, 1.0)
        one = np.ones_like(u)
        r = np.stack(
            (
                np.stack((one, one, one), axis=-1),
                np.stack((u - c, u, u + c), axis=-1),
                np.stack((h - u * c, 0.5 * u * u, h + u * c), axis=-1),
            ),
            axis=-2,
        )
        b1 = g1 / (c * c)
        b2 = 0.5 * u * u * b1
        left = np.stack(
            (
                np.stack((0.5 * (b2 + u / c), -0.5 * (b1 * u + 1.0 / c), 0.5 * b1), axis=-1),
                np.stack((1.0 - b2, b1 * u, -b1), axis=-1),
                np.stack((0.5 * (b2 - u / c), -0.5 * (b1 * u - 1.0 / c), 0.5 * b1), axis=-1),
            ),
            axis=-2,
        )
        lam = np.abs(np.stack((u - c, u, u + c), axis=-1) - np.asarray(v)[..., None])
        return (r * lam[..., None, :]) @ left, ok

    def to_primitive(self, q):
        q = np.asarray(q, dtype=float)
        return np.stack((q[..., 0], q[..., 1] / q[..., 0], self.pressure(q)), axis=-1)

    def to_conserved(self, w):
        w = np.asarray(w, dtype=float)
        rho, u, p = w[..., 0], w[..., 1], w[..., 2]
        return np.stack((rho, rho * u, p / (self.gamma - 1.0) + 0.5 * rho * u * u), axis=-1)

    def validate(self, q):
        q = super().validate(q)
        if np.any(q[..., 0] <= 0.0):
            raise InvalidStateError("non-positive density", component="rho")
        if np.any(self.pressure(q) <= 0.0):
            raise InvalidStateError("non-positive pressure", component="p")
        return q


class IdealMHD(ConservationLaw):
    """Ideal MHD with hyperbolic divergence cleaning, Gaussian units.

    ``Q = (rho, rho u, rho v, rho w, rho E, Bx, By, Bz, psi)``.
    """

    name = "mhd"
    nvar = 9
    conserved_names = ("rho", "rho_u", "rho_v", "rho_w", "rho_E", "Bx", "By", "Bz", "psi")
    primitive_names = ("rho", "u", "v", "w", "p", "Bx", "By", "Bz", "psi")

    def __init__(self, gamma=5.0 / 3.0, c_h=1.0):
        if not gamma > 1.0:
            raise ValueError("gamma must exceed 1")
        if c_h < 0.0:
            raise ValueError("cleaning speed must be non-negative")
        self.gamma = float(gamma)
        self.c_h = float(c_h)

    def __repr__(self):
        return f"IdealMHD(gamma={self.gamma!r}, c_h={self.c_h!r})"

    def pressure(self, q):
        rho = q[..., 0]
        kin = 0.5 * (q[..., 1] ** 2 + q[..., 2] ** 2 + q[..., 3] ** 2) / rho
        mag = (q[..., 5] ** 2 + q[..., 6] ** 2 + q[..., 7] ** 2) / (2.0 * FOUR_PI)
        return (self.gamma - 1.0) * (q[..., 4] - kin - mag)

    def flux(self, q):
        rho = q[..., 0]
        u, v, w = q[..., 1] / rho, q[..., 2] / rho, q[..., 3] / rho
        ene = q[..., 4]
        bx, by, bz, psi = q[..., 5], q[..., 6], q[..., 7], q[..., 8]
        b2 = bx * bx + by * by + bz * bz
        p = (self.gamma - 1.0) * (ene - 0.5 * rho * (u * u + v * v + w * w) - b2 / (2.0 * FOUR_PI))
        pt = p + b2 / (2.0 * FOUR_PI)
        vb = u * bx + v * by + w * bz
        return np.stack(
            (
                rho * u,
                rho * u * u + pt - bx * bx / FOUR_PI,
                rho * u * v - bx * by / FOUR_PI,
                rho * u * w - bx * bz / FOUR_PI,
                u * (ene + pt) - bx * vb / FOUR_PI,
                psi,
                u * by - v * bx,
                u * bz - w * bx,
                self.c_h**2 * bx,
            ),
            axis=-1,
        )

    def fast_speed(self, q):
        rho = q[..., 0]
        a2 = np.maximum(self.gamma * self.pressure(q) / rho, 0.0)
        bx2 = q[..., 5] ** 2 / (FOUR_PI * rho)
        b2 = (q[..., 5] ** 2 + q[..., 6] ** 2 + q[..., 7] ** 2) / (FOUR_PI * rho)
        s = a2 + b2
        disc = np.sqrt(np.maximum(s * s - 4.0 * a2 * bx2, 0.0))
        return np.sqrt(0.5 * (s + disc))

    def max_speed(self, q, v):
        v = np.asarray(v)
        mhd = np.abs(q[..., 1] / q[..., 0] - v) + self.fast_speed(q)
        return np.maximum(mhd, self.c_h + np.abs(v))

    def admissible(self, q):
        with np.errstate(all="ignore"):
            return (
                np.all(np.isfinite(q), axis=-1)
                & (q[..., 0] > 0.0)
                & (self.pressure(q) > 0.0)
            )

    def jacobian(self, q):
        """Exact flux Jacobian by complex-step differentiation."""
        q = np.asarray(q, dtype=float)
        step = 1e-30
        qc = q[..., None, :] + 1j * step * np.eye(self.nvar)
        return np.swapaxes(self.flux(qc).imag / step, -1, -2)

    def abs_jacobian(self, q, v):
        q = np.asarray(q, dtype=float)
        shape = q.shape[:-1]
        v = np.broadcast_to(np.asarray(v, dtype=float), shape)
        a = self.jacobian(q).reshape(-1, self.nvar, self.nvar)
        ok = self.admissible(q).reshape(-1)
        ok &= np.all(np.isfinite(a), axis=(-1, -2))
        a = np.where(ok[:, None, None], a, np.eye(self.nvar))
        lam, r = np.linalg.eig(a)
        scale = 1.0 + np.max(np.abs(lam), axis=-1)
        ok &= np.max(np.abs(lam.imag), axis=-1) <= 1e-7 * scale
        try:
            rinv = np.linalg.inv(r)
        except np.linalg.LinAlgError:
            rinv = np.empty_like(r)
            for k in range(r.shape[0]):
                try:
                    rinv[k] = np.linalg.inv(r[k])
                except np.linalg.LinAlgError:
                    rinv[k] = np.eye(self.nvar)
                    ok[k] = False
        cond = np.linalg.norm(r, 1, axis=(-2, -1)) * np.linalg.norm(rinv, 1, axis=(-2, -1))
        ok &= np.isfinite(cond) & (cond <= COND_LIMIT)
        mag = np.abs(lam.real - v.reshape(-1)[:, None])
        out = ((r * mag[:, None, :]) @ rinv).real
        return out.reshape(shape + (self.nvar, self.nvar)), ok.reshape(shape)

    def to_primitive(self, q):
        q = np.asarray(q, dtype=float)
        rho = q[..., 0]
        out = q.copy()
        out[..., 1:4] = q[..., 1:4] / rho[..., None]
        out[..., 4] = self.pressure(q)
        return out

    def to_conserved(self, w):
        w = np.asarray(w, dtype=float)
        rho = w[..., 0]
        out = w.copy()
        out[..., 1:4] = rho[..., None] * w[..., 1:4]
        kin = 0.5 * rho * np.sum(w[..., 1:4] ** 2, axis=-1)
        mag = np.sum(w[..., 5:8] ** 2, axis=-1) / (2.0 * FOUR_PI)
        out[..., 4] = w[..., 4] / (self.gamma - 1.0) + kin + mag
        return out

    def validate(self, q):
        q = super().validate(q)
        if np.any(q[..., 0] <= 0.0):
            raise InvalidStateError("non-positive density", component="rho")
        if np.any(self.pressure(q) <= 0.0):
            raise InvalidStateError("non-positive pressure", component="p")
        return q


class LinearSystem(ConservationLaw):
    """Constant-coefficient system ``q_t + A q_x = 0`` (scalar advection for 1x1)."""

    name = "linear"

    def __init__(self, matrix):
        a = np.atleast_2d(np.asarray(matrix, dtype=float))
        self.matrix = a
        self.nvar = a.shape[0]
        lam, r = np.linalg.eig(a)
        if np.any(np.abs(lam.imag) > 0.0):
            raise ValueError("matrix is not hyperbolic")
        self._lam = lam.real
        self._r = r.real
        self._rinv = np.linalg.inv(self._r)
        self.conserved_names = tuple(f"q{k}" for k in range(self.nvar))
        self.primitive_names = self.conserved_names

    def __repr__(self):
        return f"LinearSystem({self.matrix.tolist()!r})"

    def flux(self, q):
        return q @ self.matrix.T

    def max_speed(self, q, v):
        v = np.asarray(v)
        return np.max(np.abs(self._lam - v[..., None]), axis=-1) * np.ones(q.shape[:-1])

    def abs_jacobian(self, q, v):
        shape = q.shape[:-1]
        v = np.broadcast_to(np.asarray(v, dtype=float), shape)
        mag = np.abs(self._lam - v[..., None])
        out = (self._r * mag[..., None, :]) @ self._rinv
        return out, np.ones(shape, dtype=bool)


def make_system(name, gamma=None, c_h=None):
    """Build a registered system by name (``"euler"`` or ``"mhd"``)."""
    if name == "euler":
        return Euler(1.4 if gamma is None else gamma)
    if name == "mhd":
        return IdealMHD(5.0 / 3.0 if gamma is None else gamma, 1.0 if c_h is None else c_h)
    raise ValueError(f"unknown system {name!r}; expected 'euler' or 'mhd'")


MESH_VELOCITIES = ("fluid-u", "fluid-v", "zero")


def mesh_velocity(q, kind="fluid-u"):
    """Local mesh velocity ``V(Q)`` for the selected mesh-motion mode."""
    q = np.asarray(q)
    if kind == "fluid-u":
        return q[..., 1] / q[..., 0]
    if kind == "fluid-v":
        return q[..., 2] / q[..., 0]
    if kind == "zero":
        return np.zeros(q.shape[:-1])
    raise ValueError(f"unknown mesh velocity {kind!r}; expected one of {MESH_VELOCITIES}")


def physical_flux(state, system):
    """Flux ``f(Q)`` of a validated state."""
    return system.flux(system.validate(state))


def ale_flux(state, mesh_speed, system):
    """ALE flux ``f(Q) - V Q``."""
    q = system.validate(state)
    return system.flux(q) - np.asarray(mesh_speed, dtype=float)[..., None] * q


def max_abs_eigenvalue(state, mesh_speed, system):
    """Largest ``|lambda|`` of the ALE Jacobian at ``state``."""
    q = system.validate(state)
    return system.max_speed(q, mesh_speed)


def abs_jacobian_times(state, mesh_speed, dq, system):
    """Return ``|A^V(state)| dq``.

    Raises
    ------
    DegenerateJacobianError
        If the eigendecomposition is complex or badly conditioned.
    """
    q = system.validate(state)
    mat, ok = system.abs_jacobian(q, mesh_speed)
    if not np.all(ok):
        raise DegenerateJacobianError("Jacobian eigendecomposition failed", state=q)
    return np.einsum("...ij,...j->...i", mat, np.asarray(dq, dtype=float))
