"""Built-in test cases: Euler and MHD shock tubes and the travelling Alfven wave."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import gauss_legendre
from .errors import ConfigurationError
from .riemann import alfven_exact, solve_euler_rp
from .systems import SQRT_4PI, Euler, IdealMHD, mesh_velocity


@dataclass(frozen=True)
class RiemannCase:
    """Two constant primitive states separated at ``x_d``."""

    name: str
    system: str
    left: tuple
    right: tuple
    x_d: float
    t_end: float
    domain: tuple = (-0.5, 0.5)
    gamma: float | None = None
    velocity: str = "fluid-u"
    flux: str = "osher"

    def make_system(self, c_h=None, velocity=None):
        if self.system == "euler":
            return Euler(self.gamma or 1.4)
        gamma = self.gamma or 5.0 / 3.0
        if c_h is None:
            c_h = default_cleaning_speed(IdealMHD(gamma, 0.0), self.states(IdealMHD(gamma, 0.0)),
                                         velocity or self.velocity)
        return IdealMHD(gamma, c_h)

    def states(self, system):
        return system.to_conserved(np.array([self.left, self.right], dtype=float))

    def initial_averages(self, nodes, system):
        """Exact cell averages of the step data on ``nodes``."""
        nodes = np.asarray(nodes, dtype=float)
        ql, qr = self.states(system)
        lo, hi = nodes[:-1], nodes[1:]
        frac = np.clip((self.x_d - lo) / (hi - lo), 0.0, 1.0)
        return frac[:, None] * ql + (1.0 - frac[:, None]) * qr

    def exact_primitive(self, x, t):
        """Exact primitive solution (Euler only)."""
        if self.system != "euler":
            raise ConfigurationError(f"no exact solution available for {self.name}")
        sol = solve_euler_rp(self.left, self.right, self.gamma or 1.4)
        return sol.sample_at(x, t, self.x_d)


@dataclass(frozen=True)
class SmoothCase:
    """Smooth initial data with an exact solution ``exact(x, t)`` (conserved)."""

    name: str
    system: str
    exact: object
    t_end: float
    domain: tuple
    gamma: float | None = None
    velocity: str = "fluid-u"
    flux: str = "osher"
    quad_points: int = 8
    params: dict = field(default_factory=dict)

    def make_system(self, c_h=None, velocity=None):
        if self.system == "euler":
            return Euler(self.gamma or 1.4)
        gamma = self.gamma or 5.0 / 3.0
        if c_h is None:
            x = np.linspace(*self.domain, 201)
            c_h = default_cleaning_speed(IdealMHD(gamma, 0.0), self.exact(x, 0.0), velocity or self.velocity)
        return IdealMHD(gamma, c_h)

    def initial_averages(self, nodes, system):
        nodes = np.asarray(nodes, dtype=float)
        s, w = gauss_legendre(self.quad_points)
        dx = np.diff(nodes)
        xq = nodes[:-1, None] + dx[:, None] * s[None, :]
        return np.einsum("g,cgv->cv", w, self.exact(xq, 0.0))


def default_cleaning_speed(system, states, velocity="fluid-u"):
    """Largest ALE-frame fast signal speed ``|u - V| + c_f`` of the given states."""
    states = np.asarray(states, dtype=float)
    v = mesh_velocity(states, velocity)
    return float(np.max(np.abs(states[..., 1] / states[..., 0] - v) + system.fast_speed(states)))


def _mhd(rho, u, v, w, p, bx, by, bz):
    return (rho, u, v, w, p, bx, by, bz, 0.0)


def _registry():
    s = SQRT_4PI
    cases = [
        RiemannCase("euler/rp1", "euler", (1.0, 0.0, 1.0), (0.125, 0.0, 0.1), 0.0, 0.4, (-1.0, 1.0)),
        RiemannCase("euler/rp2", "euler", (0.445, 0.698, 3.528), (0.5, 0.0, 0.571), 0.0, 0.1),
        RiemannCase("euler/rp3", "euler", (1.0, 0.0, 1000.0), (1.0, 0.0, 0.01), 0.1, 0.012),
        RiemannCase("euler/rp4", "euler", (5.99924, 19.5975, 460.894), (5.99242, -6.19633, 46.095), -0.2, 0.035),
        RiemannCase("mhd/rp1", "mhd", _mhd(1.0, 0, 0, 0, 1.0, 0.75 * s, s, 0),
                    _mhd(0.125, 0, 0, 0, 0.1, 0.75 * s, -s, 0), 0.0, 0.1),
        RiemannCase("mhd/rp2", "mhd", _mhd(1.08, 1.2, 0.01, 0.5, 0.95, 2.0, 3.6, 2.0),
                    _mhd(0.9891, -0.0131, 0.0269, 0.010037, 0.97159, 2.0, 4.0244, 2.0026), -0.1, 0.2),
        RiemannCase("mhd/rp3", "mhd", _mhd(0.15, 21.55, 1.0, 1.0, 0.28, 0.05, -2.0, -1.0),
                    _mhd(0.1, -26.45, 0, 0, 0.1, 0.05, 2.0, 1.0), 0.0, 0.04, (-1.5, 1.5)),
        RiemannCase("mhd/rp4", "mhd", _mhd(1.0, 0, 0, 0, 1.0, 1.3 * s, s, 0),
                    _mhd(0.4, 0, 0, 0, 0.4, 1.3 * s, -s, 0), 0.0, 0.16),
        RiemannCase("mhd/rp5", "mhd", _mhd(1.0, 36.87, -0.115, -0.0386, 1.0, 4.0, 4.0, 1.0),
                    _mhd(1.0, -36.87, 0, 0, 1.0, 4.0, 4.0, 1.0), 0.0, 0.03, (-1.5, 1.5)),
        RiemannCase("mhd/rp6", "mhd", _mhd(1.7, 0, 0, 0, 1.7, 3.899398, 3.544908, 0),
                    _mhd(0.2, 0, 0, -1.496891, 0.2, 3.899398, 2.785898, 2.192064), -0.1, 0.15),
        SmoothCase("mhd/alfven", "mhd", alfven_exact, 0.1, (-2.0, 2.0), velocity="fluid-v"),
    ]
    return {c.name: c for c in cases}


CASES = _registry()


def get_case(system, name=None):
    """Look up ``"euler/rp1"`` or ``("euler", "rp1")``."""
    key = system if name is None else f"{system}/{name}"
    try:
        return CASES[key]
    except KeyError:
        raise ConfigurationError(
            f"unknown case {key!r}; valid cases: {', '.join(sorted(CASES))}"
        ) from None
