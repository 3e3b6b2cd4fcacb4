"""Run configuration: INI-style files, command-line overrides and validation."""
from __future__ import annotations

import ast
import configparser
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .cases import CASES, RiemannCase, get_case
from .errors import ConfigurationError
from .flux import FLUX_KINDS, OSHER_POINTS
from .lts import CFL_SPEEDS, MODES, Solver
from .predictor import PREDICTOR_MAX_ITER, PREDICTOR_TOL
from .reconstruction import LAMBDA_CENTRAL, LAMBDA_SIDED, WENO_EPS, WENO_POWER
from .systems import MESH_VELOCITIES

SYSTEMS = ("euler", "mhd")
MIN_DEGREE, MAX_DEGREE = 1, 4
BOUNDARIES = ("mirror", "clip")


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run.

    ``case`` names a built-in case; a custom shock tube is given by
    ``left``, ``right``, ``x_d``, ``domain`` and ``t_end`` instead (primitive
    states).  ``t_end``, ``domain`` and ``velocity`` also override the
    values of a built-in case when set.
    """

    system: str = "euler"
    case: str | None = "rp1"
    M: int = 2
    cells: int = 200
    cfl: float = 0.5
    flux: str | None = None
    mode: str = "lts"
    velocity: str | None = None
    cfl_speed: str = "physical"
    boundary: str = "mirror"
    causal_bound: bool = True
    positivity: bool = True
    t_end: float | None = None
    domain: tuple | None = None
    left: tuple | None = None
    right: tuple | None = None
    x_d: float | None = None
    gamma: float | None = None
    c_h: float | None = None
    weno_eps: float = WENO_EPS
    weno_power: int = WENO_POWER
    lambda_central: float = LAMBDA_CENTRAL
    lambda_sided: float = LAMBDA_SIDED
    predictor_tol: float = PREDICTOR_TOL
    predictor_max_iter: int = PREDICTOR_MAX_ITER
    osher_points: int = OSHER_POINTS
    out: str | None = None
    dump_mesh: bool = False
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def order(self):
        return self.M + 1

    @property
    def name(self):
        return f"{self.system}/{self.case}" if self.case else f"{self.system}/custom"

    def resolve_case(self):
        """The case object this configuration runs, with overrides applied."""
        if self.case:
            base = get_case(self.system, self.case)
            if self.left is not None or self.right is not None or self.x_d is not None:
                raise ConfigurationError("a built-in case cannot also set left/right/x_d")
        else:
            base = RiemannCase(self.name, self.system, tuple(self.left), tuple(self.right),
                               float(self.x_d), float(self.t_end), gamma=self.gamma)
        changes = {}
        if self.t_end is not None:
            changes["t_end"] = float(self.t_end)
        if self.domain is not None:
            changes["domain"] = tuple(float(v) for v in self.domain)
        if self.velocity is not None:
            changes["velocity"] = self.velocity
        if self.gamma is not None:
            changes["gamma"] = float(self.gamma)
        return replace(base, **changes) if changes else base

    def build(self, log_mesh=None, log_fluxes=False):
        """Construct ``(solver, case)`` ready to run."""
        case = self.resolve_case()
        system = case.make_system(self.c_h, case.velocity)
        nodes = np.linspace(*case.domain, self.cells + 1)
        q0 = case.initial_averages(nodes, system)
        solver = Solver(
            system, nodes, q0, self.M, case.t_end, cfl=self.cfl, flux=self.flux or case.flux,
            mode=self.mode, velocity=case.velocity, osher_points=self.osher_points,
            lambda_central=self.lambda_central, lambda_sided=self.lambda_sided,
            weno_eps=self.weno_eps, weno_power=self.weno_power,
            predictor_tol=self.predictor_tol, predictor_max_iter=self.predictor_max_iter,
            boundary=self.boundary, cfl_speed=self.cfl_speed, causal_bound=self.causal_bound,
            positivity=self.positivity,
            log_mesh=self.dump_mesh if log_mesh is None else log_mesh, log_fluxes=log_fluxes,
        )
        return solver, case


_FLOATS = {"cfl", "t_end", "x_d", "gamma", "c_h", "weno_eps", "lambda_central", "lambda_sided",
           "predictor_tol"}
_INTS = {"M", "cells", "weno_power", "predictor_max_iter", "osher_points"}
_BOOLS = {"causal_bound", "positivity", "dump_mesh"}
_TUPLES = {"domain", "left", "right"}
_KNOWN = {f.name for f in fields(RunConfig)} - {"extra"}


def _choice(name, value, allowed):
    if value is not None and value not in allowed:
        raise ConfigurationError(f"{name} must be one of {', '.join(map(str, allowed))}; got {value!r}")


def _convert(key, value):
    if value is None or not isinstance(value, str):
        return value
    text = value.strip()
    try:
        if key in _FLOATS:
            return float(text)
        if key in _INTS:
            return int(text)
        if key in _BOOLS:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if key in _TUPLES:
            parsed = ast.literal_eval(text if "," in text else text + ",")
            return tuple(float(v) for v in parsed)
    except (ValueError, SyntaxError) as exc:
        raise ConfigurationError(f"cannot parse {key} = {value!r}") from exc
    return text or None


def validate(cfg):
    """Check ranges and names; return ``cfg`` unchanged or raise."""
    _choice("system", cfg.system, SYSTEMS)
    _choice("mode", cfg.mode, MODES)
    _choice("flux", cfg.flux, FLUX_KINDS)
    _choice("velocity", cfg.velocity, MESH_VELOCITIES)
    _choice("cfl_speed", cfg.cfl_speed, CFL_SPEEDS)
    _choice("boundary", cfg.boundary, BOUNDARIES)
    if not 0.0 < cfg.cfl <= 1.0:
        raise ConfigurationError(f"cfl must lie in (0, 1]; got {cfg.cfl}")
    if not MIN_DEGREE <= cfg.M <= MAX_DEGREE:
        raise ConfigurationError(
            f"degree M must be in {MIN_DEGREE}..{MAX_DEGREE} (order {MIN_DEGREE + 1}..{MAX_DEGREE + 1}); got {cfg.M}"
        )
    if cfg.cells < 3:
        raise ConfigurationError(f"cells must be at least 3; got {cfg.cells}")
    if cfg.case:
        key = f"{cfg.system}/{cfg.case}"
        if key not in CASES:
            valid = sorted(k for k in CASES if k.startswith(cfg.system + "/"))
            raise ConfigurationError(f"unknown case {key!r}; valid cases: {', '.join(valid)}")
    else:
        missing = [k for k in ("left", "right", "x_d", "t_end", "domain") if getattr(cfg, k) is None]
        if missing:
            raise ConfigurationError(f"custom case is missing {', '.join(missing)}")
        nvar = 3 if cfg.system == "euler" else 9
        for side in ("left", "right"):
            if len(getattr(cfg, side)) != nvar:
                raise ConfigurationError(f"{side} state needs {nvar} primitive values for {cfg.system}")
    if cfg.t_end is not None and not cfg.t_end > 0.0:
        raise ConfigurationError(f"t_end must be positive; got {cfg.t_end}")
    if cfg.domain is not None and (len(cfg.domain) != 2 or not cfg.domain[0] < cfg.domain[1]):
        raise ConfigurationError(f"domain must be an increasing pair; got {cfg.domain}")
    return cfg


def read_config_text(text):
    """Flatten an INI document into a key/value dict (sections are cosmetic)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text if text.lstrip().startswith("[") else "[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed configuration: {exc}") from exc
    values = {}
    for section in parser.sections():
        values.update(parser[section])
    return values


def parse_config(source=None, **overrides):
    """Build a validated :class:`RunConfig`.

    Parameters
    ----------
    source : str or path-like, optional
        INI file; a string containing a newline or ``=`` is parsed as text.
    **overrides
        Key/value pairs applied after the file, ``None`` values ignored.
        ``order`` is accepted as an alias for ``M + 1``.
    """
    values = {}
    if source is not None:
        text = str(source)
        if "\n" not in text and "=" not in text:
            try:
                with open(text, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigurationError(f"cannot read configuration {source!r}: {exc}") from exc
        values.update(read_config_text(text))
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "order" in values:
        order = values.pop("order")
        try:
            values["M"] = int(order) - 1
        except (TypeError, ValueError):
            raise ConfigurationError(f"order must be an integer; got {order!r}") from None
    if "system" in values and "/" in str(values["system"]):
        values["system"], values["case"] = str(values["system"]).split("/", 1)
    unknown = sorted(set(values) - _KNOWN)
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {', '.join(unknown)}")
    if "case" in values and str(values["case"]).lower() in ("", "none", "custom"):
        values["case"] = None
    if any(k in values for k in ("left", "right")) and "case" not in values:
        values["case"] = None
    converted = {k: _convert(k, v) for k, v in values.items()}
    return validate(RunConfig(**converted))
