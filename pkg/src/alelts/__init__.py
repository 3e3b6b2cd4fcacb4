"""One-dimensional ALE ADER-WENO finite-volume solver with conservative local time stepping."""
from .cases import CASES, get_case
from .config import RunConfig, parse_config
from .errors import SolverError
from .kernels import BACKEND
from .lts import RunReport, Solver
from .systems import Euler, IdealMHD

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CASES",
    "Euler",
    "IdealMHD",
    "RunConfig",
    "RunReport",
    "Solver",
    "SolverError",
    "get_case",
    "parse_config",
]
