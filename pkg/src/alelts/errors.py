"""Exception hierarchy.

Every error carries a short machine-readable ``category`` string which the
command line driver prints and maps to a nonzero exit code.
"""


class SolverError(Exception):
    category = "solver-error"


class InvalidStateError(SolverError, ValueError):
    category = "invalid-state"

    def __init__(self, message, component=None):
        super().__init__(message)
        self.component = component


class DegenerateJacobianError(SolverError):
    category = "degenerate-jacobian"

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class OutOfDomainError(SolverError, ValueError):
    category = "out-of-domain"


class MeshTanglingError(SolverError):
    category = "mesh-tangling"

    def __init__(self, message, cells=None):
        super().__init__(message if cells is None else f"{message} (cells {list(cells)})")
        self.cells = cells


class PredictorDivergenceError(SolverError):
    category = "predictor-divergence"

    def __init__(self, message, cells=None, residual=None):
        super().__init__(message)
        self.cells = cells
        self.residual = residual


class IntervalError(SolverError, ValueError):
    category = "interval"


class DeadlockError(SolverError):
    category = "deadlock"


class ConfigurationError(SolverError, ValueError):
    category = "usage"


class UnsupportedCaseError(SolverError):
    category = "unsupported-case"


class ComparisonError(SolverError, ValueError):
    category = "comparison"


class OsherUnavailableError(SolverError):
    category = "osher-unavailable"
