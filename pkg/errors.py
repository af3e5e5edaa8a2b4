"""Exception hierarchy shared by the library modules and the CLI.

Each error carries the exit code the CLI should use when it reaches the top
level, so scripts can tell a bad config from an infeasible network from a
numerical failure.
"""


class NetEnergyError(Exception):
    """Base class for every error raised on purpose by this project."""
    exit_code = 1


class ConfigError(NetEnergyError):
    """Raised for unusable configuration, arguments, or input files."""
    exit_code = 2


class ScenarioFormatError(ConfigError):
    """Raised when a scenario or plan document cannot be parsed."""
    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class ExactLimitError(ConfigError):
    """Raised when the exact oracle is asked to enumerate too many stations."""
    def __init__(self, message, stations=0, limit=0):
        super().__init__(message)
        self.stations = stations
        self.limit = limit


class DimensionError(NetEnergyError, ValueError):
    """Raised when mapping or matrix dimensions do not line up."""
    exit_code = 2


class InfeasibleError(NetEnergyError):
    """Raised when demand cannot be served by the available capacity."""
    exit_code = 3

    def __init__(self, message, overloaded=(), detail=None):
        super().__init__(message)
        self.overloaded = tuple(overloaded)
        self.detail = detail


class LPInfeasibleError(InfeasibleError):
    """Raised by the simplex solver when phase 1 ends with positive infeasibility."""


class NumericalError(NetEnergyError):
    """Raised when a computation breaks down numerically."""
    exit_code = 4

    def __init__(self, message, hyperparameters=None):
        super().__init__(message)
        self.hyperparameters = hyperparameters


class LPUnboundedError(NumericalError):
    """Raised by the simplex solver when the objective decreases without bound."""


class MalformedMappingError(NumericalError):
    """Raised when a mapping evaluates to NaN, zero, or negative entries."""
    def __init__(self, message, point=None, value=None):
        super().__init__(message)
        self.point = point
        self.value = value


class DivergenceError(NumericalError):
    """Raised when a fixed-point iteration exhausts its iteration budget.

    For a standard interference mapping this usually means no fixed point
    exists. The last iterates are kept so callers can inspect them.
    """
    def __init__(self, message, iterations=0, lower=None, upper=None):
        super().__init__(message)
        self.iterations = iterations
        self.lower = lower
        self.upper = upper


class InternalError(NumericalError):
    """Raised when a monotonicity assertion inside a solver fails."""
