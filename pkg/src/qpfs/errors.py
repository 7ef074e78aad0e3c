"""Exception hierarchy shared across the toolkit.

The CLI maps these onto distinct exit codes: configuration problems (2),
data problems (3), numerical failures (4).
"""


class QpfsError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(QpfsError):
    """Invalid run configuration: bad flag values, malformed config file."""


class SchemaError(ConfigError):
    """Malformed schema file. Message names the offending line."""


class DataError(QpfsError):
    """Unusable input data: wrong arity, bad cell values, degenerate columns."""


class NumericalError(QpfsError):
    """An iterative numerical procedure failed to converge."""


class SolverError(NumericalError):
    """QP solver gave up; carries the best iterate found and its residual."""

    def __init__(self, message, best_x=None, residual=None):
        super().__init__(message)
        self.best_x = best_x
        self.residual = residual
