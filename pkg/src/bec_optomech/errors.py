"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line layer can map
failures without inspecting messages.
"""


class OptomechError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 3


class ConfigError(OptomechError):
    """Malformed config file, unknown key or bad command line usage."""

    exit_code = 1

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ParameterError(OptomechError):
    """A physical input is outside its domain."""

    exit_code = 2

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class FeasibilityError(OptomechError):
    """A pump profile violates its constraints."""

    exit_code = 2


class InstabilityError(OptomechError):
    """The covariance dynamics diverged (unstable drift)."""

    exit_code = 2


class PhysicalityError(OptomechError):
    """A covariance sample violates the uncertainty principle."""

    exit_code = 3


class ConditioningError(OptomechError):
    """Symplectic spectrum could not be computed reliably."""

    exit_code = 3


class ConvergenceError(OptomechError):
    """A periodic orbit did not settle within the period cap."""

    exit_code = 3
