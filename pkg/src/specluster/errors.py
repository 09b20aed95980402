"""Exception types shared across the package."""


class SpeclusterError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(SpeclusterError, ValueError):
    """Malformed arguments, files, or model parameters."""


class ConvergenceError(SpeclusterError, RuntimeError):
    """An iterative solver failed to reach its tolerance within its budget."""
