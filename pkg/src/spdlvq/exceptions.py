"""Exception hierarchy shared across the package.

The classes map onto the CLI exit-code categories: configuration problems,
file-format problems, and numerical/domain failures each get their own
branch so callers can react without string matching.
"""


class SpdLvqError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SpdLvqError):
    """An input violates a structural precondition (shape, symmetry, labels)."""


class DomainError(SpdLvqError):
    """A matrix is outside the operation's domain, e.g. not positive definite."""


class NumericalError(SpdLvqError):
    """A numerical routine failed (eigensolver breakdown, overflow)."""


class ConvergenceError(NumericalError):
    """An iteration hit its iteration cap before reaching tolerance.

    Attributes
    ----------
    last_iterate : ndarray
        The value of the iterate when the cap was reached.
    residual : float
        Convergence measure at the last iterate.
    iterations : int
        Number of iterations performed.
    """

    def __init__(self, message, last_iterate=None, residual=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations


class ConfigurationError(SpdLvqError):
    """A hyperparameter or experiment configuration is invalid."""


class FileFormatError(SpdLvqError):
    """A dataset or model file cannot be parsed.

    Attributes
    ----------
    path : str or None
        File being read.
    byte_offset : int or None
        Offset of the first byte that could not be parsed.
    """

    def __init__(self, message, path=None, byte_offset=None):
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path
        self.byte_offset = byte_offset
