"""Exception hierarchy shared by all rwpcell modules."""


class RwpError(Exception):
    """Base class for all rwpcell errors."""


class DomainError(RwpError, ValueError):
    """An argument lies outside the domain of the operation."""


class DivergenceError(DomainError):
    """The requested quantity is infinite for the given parameters."""


class SingularityError(DomainError):
    """The function has a pole at the requested point."""


class ConvergenceError(RwpError, ArithmeticError):
    """An iterative numerical method did not reach its tolerance.

    The best available estimate and its error bound are kept on the
    exception so callers can decide whether the result is still usable.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class InputFileError(RwpError):
    """A data file could not be read or parsed."""

    def __init__(self, message, path=None, line=None):
        if line is not None:
            message = f"{path}:{line}: {message}"
        elif path is not None:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path
        self.line = line


class InternalError(RwpError, RuntimeError):
    """An algorithm hit a state that indicates degenerate input."""
