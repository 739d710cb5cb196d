"""Exception hierarchy shared by every module."""


class IfsError(Exception):
    """Base class for all library errors."""


class ValidationError(IfsError, ValueError):
    """Input data violates a construction-time invariant."""


class PreconditionError(IfsError, ValueError):
    """An operation was called outside its domain."""


class ResourceLimitError(IfsError):
    """A configured word or node budget was exhausted.

    ``partial`` carries whatever was computed before the limit hit.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConvergenceError(IfsError):
    """An iterative procedure did not converge within its iteration cap."""


class BracketError(IfsError):
    """A bisection was requested on a function without a sign change."""


class DegenerateError(IfsError):
    """A construction collapsed (for example a polynomial factor vanished)."""


class InconsistentInputError(IfsError):
    """Two pieces of evidence contradict each other."""


class FactorizationLimitError(IfsError):
    """An integer is too large for the built-in factorization routine."""


class PrecisionError(IfsError):
    """High-precision arithmetic could not separate two quantities."""
