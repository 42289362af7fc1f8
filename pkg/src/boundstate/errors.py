"""Exception types shared across the package."""


class BoundStateError(Exception):
    """Base class for all package-specific errors."""


class MeshFormatError(BoundStateError, ValueError):
    """Malformed mesh text (bad header, bad counts, dangling references).

    ``line`` is the 1-based line number in the offending file, when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ZeroFieldError(BoundStateError, ValueError):
    """An operation that requires a nontrivial field received (numerically) zero."""


class NotAFixedPointError(BoundStateError, ValueError):
    """The linearization was requested at a field that is not a converged fixed point."""


class ConvergenceError(BoundStateError, RuntimeError):
    """An iterative procedure failed to reach its tolerance.

    Carries the iteration count and the residual(s) achieved at abort time.
    """

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class SingularMatrixError(BoundStateError, RuntimeError):
    """A direct factorization hit a nonpositive pivot."""


class BracketError(BoundStateError, RuntimeError):
    """Root finding could not find (or keep) a sign-change bracket."""


class TrivialCollapseError(BoundStateError, RuntimeError):
    """An iteration converged to the zero solution where a nontrivial one was required."""


class ConfigError(BoundStateError, ValueError):
    """Invalid run configuration (unknown key, bad value, inadmissible parameters)."""
