"""Exception types shared across the toolkit."""


class QcritError(Exception):
    """Base class for toolkit errors."""


class SectorViolation(QcritError):
    """An operator maps states of a restricted basis outside of it."""


class EmptySectorError(QcritError):
    pass


class ConvergenceError(QcritError):
    """Iterative eigensolver stopped before reaching the residual target."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DegenerateGroundState(QcritError):
    """Raised where a non-degenerate ground state is a precondition."""
