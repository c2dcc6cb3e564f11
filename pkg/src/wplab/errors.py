"""Exception hierarchy shared by every module."""


class WPLabError(Exception):
    """Base class for all package errors."""


class DomainError(WPLabError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class DegenerateCoordinateError(WPLabError, ValueError):
    """A quantity was requested at a point where the chart degenerates (u = 0)."""


class NumericalError(WPLabError, ArithmeticError):
    """A quadrature, fit or solve did not reach the requested accuracy."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class ConvergenceError(WPLabError, RuntimeError):
    """An iterative method ran out of budget; the best candidate is attached."""

    def __init__(self, message, best=None, **diagnostics):
        super().__init__(message)
        self.best = best
        self.diagnostics = diagnostics


class UsageError(WPLabError, ValueError):
    """Bad configuration or arguments supplied by the caller."""
