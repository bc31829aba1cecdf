"""Exception types shared across the toolkit."""


class BlocksolveError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(BlocksolveError):
    """Invalid configuration, file, or precondition (CLI exit code 2)."""


class NumericalError(BlocksolveError):
    """Numerical failure during a run (CLI exit code 3)."""


class BlockTooLargeError(NumericalError):
    """Block dimension exceeds the configured dense-path cap."""

    def __init__(self, dim, cap):
        super().__init__(f"block too large for dense path: dim {dim} > cap {cap}")
        self.dim = dim
        self.cap = cap


class ShiftSingularError(NumericalError):
    """Shifted system is singular: shift hit an eigenvalue, retry with new offset."""


class ConvergenceError(NumericalError):
    """Iteration budget exhausted before convergence.

    Carries whatever partial result was available when the budget ran out.
    """

    def __init__(self, message, partial_count=None, partial_basis=None):
        super().__init__(message)
        self.partial_count = partial_count
        self.partial_basis = partial_basis


class NoStatesError(NumericalError):
    """No states exist with the requested total angular momentum."""


class EvaluatorError(NumericalError):
    """Black-box evaluator raised; the offending point is attached."""

    def __init__(self, x, cause):
        super().__init__(f"evaluator failed at x={x!r}: {cause}")
        self.x = x
        self.cause = cause
