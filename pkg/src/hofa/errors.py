"""Exception types shared across the toolkit."""


class HofaError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(HofaError, ValueError):
    """Vectors / forms / tables with incompatible dimensions or arity."""


class BudgetExceeded(HofaError, RuntimeError):
    """An enumeration or search would exceed the configured budget."""


class NotRepresentable(HofaError, ValueError):
    """A value table is not a polynomial within the requested degree bound.

    ``witness`` is a tuple ``(h_1, ..., h_{k+1}, x)`` of vectors at which the
    (k+1)-fold additive difference of the table is nonzero.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class PreconditionError(HofaError, ValueError):
    """An operation's precondition failed; carries a concrete witness."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class InternalCheckError(HofaError, RuntimeError):
    """A verified postcondition failed.  Signals a bug, never bad input."""
