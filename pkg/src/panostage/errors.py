"""Exception types shared across the toolkit.

ValidationError covers bad inputs (rejected before any computation);
NumericError covers computations that cannot produce a meaningful result
(e.g. calibrating against an all-black capture).
"""


class PanostageError(Exception):
    pass


class ValidationError(PanostageError):
    """Input violates a documented precondition or schema."""


class NumericError(PanostageError):
    """Computation failed for numeric reasons (degenerate data, overflow)."""
