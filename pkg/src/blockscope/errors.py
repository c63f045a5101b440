"""Exception taxonomy shared across the package.

The CLI maps every :class:`BlockscopeError` to exit code 2 (data error);
anything else is a usage error (exit 1) or a genuine crash.
"""
from __future__ import annotations


class BlockscopeError(Exception):
    """Base class for all domain errors raised by this package."""


class ParseError(BlockscopeError):
    """A malformed input row or file; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class RejectedRowError(ParseError):
    """A syntactically valid row that violates a data invariant."""


class ContractError(BlockscopeError):
    """A caller violated an operation precondition (dimension, range, order)."""


class DegenerateInputError(BlockscopeError):
    """Input is too small or too empty for the quantity to be defined."""


class ConvergenceError(BlockscopeError):
    """An iterative solver hit its iteration cap; carries the best iterate."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class UnsupportedStructureError(BlockscopeError):
    """More blocks than the two-block taxonomy supports."""


class PairPreconditionError(BlockscopeError):
    """A knockout pair does not qualify (wrong labels on either side)."""


class SuiteConstructionError(BlockscopeError):
    """Synthetic suite construction exhausted its retry budget."""
