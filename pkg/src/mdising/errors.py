"""Exception types shared across the package."""


class MdIsingError(Exception):
    """Base class for all package errors."""


class DimensionError(MdIsingError, ValueError):
    """Array shapes or lengths do not agree."""


class BudgetError(MdIsingError):
    """A spin budget or enumeration budget was exceeded."""


class NormalizationError(MdIsingError, ValueError):
    """A problem is not normalized, or cannot be normalized."""


class ParseError(MdIsingError, ValueError):
    """An input file could not be parsed."""


class InvariantError(MdIsingError, AssertionError):
    """An internal invariant was violated. Always a bug."""


class BoundError(MdIsingError, ValueError):
    """A mapping parameter violates a hardware bound (e.g. q > c_max + 1)."""
