"""Exception types raised across the package."""


class FockcohError(Exception):
    """Base class for package errors."""


class InvalidArgumentsError(FockcohError, ValueError):
    """Arguments violate an operation's preconditions."""


class ResourceLimitError(FockcohError):
    """A materialization or sampling guard was exceeded."""


class UndefinedSectorError(FockcohError, ValueError):
    """A particle-number sector carries (numerically) zero weight."""


class UndefinedRateError(FockcohError, ValueError):
    """A distillation rate is not defined for the given input."""
