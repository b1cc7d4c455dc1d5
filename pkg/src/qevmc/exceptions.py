"""Error types shared across the package."""


class QevmcError(Exception):
    """Base class for package errors."""


class ConfigError(QevmcError, ValueError):
    """Invalid user input: bad sizes, malformed files, out-of-range options."""


class NumericalError(QevmcError, ArithmeticError):
    """A computation produced non-finite or degenerate values."""
