class QTRLError(Exception):
    """Base class for errors raised by qtrl."""


class ConfigurationError(QTRLError, ValueError):
    """Invalid sizes, indices or hyperparameters."""


class ShapeError(QTRLError, ValueError):
    """Array lengths that do not match a network or circuit layout."""


class NumericalError(QTRLError, FloatingPointError):
    """Non-finite values reached a computation that requires finite input."""


class UsageError(QTRLError, RuntimeError):
    """An object was used out of its lifecycle, e.g. stepping a finished episode."""
