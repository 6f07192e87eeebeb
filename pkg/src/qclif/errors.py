"""Exception hierarchy shared by every qclif module."""


class QclifError(Exception):
    """Base class. ``category`` drives the CLI exit code."""

    category = "error"


class ScaleMismatch(QclifError, ValueError):
    category = "numeric"


class Overflow(QclifError, ArithmeticError):
    """A value did not fit the register width it was routed into."""

    category = "numeric"


class LengthMismatch(QclifError, ValueError):
    category = "config"


class DimensionMismatch(LengthMismatch):
    pass


class FanInExceeded(QclifError, ValueError):
    category = "config"


class NonFiniteInput(QclifError, ValueError):
    category = "numeric"


class EmptyRaster(QclifError, ValueError):
    category = "io"


class RateOutOfRange(QclifError, ValueError):
    category = "config"


class ConfigError(QclifError, ValueError):
    category = "config"


class ParseError(QclifError, ValueError):
    """Malformed event-stream input. ``offset`` is a line number (text) or byte offset (binary)."""

    category = "io"

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class InvariantViolation(QclifError, ValueError):
    category = "io"
