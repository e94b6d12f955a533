"""Exception hierarchy shared by every stage of the pipeline."""


class TrevorError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(TrevorError):
    """A file could not be decoded (bad header, truncated body)."""


class EmptyInputError(TrevorError):
    """An input source held no samples."""


class ParseError(TrevorError):
    """A text record could not be parsed.

    Parameters
    ----------
    message : str
        Human readable description.
    line : int
        1-based line number of the offending record.
    """

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConfigError(TrevorError, ValueError):
    """A configuration value is outside its admissible range."""


class InsufficientDataError(TrevorError, ValueError):
    """Not enough samples, rows or bits for the requested operation."""


class DimensionError(TrevorError, ValueError):
    """Array shape or length does not match what the operation needs."""


class DegenerateInputError(TrevorError, ValueError):
    """Input is numerically degenerate (zero matrix, constant vector)."""


class ProtocolError(TrevorError):
    """A peer sent a message that violates the wire protocol."""


class FramingError(ProtocolError):
    """A frame was truncated or its length prefix is unusable."""


class ConvergenceWarning(UserWarning):
    """Power iteration stopped at max_iter before reaching tol."""
