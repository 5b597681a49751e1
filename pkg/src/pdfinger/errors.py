"""Exception types shared across the package.

The CLI maps these onto exit codes: usage errors -> 1, data errors -> 2,
numeric failures -> 3.
"""


class PdfingerError(Exception):
    """Base class for all package errors."""


class UsageError(PdfingerError):
    """Bad command-line or configuration input."""


class DataError(PdfingerError):
    """Invalid or inconsistent input data."""


class PigParseError(DataError):
    """Malformed PIG fingering file."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class NumericError(PdfingerError):
    """Non-finite values encountered during training or inference."""
