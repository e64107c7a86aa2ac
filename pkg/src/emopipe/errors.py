"""Exception hierarchy shared by every module.

Exit-code mapping (used by the CLI): validation errors exit 2, data errors
exit 3, anything else exits 4.
"""


class EmopipeError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 4


class ValidationError(EmopipeError):
    """Caller passed arguments that violate a documented precondition."""

    exit_code = 2


class DataError(EmopipeError):
    """Input data is readable but semantically invalid (NaN payload, bad ratings, ...)."""

    exit_code = 3


class FormatError(DataError):
    """A file does not match the expected container format (magic, version)."""


class CorruptionError(DataError):
    """A file matches the format but its byte counts or structure are inconsistent."""


class ComputationError(EmopipeError):
    """A numeric stage produced an invalid result (unstable filter, non-finite feature)."""
