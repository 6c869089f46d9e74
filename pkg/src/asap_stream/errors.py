"""Exception types shared across the package."""


class AsapError(Exception):
    """Base class for all errors raised by asap_stream."""


class ConfigurationError(AsapError):
    """A parameter or config key has an invalid value.

    ``key`` names the offending config key when known (dotted form,
    e.g. ``consumer.c_ns``) so callers can produce a one-line diagnostic.
    """

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class OrderingError(AsapError):
    """Timestamps regressed where a non-decreasing sequence is required."""


class EventFileError(AsapError):
    """An event CSV file could not be parsed; message names the line."""
