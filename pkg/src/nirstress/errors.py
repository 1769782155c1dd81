"""Exception hierarchy shared by every stage of the pipeline."""


class NirstressError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(NirstressError):
    """A configuration value or combination of values is invalid."""


class DimensionError(NirstressError):
    """An input has the wrong length, shape, or divisibility."""


class RangeError(NirstressError):
    """An index or time interval falls outside the data it refers to."""


class NumericError(NirstressError):
    """A computation produced or detected numerically unusable values."""
