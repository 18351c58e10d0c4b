"""Exception hierarchy shared by all thermoface modules."""


class ThermofaceError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(ThermofaceError):
    """Array shapes or sizes do not agree."""


class ContractError(ThermofaceError):
    """A caller violated a documented precondition."""


class ConfigError(ThermofaceError):
    """A configuration value is invalid or inconsistent."""


class DataError(ThermofaceError):
    """Input data is implausible or cannot support the requested operation."""


class FormatError(ThermofaceError):
    """A file does not conform to its declared format."""


class CompatibilityError(ThermofaceError):
    """Artifacts produced by different models were mixed."""


class NotEnrolledError(ThermofaceError):
    """A subject (or any subject) is missing from the gallery."""


class NumericError(ThermofaceError):
    """A computation produced non-finite values."""
