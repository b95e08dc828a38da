"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
anything else -> 3.
"""


class EvloadError(Exception):
    """Base class for all package errors."""


class ConfigError(EvloadError):
    """Invalid configuration or usage (bad flag values, malformed config files)."""


class DataError(EvloadError):
    """Input data that cannot be processed (unreadable files, fatal schema violations)."""
