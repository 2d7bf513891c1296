"""Exception types shared across the package.

The CLI maps these onto exit codes (config 2, data 3, numeric 4) so that
pipelines can script against failures.
"""


class FraudctlError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FraudctlError):
    """Invalid configuration value or CLI usage."""


class DataError(FraudctlError):
    """Missing or malformed input data."""


class NumericError(FraudctlError):
    """Numerical failure: NaN loss, non-finite parameters, collapsed embedding."""
