"""Exception types shared across the package."""


class RegionalBoError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RegionalBoError):
    """Invalid user-supplied configuration (unknown method, bad bounds, ...)."""


class ModelFitError(RegionalBoError):
    """GP fitting failed, e.g. Cholesky failure after jitter escalation."""


class DegenerateDataError(RegionalBoError):
    """Input data carries no usable signal (all values equal, no nonzero diffs)."""
