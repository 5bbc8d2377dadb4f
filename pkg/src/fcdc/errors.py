"""Exception types shared across the package."""


class FcdcError(Exception):
    """Base class for package errors."""


class ConfigError(FcdcError):
    """Invalid or unusable configuration."""


class StreamFormatError(FcdcError):
    """Malformed stream input (message carries the offending line/row)."""


class IncompatiblePayload(FcdcError):
    """Record payload does not match the configured embedding."""


class InsufficientSamples(FcdcError):
    """Estimator query before enough samples were absorbed."""


class SingularCovariance(FcdcError):
    """Covariance not positive definite even after jitter escalation."""
