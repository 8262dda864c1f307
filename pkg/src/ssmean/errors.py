"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: config problems exit 2, data problems
exit 3, numerical failures exit 4.
"""


class SsmeanError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SsmeanError):
    """Invalid or unknown run configuration."""


class DataError(SsmeanError):
    """Problem with user-supplied data (files or matrices)."""


class ValidationError(DataError):
    """Data failed a structural or finiteness check."""


class DimensionMismatchError(ValidationError):
    """Shapes of related arrays disagree."""


class InsufficientDataError(DataError):
    """Not enough rows for the requested operation."""


class NumericalError(SsmeanError):
    """Numerical failure inside an estimator or sampler."""


class InvalidParameterError(NumericalError):
    """A distribution or algorithm parameter is out of range."""


class EmptyInputError(InvalidParameterError):
    """An operation received an empty sample vector."""


class SingularDesignError(NumericalError):
    """Design matrix is rank deficient or has too few rows."""


class SamplerFailureError(NumericalError):
    """An MCMC chain produced a non-finite state."""
