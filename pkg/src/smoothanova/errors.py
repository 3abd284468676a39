"""Exception hierarchy.

Input problems (bad data, bad flags) derive from ``ValueError``; failures of
the linear algebra derive from ``ArithmeticError``.  The CLI maps the former
to exit code 2 and the latter to exit code 3.
"""


class SmoothTestError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SmoothTestError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ConfigurationError(SmoothTestError, ValueError):
    """Inconsistent or out-of-range settings."""


class ContractError(SmoothTestError, ValueError):
    """Objects of mismatched shape or kind were combined."""


class InsufficientDataError(SmoothTestError, ValueError):
    """A group (or the whole dataset) has too few observations."""


class DegenerateDataError(SmoothTestError, ValueError):
    """An estimated variance is zero."""


class NumericalError(SmoothTestError, ArithmeticError):
    """A covariance matrix is not positive definite."""


class DataFormatError(SmoothTestError, ValueError):
    """Malformed input file."""
