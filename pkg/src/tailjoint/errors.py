"""Exception hierarchy shared across the package."""


class TailjointError(Exception):
    """Base class for all package-specific errors."""


class DomainError(TailjointError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class LevelError(DomainError):
    """A tail level (tau, tau_prime or k) is inconsistent with the sample."""


class IngestionError(TailjointError):
    """A CSV file could not be parsed into a sample."""


class NotPositiveSemidefiniteError(TailjointError):
    """A matrix has a negative eigenvalue beyond the clipping tolerance."""


class SingularCovarianceError(TailjointError):
    """A covariance matrix required to be invertible is singular."""


class NumericError(TailjointError):
    """A numerical routine produced a non-finite intermediate value."""
