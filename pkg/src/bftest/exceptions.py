"""Exception and warning types shared across the package."""


class BFTestError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(BFTestError, ValueError):
    """An input vector or matrix has the wrong shape for the operation."""


class RankDeficientError(BFTestError):
    """A matrix that must have full (row or column) rank is numerically rank deficient."""


class SingularMatrixError(BFTestError):
    """A square system is numerically singular."""


class SingularKError(BFTestError):
    """The reparametrization pullback Jacobian is singular at the evaluation point."""


class DomainViolationError(BFTestError):
    """A reparametrization (or its inverse) is undefined at the requested point."""


class NotConvergedError(BFTestError):
    """A constrained fit failed to converge.

    The best iterate found is attached as ``best`` (a FitResult) so callers
    can inspect or log it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigurationError(BFTestError, ValueError):
    """Invalid configuration (bad field value, unknown key, unusable statistic request)."""


class NegativeStatisticWarning(UserWarning):
    """A test statistic came out below -1e-10.

    The value is reported as computed; only the p-value is taken at the
    clamped (nonnegative) value.
    """
