"""Exception and warning types shared across the package."""


class EpregError(Exception):
    """Base class for all package-specific errors."""


class DomainError(EpregError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class DataError(EpregError, ValueError):
    """Input data is malformed (parsing, shape or finiteness problems)."""


class DegenerateInputError(EpregError, ValueError):
    """Input is formally valid but degenerate (e.g. an all-zero vector)."""


class NotIdentifiableError(EpregError, ValueError):
    """The requested estimator is not identifiable for this design.

    Raised by the least-squares path when n <= p or the Gram matrix is
    numerically rank deficient; callers should switch to the ridge path.
    """


class OptimizationError(EpregError, RuntimeError):
    """An optimizer failed to locate a minimizer; message carries diagnostics."""


class BoundaryVarianceError(EpregError, RuntimeError):
    """Variance estimation returned a boundary solution (sigma2 = 0).

    Downstream estimation of coefficients is not meaningful in this case.
    The offending estimates are attached as ``estimates``.
    """

    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


class StandardizationWarning(UserWarning):
    """Data passed to a test or fit does not look standardized."""


class DegenerateChainWarning(UserWarning):
    """An MCMC chain is constant; diagnostics are not informative."""


class NonUniqueModeWarning(UserWarning):
    """Random restarts of a nonconvex mode search found distinct optima."""


class ClampedKurtosisWarning(UserWarning):
    """A kurtosis estimate fell below the attainable range and was clamped."""
