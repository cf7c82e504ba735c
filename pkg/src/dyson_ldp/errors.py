"""Exception types shared across the package."""


class DysonLDPError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(DysonLDPError, ValueError):
    """A configuration or argument value is outside its contract."""


class DomainError(DysonLDPError, ValueError):
    """An evaluation point lies outside the mathematical domain."""


class NoDensityError(DomainError):
    """The requested law is a point mass and has no density."""


class WallViolationError(DysonLDPError, ValueError):
    """A path dips below the moving bulk edge 2*sqrt(t) beyond tolerance."""


class SingularDriftError(DysonLDPError, ValueError):
    """The drift integral hits an atom of the spectral measure."""


class EmptySegmentError(DysonLDPError, ValueError):
    """No off-wall segment is available for the requested diagnostic."""


class IntegrationError(DysonLDPError, RuntimeError):
    """The SDE integrator produced a non-finite state.

    Carries the failure time and the minimal inter-particle gap seen there.
    """

    def __init__(self, message, time=None, min_gap=None):
        super().__init__(message)
        self.time = time
        self.min_gap = min_gap
