"""Exception types raised by the cavity model, analysis and fitting layers."""


class SqzCavityError(Exception):
    """Base class for all package-specific errors."""


class InvalidConfig(SqzCavityError, ValueError):
    """A configuration field or input record is out of its valid range."""


class AboveThreshold(SqzCavityError):
    """Requested squeeze factor is at or above the parametric oscillation
    threshold; the steady-state spectra are undefined there."""


class SingularSystem(SqzCavityError):
    """The input-output linear system is numerically singular (the cavity
    is exactly at its oscillation threshold)."""


class NumericalDomain(SqzCavityError):
    """A closed-form expression was evaluated outside its real domain."""


class NoCrossing(SqzCavityError):
    """A bracketing search found no sign change (e.g. a spectrum that never
    falls to half its peak value within the grid)."""


class QuadratureFailure(SqzCavityError):
    """Adaptive quadrature did not reach the requested tolerance."""


class NonConvergence(SqzCavityError):
    """The optimizer hit its iteration cap before meeting the convergence
    criteria."""


class DegenerateJacobian(SqzCavityError):
    """The fit Jacobian is rank deficient: the requested free parameters are
    not identifiable from the supplied data."""


class InsufficientData(SqzCavityError):
    """Too few data points for the requested fit."""
