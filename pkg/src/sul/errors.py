"""Exception types shared across the package."""


class SulError(Exception):
    """Base class for all package-specific errors."""


class NotSquarefree(SulError):
    """Sturm root counting was asked to run on a polynomial with repeated roots."""


class NoSignChange(SulError):
    """A witness was expected to change sign somewhere at or beyond the cut, but does not."""


class MomentMismatch(SulError):
    """A quadrature rule failed its mandatory moment validation."""


class LpNumericalFailure(SulError):
    """The simplex solver could not make a trustworthy feasibility decision."""


class Infeasible(SulError):
    """No admissible witness exists for the requested parameters."""


class PrecisionExhausted(SulError):
    """Certification kept failing at the configured working precision."""


class PreconditionViolated(SulError):
    """An input violated a documented precondition of the called operation."""
