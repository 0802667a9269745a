"""Exception hierarchy shared by all modules."""


class DiracDelayError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(DiracDelayError, ValueError):
    """An input object violates its contract (bad delay, bad segments, ...)."""


class DomainError(ValidationError):
    """A point lies outside the interval on which an object is defined."""


class PreconditionError(DiracDelayError, ValueError):
    """A structural precondition of an operation does not hold."""


class SolverOverflowError(DiracDelayError, ArithmeticError):
    """Non-finite values appeared while marching the delay system.

    Attributes
    ----------
    x : float
        First grid abscissa at which a non-finite value was found.
    lam : complex
        Spectral parameter of the failing run.
    """

    def __init__(self, x, lam):
        self.x = float(x)
        self.lam = complex(lam)
        super().__init__(
            f"non-finite solution at x = {self.x:.6g} for lambda = {self.lam:.6g}; "
            "|Im lambda| is too large for double precision"
        )


class SeriesDepthError(DiracDelayError, ValueError):
    """Requested successive-approximation depth is not implemented."""


class SeriesRangeError(DiracDelayError, ValueError):
    """Spectral parameter too large for non-oscillatory nested quadrature."""


class DegenerateKernelError(DiracDelayError, ValueError):
    """The Hankel-type operator is numerically zero."""


class KernelTuningError(DiracDelayError, RuntimeError):
    """No kernel in the one-parameter pencil carries the requested eigenvalue pair."""


class FamilyConstructionError(DiracDelayError, ValueError):
    """An eigenfunction required by the iso-bispectral construction is missing."""


class SpectrumIncompleteError(DiracDelayError, ValueError):
    """A spectrum with flagged (unresolved) entries was used where a complete one is required."""
