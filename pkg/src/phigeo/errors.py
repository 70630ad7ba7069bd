"""Exception types shared across the package."""


class DomainError(ValueError):
    """A point lies outside the chart of a quadratic differential."""


class SingularPointError(ValueError):
    """An operation was requested at the zero of the differential."""


class UnsupportedFormError(ValueError):
    """The operation is only defined for monomial differentials."""


class ConstructionError(ValueError):
    """Invalid parameters when building a value object."""


class AccuracyError(RuntimeError):
    """A numerical tolerance could not be maintained."""


class ResolutionError(RuntimeError):
    """Sampling is too coarse for a robust answer."""


class PreconditionError(ValueError):
    """An operation was called outside its precondition."""


class RealizabilityError(ValueError):
    """A sector word cannot be realized at the requested order."""


class IncomparableError(ValueError):
    """Two words of different order were compared."""


class NonConvergenceError(RuntimeError):
    """Newton iteration failed; carries the residual history."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class TotallyUmbilicError(ValueError):
    """The surface is umbilic everywhere, so umbilics are not isolated."""


class ChartDegeneracyError(ValueError):
    """The chart parametrization degenerates at this point; use another chart."""
