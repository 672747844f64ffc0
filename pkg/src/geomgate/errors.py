"""Exception hierarchy shared by all geomgate modules."""


class GeomGateError(Exception):
    """Base class for every error raised by geomgate."""


class ParameterError(GeomGateError, ValueError):
    """Physical parameters or run configuration are invalid."""


class SingularityError(GeomGateError, ArithmeticError):
    """A denominator or mode detuning vanishes for the requested parameters."""


class ConvergenceError(GeomGateError, ArithmeticError):
    """A numerical procedure failed to reach its requested accuracy."""


class IntegratorError(ConvergenceError):
    """Time integration stopped before reaching the final time.

    Attributes
    ----------
    t_reached : float
        Last time (us) the integrator successfully reached.
    """

    def __init__(self, message, t_reached=float("nan")):
        super().__init__(message)
        self.t_reached = t_reached


class ClosureSearchError(GeomGateError, ValueError):
    """The closure search window contains no candidate time."""
