"""Exception and warning classes raised across the package."""


class WeakKAMError(Exception):
    """Base class for all errors raised by :mod:`weakkam`."""


class NotReversible(WeakKAMError, ValueError):
    """Raised when an operation requires ``b == 0`` but the drift is nonzero."""


class NoConvergence(WeakKAMError, RuntimeError):
    """An iteration hit its step cap (or a trace did not stabilize)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class Divergence(WeakKAMError, RuntimeError):
    """Forward iteration exceeded its blow-up bound."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NotFixedPoint(WeakKAMError, ValueError):
    pass


class NotSaddle(WeakKAMError, ValueError):
    pass


class GraphFailure(WeakKAMError, RuntimeError):
    """The computed stable curve folds over in x, so it is not a graph p = h(x)."""


class Blowup(WeakKAMError, RuntimeError):
    """Momentum left the configured bound during flow integration."""


class PreconditionError(WeakKAMError, ValueError):
    """An experiment precondition (e.g. constants are subsolutions) failed."""


class BoundaryMinimizer(UserWarning):
    """The optimal velocity sits on the edge of the search box; ``v_max`` may be too small."""


class DegenerateFixedPoints(UserWarning):
    """The fixed-point equation vanishes identically on the scan grid."""
