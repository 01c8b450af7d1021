"""Exception hierarchy for gaitforge."""


class GaitforgeError(Exception):
    """Base class for all gaitforge errors."""


class ConfigError(GaitforgeError):
    """Malformed or inconsistent configuration input."""


class SingularResistance(GaitforgeError):
    """Drag resistance matrix C_q is numerically singular (degenerate parameters)."""


class SingularInertia(GaitforgeError):
    """Body inertia block M_bb is numerically singular; should never happen for
    valid parameters since M_bb is positive definite."""


class IntegrationFailure(GaitforgeError):
    """ODE integration failed (step size underflow or solver breakdown).

    Attributes:
        location: curve parameter / time at which the failure occurred, if known.
    """

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class NonSimpleRegion(GaitforgeError):
    """A region polyline self-intersects and cannot be surface-integrated."""


class EmptyContour(GaitforgeError):
    """A height field has no sign change anywhere: no zero contour exists."""


class JunctionBearing(GaitforgeError):
    """A contour loop carries a junction and cannot be evaluated as a smooth gait."""


class SingularArcBreakdown(GaitforgeError):
    """The singular-arc tangent equation degenerated (A^2 + B^2 ~ 0).

    Attributes:
        state: the (phi1, phi2, theta, lam3) point where the tangent became undefined.
        time: arc time of the breakdown.
    """

    def __init__(self, message, state=None, time=None):
        super().__init__(message)
        self.state = state
        self.time = time


class NoRoot(GaitforgeError):
    """A scalar root find had no root over the bracketed range.

    Attributes:
        bracket: the (lo, hi) range that was searched.
    """

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class NoBracket(GaitforgeError):
    """A shooting residual never changed sign over the scanned interval.

    Attributes:
        interval: the scanned (lo, hi) interval.
    """

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class BoundNeverReached(GaitforgeError):
    """The singular arc terminated before the joint bound was reached; the
    unbounded solution applies.

    Attributes:
        solution: the unbounded PmpSolution found instead, if available.
    """

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution
