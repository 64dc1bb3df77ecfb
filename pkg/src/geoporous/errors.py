"""Exception hierarchy.

Every failure a construction can signal has its own class so that callers
(and the CLI) can name the violated condition precisely.
"""


class GeoporousError(Exception):
    """Base class for all package errors."""


class ChartViolation(GeoporousError, ValueError):
    """A point does not satisfy the chart constraint of its space."""


class SegmentNotUnique(GeoporousError):
    """Endpoints are at distance >= D_X, so the metric segment is not unique."""


class DegenerateTriangle(GeoporousError, ValueError):
    pass


class PerimeterTooLarge(GeoporousError, ValueError):
    pass


class SideInequalityViolated(GeoporousError, ValueError):
    pass


class NoDeltaFound(GeoporousError):
    pass


class EmptyRegion(GeoporousError, ValueError):
    pass


class NoWitness(GeoporousError):
    pass


class EmptyFamily(GeoporousError):
    pass


class ContextMismatch(GeoporousError, ValueError):
    pass


class TooFewSamples(GeoporousError, ValueError):
    pass


class SegmentOutsideDomain(GeoporousError, ValueError):
    pass


class NoSteepPoint(GeoporousError):
    """No grid point passed the quotient test; usually the grids are too coarse."""


class NoConvergence(GeoporousError):
    pass


class EmptyLandmarks(GeoporousError, ValueError):
    pass


class SourceNotNonexpansive(GeoporousError, ValueError):
    pass


class HypothesisViolated(GeoporousError, ValueError):
    pass


class PlanInfeasible(GeoporousError):
    pass


class SteepnessFailed(GeoporousError):
    pass


class TrialProjectionFailed(GeoporousError):
    pass


class NoTargetPoint(GeoporousError):
    pass


class SpaceMismatch(GeoporousError, ValueError):
    pass


class StarViolation(GeoporousError):
    pass


class ConfigInvalid(GeoporousError, ValueError):
    pass


class CertificateFailed(GeoporousError):
    def __init__(self, invariant, message=""):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}" if message else invariant)
