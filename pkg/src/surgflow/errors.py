"""Exception types shared across the package."""


class SurgflowError(Exception):
    """Base class for all package errors."""


class ConfigError(SurgflowError):
    """Invalid scenario configuration (CLI exits with status 2)."""


class NumericalAbort(SurgflowError):
    """Unrecoverable numerical failure during a run (CLI exits with status 3)."""


class DegenerateProjection(SurgflowError):
    """Boundary projection is not unique (e.g. center of a ball)."""


class RadiusTooLarge(SurgflowError):
    """Requested chart radius exceeds the focal radius of the boundary."""


class DegenerateStar(SurgflowError):
    """A vertex star has zero area; curvature is undefined there."""


class RemeshFailure(NumericalAbort):
    """Remeshing could not reach its quality targets within the budget."""


class OpenSurface(SurgflowError):
    """Mesh boundary loops do not close on the domain wall."""


class StepRejected(SurgflowError):
    """A flow step violated mean-convexity or nestedness checks."""


class MeanConvexityLost(NumericalAbort):
    """Mean-convexity violated beyond tolerance; resolution or step size failed."""


class InsufficientHistory(SurgflowError):
    """Backward time window required by the neck detector is not covered."""


class SeparationImpossible(NumericalAbort):
    """No subset of neck candidates separates the trigger set from the thick set."""


class StitchFailure(SurgflowError):
    """Cutting a neck did not produce two clean loops."""


class ChartOverflow(SurgflowError):
    """A boundary-chart construction exceeded the chart's validity radius."""


class GridTooCoarse(SurgflowError):
    """Level-set grid cannot resolve the initial surface."""


class EmptyTrack(SurgflowError):
    """A spacetime track has no sample points in the requested range."""


class FrameMissing(SurgflowError):
    """No track frame exists near the requested time."""


class EmptyIntersection(SurgflowError):
    """Sample cloud does not intersect the requested ball."""


class RunNotFinished(SurgflowError):
    """Long-time report requested before the run terminated."""


class SymmetryMismatch(ConfigError):
    """Axisymmetric oracle requested for a scenario without rotational symmetry."""
