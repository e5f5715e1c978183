"""Exception types raised by the toolkit."""


class BootTestError(ValueError):
    """Base class for all errors raised by boottest."""


class DegenerateDesign(BootTestError):
    """The regressor has zero empirical variance."""


class TiesDetected(BootTestError):
    """A marginal contains duplicate values where continuity is required."""


class NonFiniteCriterion(BootTestError):
    """A minimum-distance criterion evaluated to a non-finite value."""


class OutOfRange(BootTestError):
    """A parameter or summary lies outside the attainable range."""


class IncompatiblePair(BootTestError):
    """A resampling scheme cannot be combined with the requested functional or statistic."""


class AllReplicatesNonFinite(BootTestError):
    """Every bootstrap replicate failed."""
