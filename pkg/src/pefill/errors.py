"""Exception hierarchy shared by all pefill modules."""


class PefillError(Exception):
    """Base class for every error raised by this package."""


class InvalidProfile(PefillError, ValueError):
    """A metric profile violates its structural invariants."""


class CapSingularity(PefillError, ArithmeticError):
    """A warping factor vanishes where no series evaluation is available."""


class EinsteinResidualTooLarge(PefillError):
    """The Einstein shortcut for the Weyl tensor was requested on non-Einstein data."""


class StepFailure(PefillError, RuntimeError):
    """Adaptive step-size control could not meet the requested tolerance."""


class SeedOrderTooLow(PefillError):
    """Series truncation error at the hand-off radius exceeds the budget."""


class NonPositiveRadius(PefillError, ValueError):
    pass


class UnsupportedDimension(PefillError, ValueError):
    pass


class QuadratureFailure(PefillError, RuntimeError):
    pass


class NormalizationDivergence(PefillError, RuntimeError):
    """The limit fixing the defining-function normalization did not settle."""


class IllConditionedFit(PefillError, RuntimeError):
    pass


class UnstableExtraction(PefillError, RuntimeError):
    """Leave-one-out refits disagree by more than the allowed spread."""


class NonConvergence(PefillError, RuntimeError):
    pass


class DeckTruncationTooSmall(PefillError, ValueError):
    """Too few deck translates to guarantee every ball member is seen."""
