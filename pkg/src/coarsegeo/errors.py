"""Exception hierarchy shared by all coarsegeo modules."""

from __future__ import annotations


class CoarseGeoError(Exception):
    """Base class for all library errors."""


class AlphabetError(CoarseGeoError):
    """A word contains a symbol outside the model's alphabet."""


class ModelMismatchError(CoarseGeoError):
    """Operands belong to different group models."""


class ResourceBudgetError(CoarseGeoError):
    """A construction exceeded its configured budget.

    Carries a partial-size diagnostic so callers can report how far the
    construction got before being cut off.
    """

    def __init__(self, message: str, partial_size: int | None = None):
        super().__init__(message)
        self.partial_size = partial_size


class BallTooSmallError(CoarseGeoError):
    """A path or construction leaves the ambient ball.

    ``required_radius`` names the smallest radius that would have sufficed.
    """

    def __init__(self, message: str, required_radius: int | None = None):
        super().__init__(message)
        self.required_radius = required_radius


class EmptyInputError(CoarseGeoError):
    """An operation received an empty set where a nonempty one is required."""


class InsufficientDataError(CoarseGeoError):
    """An estimator received no samples to work with."""


class IncompleteRateTableError(CoarseGeoError):
    """A rate table is missing the bucket named in the message."""

    def __init__(self, message: str, bucket=None):
        super().__init__(message)
        self.bucket = bucket


class StructuralError(CoarseGeoError):
    """A decomposition or path violates its structural invariants."""


class PreconditionError(CoarseGeoError):
    """An operation's documented precondition does not hold."""


class FixtureError(CoarseGeoError):
    """A combination fixture fails one of its hypotheses.

    The message names the violated hypothesis.
    """


class PinchError(CoarseGeoError):
    """A word that should be Britton-reduced contains a pinch.

    ``index`` is the position of the offending stable letter.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class ConfigError(CoarseGeoError):
    """An experiment config fails validation.

    ``path`` is the dotted location of the offending entry.
    """

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class InternalError(CoarseGeoError):
    """A state the library believes unreachable (e.g. disconnected ball)."""
