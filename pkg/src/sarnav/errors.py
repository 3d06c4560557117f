"""Exception and warning types shared across the package."""


class SarnavError(Exception):
    """Base class for all package errors."""


class LargeAngleError(SarnavError, ValueError):
    """Attitude error outside the small-angle regime of the linear error model."""


class EdgeMinimumError(SarnavError):
    """Closest approach falls on the first or last pulse of the aperture."""


class ShapeMismatchError(SarnavError, ValueError):
    """Array shapes are inconsistent (e.g. replica longer than the pulse window)."""


class DegenerateImageError(SarnavError, ValueError):
    """Image carries no usable peak (all zero or all equal magnitude)."""


class UnboundedWidthError(SarnavError):
    """Profile never drops below the -3 dB threshold inside the grid."""


class ScenarioError(SarnavError, ValueError):
    """Base class for scenario configuration problems."""


class ParseError(ScenarioError):
    """Scenario file could not be parsed, or holds unknown keys."""


class ValidationError(ScenarioError):
    """Scenario parsed but violates a model invariant."""


class GateMissWarning(UserWarning):
    """A target echo lies entirely outside the receive window."""
