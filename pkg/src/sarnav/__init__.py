"""SAR back-projection simulator for navigation-error sensitivity studies."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegenerateImageError,
    EdgeMinimumError,
    GateMissWarning,
    LargeAngleError,
    ParseError,
    SarnavError,
    ScenarioError,
    ShapeMismatchError,
    UnboundedWidthError,
    ValidationError,
)
from .kinematics import ErrorState, FlightParams  # noqa: E402
from .geometry import SlowTimeGrid, Target  # noqa: E402
from .waveform import ChirpParams, DataMatrix  # noqa: E402
from .backprojection import ComplexImage, ImageGrid, backproject  # noqa: E402
from .analysis import predict_shift  # noqa: E402

__all__ = [
    "ChirpParams",
    "ComplexImage",
    "DataMatrix",
    "DegenerateImageError",
    "EdgeMinimumError",
    "ErrorState",
    "FlightParams",
    "GateMissWarning",
    "ImageGrid",
    "LargeAngleError",
    "ParseError",
    "SarnavError",
    "ScenarioError",
    "ShapeMismatchError",
    "SlowTimeGrid",
    "Target",
    "UnboundedWidthError",
    "ValidationError",
    "backproject",
    "predict_shift",
]
