"""Building wireless performance (BWP) evaluation.

The building is judged against open space through two ratios at a UE
location: the power gain ``g_p`` (intended power in the building over
intended power in open space) and the interference gain ``g_i`` (open-space
interference plus noise over in-building interference plus noise).
"""
__version__ = "0.1.0"

from .core import BwpResult, PowerBreakdown, QuadratureConfig, evaluate  # noqa: E402
from .geometry import BuildingLayout, RoomSpec, Wall, make_office_layout, make_rect_room  # noqa: E402
from .propagation import Scenario, coverage_distance  # noqa: E402

__all__ = [
    "BuildingLayout", "BwpResult", "PowerBreakdown", "QuadratureConfig", "RoomSpec", "Scenario",
    "Wall", "coverage_distance", "evaluate", "make_office_layout", "make_rect_room",
]
