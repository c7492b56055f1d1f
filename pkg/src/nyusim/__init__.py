"""Drop-based NYU statistical channel simulator (0.5-150 GHz)."""

from .core import (
    CarrierConfig,
    ChannelCondition,
    LinkGeometry,
    RngStream,
    Scenario,
    ScenarioParams,
    interpolate_param,
    link_geometry,
    params_for,
)

__version__ = "0.1.0"

__all__ = [
    "CarrierConfig",
    "ChannelCondition",
    "LinkGeometry",
    "RngStream",
    "Scenario",
    "ScenarioParams",
    "interpolate_param",
    "link_geometry",
    "params_for",
]
