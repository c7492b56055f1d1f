"""Shared domain types, parameter tables, geometry and RNG streams."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema
import numpy as np
import yaml

SPEED_OF_LIGHT = 299_792_458.0  # m/s

ANCHOR_LOW_GHZ = 28.0
ANCHOR_HIGH_GHZ = 140.0
MIN_FREQUENCY_GHZ = 0.5
MAX_FREQUENCY_GHZ = 150.0


class Scenario(str, enum.Enum):
    UMi = "UMi"
    UMa = "UMa"
    RMa = "RMa"
    InH = "InH"
    InF = "InF"

    @property
    def is_outdoor(self) -> bool:
        return self in (Scenario.UMi, Scenario.UMa, Scenario.RMa)


class ChannelCondition(str, enum.Enum):
    LOS = "LOS"
    NLOS = "NLOS"


def as_scenario(value: Scenario | str) -> Scenario:
    try:
        return Scenario(value)
    except ValueError:
        raise ValueError(f"unknown scenario {value!r}; expected one of "
                         f"{[s.value for s in Scenario]}") from None


def as_condition(value: ChannelCondition | str) -> ChannelCondition:
    try:
        return ChannelCondition(value)
    except ValueError:
        raise ValueError(f"unknown channel condition {value!r}") from None


@dataclass(frozen=True)
class CarrierConfig:
    """Carrier frequency in GHz and RF bandwidth in Hz."""

    frequency: float
    rf_bandwidth: float = 800e6

    def __post_init__(self):
        if not (MIN_FREQUENCY_GHZ <= self.frequency <= MAX_FREQUENCY_GHZ):
            raise ValueError(
                f"frequency {self.frequency} GHz outside "
                f"[{MIN_FREQUENCY_GHZ}, {MAX_FREQUENCY_GHZ}] GHz")
        if not self.rf_bandwidth > 0:
            raise ValueError("rf_bandwidth must be positive")

    @property
    def frequency_hz(self) -> float:
        return self.frequency * 1e9

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency_hz


# ---------------------------------------------------------------------------
# Angles and geometry
# ---------------------------------------------------------------------------

def wrap_degrees(angle):
    """Wrap azimuth(s) to [0, 360)."""
    wrapped = np.mod(angle, 360.0)
    # np.mod can return 360.0 for tiny negative inputs
    wrapped = np.where(wrapped >= 360.0, 0.0, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def nyu_bearing(dx, dy):
    """Azimuth in the NYU convention: from the +y axis, clockwise positive."""
    return wrap_degrees(90.0 - np.degrees(np.arctan2(dy, dx)))


@dataclass(frozen=True)
class LinkGeometry:
    """Tx/Rx placement of one link.

    ``azimuth_bearing_tx_to_rx`` uses the NYU convention (degrees from the
    +y axis, clockwise) and ``elevation_tx_to_rx`` is measured from the
    horizontal plane, positive when the receiver is above the transmitter.
    """

    tx_position: tuple[float, float, float]
    rx_position: tuple[float, float, float]
    ue_velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    d2D: float = field(init=False)
    d3D: float = field(init=False)
    azimuth_bearing_tx_to_rx: float = field(init=False)
    elevation_tx_to_rx: float = field(init=False)

    def __post_init__(self):
        for name in ("tx_position", "rx_position", "ue_velocity"):
            vec = tuple(float(v) for v in getattr(self, name))
            if len(vec) != 3 or not all(math.isfinite(v) for v in vec):
                raise ValueError(f"{name} must be a finite 3-vector")
            object.__setattr__(self, name, vec)
        dx, dy, dz = (r - t for r, t in zip(self.rx_position, self.tx_position))
        d2 = math.hypot(dx, dy)
        object.__setattr__(self, "d2D", d2)
        object.__setattr__(self, "d3D", math.sqrt(d2 * d2 + dz * dz))
        object.__setattr__(self, "azimuth_bearing_tx_to_rx", float(nyu_bearing(dx, dy)))
        object.__setattr__(self, "elevation_tx_to_rx", math.degrees(math.atan2(dz, d2)))

    @property
    def height_tx(self) -> float:
        return self.tx_position[2]

    @property
    def height_rx(self) -> float:
        return self.rx_position[2]

    @property
    def below_reference_distance(self) -> bool:
        """True when d2D < 1 m; path loss models reject such links."""
        return self.d2D < 1.0


def link_geometry(tx, rx, v=(0.0, 0.0, 0.0)) -> LinkGeometry:
    return LinkGeometry(tuple(tx), tuple(rx), tuple(v))


# ---------------------------------------------------------------------------
# Parameter tables
# ---------------------------------------------------------------------------

def interpolate_param(p28: float, p140: float, f: float) -> float:
    """Piecewise-linear frequency interpolation between the 28/140 GHz anchors.

    Clamped to the anchor value outside [28, 140] GHz.
    """
    if not (math.isfinite(p28) and math.isfinite(p140) and math.isfinite(f)):
        raise ValueError("interpolate_param requires finite inputs")
    if f <= ANCHOR_LOW_GHZ:
        return float(p28)
    if f >= ANCHOR_HIGH_GHZ:
        return float(p140)
    return (p140 - p28) / (ANCHOR_HIGH_GHZ - ANCHOR_LOW_GHZ) * f + (5 * p28 - p140) / 4


@dataclass(frozen=True)
class ScenarioParams:
    """Model parameters for one scenario/condition at one carrier frequency.

    Fields that the tables do not provide for a scenario are ``None``.
    """

    scenario: Scenario
    condition: ChannelCondition
    frequency: float
    n: float | None = None
    chi_sigma: float = 0.0
    N_c: float | None = None
    lambda_c: float | None = None
    M_s: float | None = None
    mu_s: float | None = None
    beta_s: float | None = None
    mu_tau: float | None = None
    alpha_tau: float | None = None
    beta_tau: float | None = None
    X_max: float | None = None
    mu_rho: float | None = None
    alpha_rho: float | None = None
    beta_rho: float | None = None
    Gamma: float = 0.0          # cluster power decay [ns]
    sigma_Z: float = 0.0
    gamma: float = 0.0          # subpath power decay [ns]
    sigma_U: float = 0.0
    lambda_AOD: float = 1.0
    lambda_AOA: float = 1.0
    mu_ZOD: float = 0.0
    sigma_ZOD: float = 0.0
    mu_ZOA: float = 0.0
    sigma_ZOA: float = 0.0
    sigma_phi_AOD: float = 0.0
    sigma_theta_ZOD: float = 0.0
    sigma_phi_AOA: float = 0.0
    sigma_theta_ZOA: float = 0.0
    mti: float = 0.0            # minimum inter-cluster interval [ns]
    shadowing_corr_distance: float = 1.0
    family_switch_ghz: float = 100.0

    @property
    def high_band(self) -> bool:
        return self.frequency >= self.family_switch_ghz

    def replace(self, **changes) -> "ScenarioParams":
        return replace(self, **changes)


TABLE_FIELDS = tuple(
    f.name for f in fields(ScenarioParams)
    if f.name not in ("scenario", "condition", "frequency", "mti",
                      "shadowing_corr_distance", "family_switch_ghz"))

_ANCHOR_RECORD = {
    "type": "object",
    "propertyNames": {"enum": list(TABLE_FIELDS)},
    "additionalProperties": {"type": "number", "minimum": -90, "maximum": 1000},
}

ANCHORS_SCHEMA = {
    "type": "object",
    "required": ["version", "anchors"],
    "properties": {
        "version": {"type": "integer"},
        "anchors": {
            "type": "object",
            "required": [s.value for s in Scenario],
            "additionalProperties": False,
            "patternProperties": {
                "^(UMi|UMa|RMa|InH|InF)$": {
                    "type": "object",
                    "required": ["LOS", "NLOS"],
                    "additionalProperties": False,
                    "patternProperties": {
                        "^(LOS|NLOS)$": {
                            "type": "object",
                            "minProperties": 1,
                            "additionalProperties": False,
                            "patternProperties": {"^(28|140)$": _ANCHOR_RECORD},
                        }
                    },
                }
            },
        },
    },
}

MODELS_SCHEMA = {
    "type": "object",
    "required": ["version", "mti_ns", "shadowing_corr_distance_m",
                 "los_probability", "o2i", "xpd_db", "family_switch_ghz"],
    "properties": {
        "mti_ns": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
        "shadowing_corr_distance_m": {
            "type": "object",
            "additionalProperties": {
                "type": "object", "required": ["LOS", "NLOS"],
                "additionalProperties": {"type": "number", "exclusiveMinimum": 0}}},
        "o2i": {
            "type": "object", "required": ["LowLoss", "HighLoss"],
            "additionalProperties": {
                "type": "object", "required": ["A", "B", "sigma"],
                "additionalProperties": {"type": "number", "minimum": 0}}},
        "xpd_db": {
            "type": "object", "required": ["LOS", "NLOS"],
            "additionalProperties": {
                "type": "object", "required": ["mean", "std"],
                "properties": {"std": {"type": "number", "minimum": 0}}}},
        "family_switch_ghz": {"type": "number", "exclusiveMinimum": 0},
    },
}

_NON_NEGATIVE = {"chi_sigma", "mu_tau", "alpha_tau", "beta_tau", "mu_rho", "alpha_rho",
                 "beta_rho", "Gamma", "sigma_Z", "gamma", "sigma_U", "sigma_ZOD",
                 "sigma_ZOA", "sigma_phi_AOD", "sigma_theta_ZOD", "sigma_phi_AOA",
                 "sigma_theta_ZOA"}


def _read_yaml(path: str | Path | None, default_name: str) -> dict:
    if path is None:
        text = resources.files("nyusim.data").joinpath(default_name).read_text()
    else:
        text = Path(path).read_text()
    return yaml.safe_load(text)


@lru_cache(maxsize=8)
def load_anchors(path: str | None = None) -> Mapping[str, Any]:
    """Load and schema-check the anchor parameter file."""
    data = _read_yaml(path, "anchors.yaml")
    jsonschema.validate(data, ANCHORS_SCHEMA)
    for scen, per_cond in data["anchors"].items():
        for cond, per_anchor in per_cond.items():
            for anchor, record in per_anchor.items():
                bad = [k for k in _NON_NEGATIVE if record.get(k, 0) < 0]
                if bad:
                    raise ValueError(f"{scen}/{cond}/{anchor}: negative {bad}")
    return data["anchors"]


@lru_cache(maxsize=8)
def load_models(path: str | None = None) -> Mapping[str, Any]:
    """Load and schema-check scenario constants (MTI, LOS models, O2I, XPD)."""
    data = _read_yaml(path, "models.yaml")
    jsonschema.validate(data, MODELS_SCHEMA)
    return data


def params_for(scenario: Scenario | str, condition: ChannelCondition | str, f: float,
               anchors: Mapping[str, Any] | None = None,
               models: Mapping[str, Any] | None = None) -> ScenarioParams:
    """Interpolated model parameters at carrier frequency ``f`` (GHz).

    A field present at only one anchor (e.g. ``M_s`` at 28 GHz for UMi, or
    every InF field) is used unchanged at all frequencies.
    """
    scenario = as_scenario(scenario)
    condition = as_condition(condition)
    if not (MIN_FREQUENCY_GHZ <= f <= MAX_FREQUENCY_GHZ):
        raise ValueError(f"frequency {f} GHz outside [0.5, 150] GHz")
    anchors = load_anchors() if anchors is None else anchors
    models = load_models() if models is None else models

    table = anchors[scenario.value][condition.value]
    low = table.get("28", {})
    high = table.get("140", {})
    values: dict[str, float] = {}
    for name in TABLE_FIELDS:
        if name in low and name in high:
            values[name] = interpolate_param(low[name], high[name], f)
        elif name in low:
            values[name] = float(low[name])
        elif name in high:
            values[name] = float(high[name])
    return ScenarioParams(
        scenario=scenario,
        condition=condition,
        frequency=float(f),
        mti=float(models["mti_ns"][scenario.value]),
        shadowing_corr_distance=float(
            models["shadowing_corr_distance_m"][scenario.value][condition.value]),
        family_switch_ghz=float(models["family_switch_ghz"]),
        **values,
    )


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------

class Stream(enum.IntEnum):
    """Purpose tags so that each link owns several independent substreams."""

    PLACEMENT = 0
    CONDITION = 1
    LARGE_SCALE = 2
    SMALL_SCALE = 3


@dataclass(frozen=True)
class RngStream:
    """A reproducible substream identified by ``(seed, stream_id)``.

    Backed by numpy's ``SeedSequence`` spawn keys, so distinct ids give
    statistically independent PCG64 generators on every platform.
    """

    seed: int
    stream_id: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed) & (2**64 - 1),
                                    spawn_key=tuple(int(k) for k in self.stream_id))
        return np.random.default_rng(ss)

    def substream(self, *key: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id + tuple(int(k) for k in key))


def link_rng(seed: int, drop: int, link: int, purpose: Stream) -> np.random.Generator:
    return RngStream(seed, (drop, link, int(purpose))).generator()
