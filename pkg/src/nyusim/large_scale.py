"""Large-scale loss: CI/CIH mean path loss, shadowing and extra attenuations."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .core import (SPEED_OF_LIGHT, ChannelCondition, LinkGeometry, Scenario, ScenarioParams,
                   as_condition, as_scenario, load_models, params_for)

DEFAULT_H_BS = 35.0


class O2IMode(str, enum.Enum):
    NONE = "None"
    LOW_LOSS = "LowLoss"
    HIGH_LOSS = "HighLoss"


@dataclass(frozen=True)
class PathLossBreakdown:
    """Additive path loss components in dB."""

    fspl_1m: float
    distance_term: float
    atmospheric: float = 0.0
    o2i: float = 0.0
    foliage: float = 0.0
    shadowing: float = 0.0

    @property
    def total(self) -> float:
        return (self.fspl_1m + self.distance_term + self.atmospheric + self.o2i
                + self.foliage + self.shadowing)

    @property
    def mean(self) -> float:
        """Total without the shadowing draw."""
        return self.total - self.shadowing


class AtmosphereTable:
    """Specific attenuation samples (GHz -> dB/km), linearly interpolated."""

    def __init__(self, frequencies, db_per_km):
        freqs = np.asarray(frequencies, dtype=float)
        vals = np.asarray(db_per_km, dtype=float)
        if freqs.ndim != 1 or freqs.shape != vals.shape or freqs.size < 2:
            raise ValueError("atmosphere table needs two equal-length columns")
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("atmosphere table frequencies must be strictly increasing")
        if np.any(vals < 0):
            raise ValueError("atmosphere table attenuation must be non-negative")
        self.frequencies = freqs
        self.db_per_km = vals

    @classmethod
    def load(cls, path: str | Path | None = None) -> "AtmosphereTable":
        if path is None:
            text = resources.files("nyusim.data").joinpath("atmosphere.csv").read_text()
        else:
            text = Path(path).read_text()
        rows = [line.split(",") for line in text.splitlines()
                if line.strip() and not line.lstrip().startswith("#")]
        data = np.array(rows, dtype=float)
        return cls(data[:, 0], data[:, 1])

    def specific_attenuation(self, f: float) -> float:
        if not self.frequencies[0] <= f <= self.frequencies[-1]:
            raise ValueError(f"{f} GHz outside the atmosphere table coverage "
                             f"[{self.frequencies[0]}, {self.frequencies[-1]}] GHz")
        return float(np.interp(f, self.frequencies, self.db_per_km))


@dataclass
class AttenuationConfig:
    o2i_mode: O2IMode = O2IMode.NONE
    foliage_loss_per_meter: float = 0.0
    foliage_depth: float = 0.0
    atmospheric_enabled: bool = False
    atmosphere: AtmosphereTable | None = None
    shadowing_enabled: bool = True
    h_bs: float = DEFAULT_H_BS

    def __post_init__(self):
        self.o2i_mode = O2IMode(self.o2i_mode)
        if self.foliage_loss_per_meter < 0 or self.foliage_depth < 0:
            raise ValueError("foliage parameters must be non-negative")
        if self.atmospheric_enabled and self.atmosphere is None:
            self.atmosphere = AtmosphereTable.load()


@dataclass
class ShadowingState:
    corr_distance: float
    last_position: tuple[float, float, float] | None = None
    last_value: float | None = None

    def __post_init__(self):
        if not self.corr_distance > 0:
            raise ValueError("shadowing correlation distance must be positive")


def fspl_1m(f) -> float:
    """Free-space path loss at 1 m, f in GHz."""
    return 20.0 * np.log10(4.0 * math.pi * np.asarray(f, dtype=float) * 1e9 / SPEED_OF_LIGHT)


def _distance(geom) -> Any:
    d = geom.d2D if isinstance(geom, LinkGeometry) else np.asarray(geom, dtype=float)
    if np.any(np.asarray(d) < 1.0):
        raise ValueError("path loss requires d2D >= 1 m (1 m reference distance)")
    return d


def ci_path_loss(params: ScenarioParams, geom: LinkGeometry | float, f: float):
    """Close-in mean path loss; distance may be a geometry or scalar/array."""
    if params.scenario is Scenario.RMa or params.n is None:
        raise ValueError("RMa uses the height-dependent CIH model, not CI")
    d = _distance(geom)
    return fspl_1m(f) + 10.0 * params.n * np.log10(d)


def cih_slope(condition: ChannelCondition | str, h_bs: float) -> float:
    """Height-dependent PLE term multiplying log10(d) in the RMa model."""
    if not h_bs > 0:
        raise ValueError("h_BS must be positive")
    condition = as_condition(condition)
    if condition is ChannelCondition.LOS:
        return 23.1 * (1.0 - 0.03 * (h_bs - 35.0) / 35.0)
    return 30.7 * (1.0 - 0.049 * (h_bs - 35.0) / 35.0)


def cih_path_loss(geom: LinkGeometry | float, f: float, condition: ChannelCondition | str,
                  h_bs: float = DEFAULT_H_BS):
    slope = cih_slope(condition, h_bs)
    d = _distance(geom)
    return fspl_1m(f) + slope * np.log10(d)


def distance_term(params: ScenarioParams, d, h_bs: float = DEFAULT_H_BS):
    d = _distance(d)
    if params.scenario is Scenario.RMa:
        return cih_slope(params.condition, h_bs) * np.log10(d)
    return 10.0 * params.n * np.log10(d)


def o2i_mean(mode: O2IMode | str, f: float, models: Mapping[str, Any] | None = None) -> float:
    mode = O2IMode(mode)
    if mode is O2IMode.NONE:
        return 0.0
    coeffs = (load_models() if models is None else models)["o2i"][mode.value]
    return 10.0 * math.log10(coeffs["A"] + coeffs["B"] * f * f)


def o2i_loss(mode: O2IMode | str, f: float, rng: np.random.Generator,
             models: Mapping[str, Any] | None = None, size=None):
    """Parabolic building penetration loss with a Gaussian spread, floored at 0 dB."""
    mode = O2IMode(mode)
    if mode is O2IMode.NONE:
        return 0.0 if size is None else np.zeros(size)
    coeffs = (load_models() if models is None else models)["o2i"][mode.value]
    value = o2i_mean(mode, f, models) + coeffs["sigma"] * rng.standard_normal(size)
    return max(float(value), 0.0) if size is None else np.maximum(value, 0.0)


def foliage_loss(cfg: AttenuationConfig) -> float:
    return max(cfg.foliage_loss_per_meter * cfg.foliage_depth, 0.0)


def atmospheric_attenuation(f: float, d3d: float, table: AtmosphereTable) -> float:
    if d3d < 0:
        raise ValueError("d3D must be non-negative")
    return table.specific_attenuation(f) * d3d / 1000.0


def shadowing(params: ScenarioParams, state: ShadowingState, geom: LinkGeometry,
              rng: np.random.Generator) -> float:
    """Spatially correlated shadow fading with exponential autocorrelation.

    The first call for a link draws N(0, sigma^2); later calls correlate
    with the previous value through exp(-displacement / corr_distance).
    """
    sigma = params.chi_sigma
    position = geom.rx_position
    if state.last_value is None:
        value = sigma * rng.standard_normal()
    else:
        delta = math.dist(position, state.last_position)
        rho = math.exp(-delta / state.corr_distance)
        value = rho * state.last_value + math.sqrt(1.0 - rho * rho) * sigma * rng.standard_normal()
    state.last_position = position
    state.last_value = value
    return value


def total_path_loss(scenario: Scenario | str, condition: ChannelCondition | str,
                    geom: LinkGeometry, f: float, cfg: AttenuationConfig,
                    rng: np.random.Generator, *, params: ScenarioParams | None = None,
                    state: ShadowingState | None = None,
                    models: Mapping[str, Any] | None = None) -> PathLossBreakdown:
    """Combine mean path loss, enabled attenuation terms and shadowing."""
    scenario = as_scenario(scenario)
    condition = as_condition(condition)
    if params is None:
        params = params_for(scenario, condition, f)
    if scenario is Scenario.RMa:
        mean = cih_path_loss(geom, f, condition, cfg.h_bs)
    else:
        mean = ci_path_loss(params, geom, f)
    fspl = float(fspl_1m(f))
    dist = float(mean) - fspl

    atm = 0.0
    if cfg.atmospheric_enabled:
        atm = atmospheric_attenuation(f, geom.d3D, cfg.atmosphere)
    o2i = o2i_loss(cfg.o2i_mode, f, rng, models)
    fl = foliage_loss(cfg)

    sf = 0.0
    if cfg.shadowing_enabled and params.chi_sigma > 0:
        if state is None:
            state = ShadowingState(params.shadowing_corr_distance)
        sf = shadowing(params, state, geom, rng)
    return PathLossBreakdown(fspl_1m=fspl, distance_term=dist, atmospheric=atm,
                             o2i=o2i, foliage=fl, shadowing=sf)
