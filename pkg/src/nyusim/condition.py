"""LOS/NLOS channel condition per link and drop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .core import ChannelCondition, LinkGeometry, Scenario, as_scenario, load_models


@dataclass(frozen=True)
class InFClutter:
    """One InF sub-scenario (SL, DL, SH or DH)."""

    clutter_density: float
    clutter_size: float
    clutter_height: float
    h_bs: float
    high_bs: bool

    def __post_init__(self):
        if not 0 < self.clutter_density < 1:
            raise ValueError("clutter_density must lie in (0, 1)")
        if self.clutter_size <= 0:
            raise ValueError("clutter_size must be positive")

    def k_subsce(self, h_ut: float) -> float:
        k = -self.clutter_size / math.log(1.0 - self.clutter_density)
        if self.high_bs:
            if not self.h_bs > self.clutter_height > h_ut:
                raise ValueError("high-BS InF clutter needs h_bs > clutter_height > h_ut")
            k *= (self.h_bs - h_ut) / (self.clutter_height - h_ut)
        return k


@dataclass(frozen=True)
class LosModelParams:
    umi_d1: float = 22.0
    umi_d2: float = 100.0
    uma_d1: float = 20.0
    uma_d2: float = 160.0
    h_ue: float = 1.5
    uma_h_ue_min: float = 13.0
    uma_h_ue_max: float = 23.0
    uma_c_d_min: float = 18.0
    rma_d_flat: float = 10.0
    rma_decay: float = 1000.0
    inh_d_flat: float = 1.2
    inh_d_break: float = 6.5
    inh_decay_near: float = 4.7
    inh_decay_far: float = 32.6
    inh_far_scale: float = 0.32
    inf_h_ut: float = 1.5
    inf_clutter: Mapping[str, InFClutter] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("umi_d1", "umi_d2", "uma_d1", "uma_d2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_models(cls, models: Mapping[str, Any] | None = None, **overrides) -> "LosModelParams":
        models = load_models() if models is None else models
        lp = models["los_probability"]
        inf = lp["InF"]
        kwargs = dict(
            umi_d1=lp["UMi"]["d1"], umi_d2=lp["UMi"]["d2"],
            uma_d1=lp["UMa"]["d1"], uma_d2=lp["UMa"]["d2"],
            uma_h_ue_min=lp["UMa"]["h_ue_min"], uma_h_ue_max=lp["UMa"]["h_ue_max"],
            uma_c_d_min=lp["UMa"]["c_d_min"],
            rma_d_flat=lp["RMa"]["d_flat"], rma_decay=lp["RMa"]["decay"],
            inh_d_flat=lp["InH"]["d_flat"], inh_d_break=lp["InH"]["d_break"],
            inh_decay_near=lp["InH"]["decay_near"], inh_decay_far=lp["InH"]["decay_far"],
            inh_far_scale=lp["InH"]["far_scale"],
            inf_h_ut=inf["h_ut"],
            inf_clutter={name: InFClutter(**rec) for name, rec in inf["subscenarios"].items()},
        )
        kwargs.update(overrides)
        return cls(**kwargs)


def _nyu_squared_base(d2d: float, d1: float, d2: float) -> float:
    return min(d1 / d2d, 1.0) * (1.0 - math.exp(-d2d / d2)) + math.exp(-d2d / d2)


def uma_height_correction(d2d: float, h_ue: float, params: LosModelParams) -> float:
    """The UMa correction C(d2D, h_UE); zero for UEs at or below 13 m."""
    if h_ue > params.uma_h_ue_max:
        raise ValueError(f"h_UE={h_ue} m above the supported {params.uma_h_ue_max} m")
    if h_ue <= params.uma_h_ue_min or d2d <= params.uma_c_d_min:
        return 0.0
    c_h = ((h_ue - params.uma_h_ue_min) / 10.0) ** 1.5
    return c_h * 1.25 * (d2d / 100.0) ** 3 * math.exp(-d2d / 150.0)


def inf_los_probability(d2d: float, params: LosModelParams) -> float:
    if len(params.inf_clutter) != 4:
        raise ValueError("InF LOS model needs the four SL/DL/SH/DH clutter records")
    probs = [math.exp(-d2d / c.k_subsce(params.inf_h_ut)) for c in params.inf_clutter.values()]
    return sum(probs) / len(probs)


def los_probability(scenario: Scenario | str, geom: LinkGeometry | float,
                    params: LosModelParams | None = None) -> float:
    """Probability that a link is in LOS. Independent of the carrier frequency.

    ``geom`` may also be a bare 2D distance in meters, in which case the
    UE height comes from ``params.h_ue``.
    """
    scenario = as_scenario(scenario)
    params = LosModelParams.from_models() if params is None else params
    if isinstance(geom, LinkGeometry):
        d2d, h_ue = geom.d2D, geom.height_rx
    else:
        d2d, h_ue = float(geom), params.h_ue
    if not d2d > 0:
        raise ValueError("los_probability requires d2D > 0")

    if scenario is Scenario.UMi:
        p = _nyu_squared_base(d2d, params.umi_d1, params.umi_d2) ** 2
    elif scenario is Scenario.UMa:
        base = _nyu_squared_base(d2d, params.uma_d1, params.uma_d2)
        p = (base * (1.0 + uma_height_correction(d2d, h_ue, params))) ** 2
    elif scenario is Scenario.RMa:
        p = 1.0 if d2d <= params.rma_d_flat else math.exp(-(d2d - params.rma_d_flat) / params.rma_decay)
    elif scenario is Scenario.InH:
        if d2d <= params.inh_d_flat:
            p = 1.0
        elif d2d < params.inh_d_break:
            p = math.exp(-(d2d - params.inh_d_flat) / params.inh_decay_near)
        else:
            p = params.inh_far_scale * math.exp(-(d2d - params.inh_d_break) / params.inh_decay_far)
    elif scenario is Scenario.InF:
        p = inf_los_probability(d2d, params)
    else:  # pragma: no cover
        raise ValueError(f"unsupported scenario {scenario}")
    return min(max(p, 0.0), 1.0)


def draw_condition(p_los: float, rng: np.random.Generator) -> ChannelCondition:
    if not 0.0 <= p_los <= 1.0:
        raise ValueError("p_los must lie in [0, 1]")
    return ChannelCondition.LOS if rng.random() < p_los else ChannelCondition.NLOS


class ConditionCache:
    """Write-once store of the condition drawn for each (drop, link)."""

    def __init__(self):
        self._store: dict[tuple[int, int], ChannelCondition] = {}

    def get_or_draw(self, drop: int, link: int, draw) -> ChannelCondition:
        key = (drop, link)
        if key not in self._store:
            self._store[key] = draw()
        return self._store[key]

    def __contains__(self, key) -> bool:
        return key in self._store

    def __len__(self) -> int:
        return len(self._store)
