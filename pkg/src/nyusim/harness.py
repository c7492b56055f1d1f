"""Monte Carlo drop harness: configuration, per-drop evaluation and CSV reports."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np
import yaml

from .antenna import AntennaArray, ElementPattern
from .condition import LosModelParams, draw_condition, los_probability
from .core import (MAX_FREQUENCY_GHZ, MIN_FREQUENCY_GHZ, CarrierConfig, ChannelCondition,
                   LinkGeometry, Scenario, Stream, as_condition, as_scenario, link_geometry,
                   link_rng, params_for)
from .large_scale import (AttenuationConfig, O2IMode, PathLossBreakdown, atmospheric_attenuation,
                          cih_slope, fspl_1m, foliage_loss, o2i_loss, total_path_loss)
from .small_scale import (ChannelRealization, SmallScaleConfig, generate_realization,
                          rms_angular_spread, rms_delay_spread)
from .spectrum import (SpectralDensity, beamforming_gain, build_channel_matrix, rx_psd,
                       strongest_directions)

DEFAULT_OUTDOOR_H_BS = 35.0
DEFAULT_INDOOR_H_BS = 3.0


class ConfigError(ValueError):
    """Invalid harness configuration."""


def fmt(value: Any) -> str:
    """Deterministic text form used in every CSV output."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def write_csv(rows: Iterable[Sequence[Any]], header: Sequence[str], path: str | Path | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArrayConfig:
    rows: int = 1
    cols: int = 1
    spacing: float = 0.5
    pattern: str = ElementPattern.ISOTROPIC.value
    bearing: float = 0.0
    downtilt: float = 0.0

    def build(self) -> AntennaArray:
        return AntennaArray(self.rows, self.cols, self.spacing, ElementPattern(self.pattern),
                            self.bearing, self.downtilt)


@dataclass(frozen=True)
class DropConfig:
    scenario: Scenario = Scenario.UMi
    frequency_ghz: float = 28.0
    rf_bandwidth_hz: float = 800e6
    drops: int = 100
    d_min: float = 10.0
    d_max: float = 500.0
    ue_position: tuple[float, float] | None = None
    h_bs: float | None = None
    h_ue: float = 1.5
    ue_speed: float = 0.0
    seed: int = 0
    condition: ChannelCondition | None = None
    o2i_mode: O2IMode = O2IMode.NONE
    foliage_loss_per_meter: float = 0.0
    foliage_depth: float = 0.0
    atmospheric: bool = False
    shadowing: bool = True
    tx_power_dbm: float = 30.0
    tx_array: ArrayConfig = field(default_factory=ArrayConfig)
    rx_array: ArrayConfig = field(default_factory=ArrayConfig)
    n_subbands: int = 100
    sample_times: tuple[float, ...] = (0.0,)
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "scenario", as_scenario(self.scenario))
            object.__setattr__(self, "o2i_mode", O2IMode(self.o2i_mode))
            if self.condition is not None:
                object.__setattr__(self, "condition", as_condition(self.condition))
            if isinstance(self.tx_array, Mapping):
                object.__setattr__(self, "tx_array", ArrayConfig(**self.tx_array))
            if isinstance(self.rx_array, Mapping):
                object.__setattr__(self, "rx_array", ArrayConfig(**self.rx_array))
            ElementPattern(self.tx_array.pattern)
            ElementPattern(self.rx_array.pattern)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        object.__setattr__(self, "sample_times", tuple(float(t) for t in self.sample_times))
        if self.ue_position is not None:
            object.__setattr__(self, "ue_position", tuple(float(v) for v in self.ue_position))
        self.validate()

    def validate(self) -> None:
        if not MIN_FREQUENCY_GHZ <= self.frequency_ghz <= MAX_FREQUENCY_GHZ:
            raise ConfigError(f"frequency_ghz must lie in [{MIN_FREQUENCY_GHZ}, {MAX_FREQUENCY_GHZ}]")
        if self.drops < 1:
            raise ConfigError("drops must be >= 1")
        if self.d_min < 1.0 or self.d_max < self.d_min:
            raise ConfigError("placement needs 1 <= d_min <= d_max")
        if self.ue_position is not None:
            if len(self.ue_position) != 2 or math.hypot(*self.ue_position) < 1.0:
                raise ConfigError("ue_position must be an (x, y) pair at least 1 m from the BS")
        if self.rf_bandwidth_hz <= 0 or self.n_subbands < 1:
            raise ConfigError("rf_bandwidth_hz and n_subbands must be positive")
        if self.bs_height <= 0 or self.h_ue <= 0:
            raise ConfigError("antenna heights must be positive")
        if self.scenario is Scenario.UMa and self.h_ue > 23.0 and self.condition is None:
            raise ConfigError("the UMa LOS probability model supports h_ue up to 23 m")
        if self.ue_speed < 0 or self.workers < 1 or not self.sample_times:
            raise ConfigError("ue_speed >= 0, workers >= 1 and at least one sample time required")
        if self.foliage_loss_per_meter < 0 or self.foliage_depth < 0:
            raise ConfigError("foliage parameters must be non-negative")

    @property
    def bs_height(self) -> float:
        if self.h_bs is not None:
            return self.h_bs
        return DEFAULT_OUTDOOR_H_BS if self.scenario.is_outdoor else DEFAULT_INDOOR_H_BS

    @property
    def carrier(self) -> CarrierConfig:
        return CarrierConfig(self.frequency_ghz, self.rf_bandwidth_hz)

    def attenuation(self) -> AttenuationConfig:
        return AttenuationConfig(o2i_mode=self.o2i_mode,
                                 foliage_loss_per_meter=self.foliage_loss_per_meter,
                                 foliage_depth=self.foliage_depth,
                                 atmospheric_enabled=self.atmospheric,
                                 shadowing_enabled=self.shadowing, h_bs=self.bs_height)

    def replace(self, **changes) -> "DropConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "DropConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_yaml(cls, path: str | Path) -> "DropConfig":
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, Mapping):
            raise ConfigError("config file must hold a mapping")
        return cls.from_mapping(data)


# ---------------------------------------------------------------------------
# Drops
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DropResult:
    drop_id: int
    link_id: int
    condition: ChannelCondition
    d2D: float
    d3D: float
    path_loss: PathLossBreakdown
    n_clusters: int
    n_subpaths: int
    rms_delay_spread_ns: float
    rms_aod_spread_deg: float
    rms_aoa_spread_deg: float
    beamforming_gain_db: float
    rx_power_dbm: float

    @property
    def path_loss_db(self) -> float:
        return self.path_loss.total

    HEADER = ("drop_id", "link_id", "condition", "d2d_m", "d3d_m", "fspl_1m_db",
              "distance_term_db", "atmospheric_db", "o2i_db", "foliage_db", "shadowing_db",
              "path_loss_db", "n_clusters", "n_subpaths", "rms_delay_spread_ns",
              "rms_aod_spread_deg", "rms_aoa_spread_deg", "beamforming_gain_db", "rx_power_dbm")

    def row(self) -> tuple:
        pl = self.path_loss
        return (self.drop_id, self.link_id, self.condition, self.d2D, self.d3D, pl.fspl_1m,
                pl.distance_term, pl.atmospheric, pl.o2i, pl.foliage, pl.shadowing, pl.total,
                self.n_clusters, self.n_subpaths, self.rms_delay_spread_ns,
                self.rms_aod_spread_deg, self.rms_aoa_spread_deg, self.beamforming_gain_db,
                self.rx_power_dbm)


def place_ue(cfg: DropConfig, rng: np.random.Generator) -> LinkGeometry:
    """BS at the origin; UE uniform over the annulus area (or at a fixed spot)."""
    if cfg.ue_position is not None:
        x, y = cfg.ue_position
    else:
        r = math.sqrt(rng.uniform(cfg.d_min ** 2, cfg.d_max ** 2))
        a = rng.uniform(0.0, 2.0 * math.pi)
        x, y = r * math.cos(a), r * math.sin(a)
    heading = rng.uniform(0.0, 2.0 * math.pi)
    v = (cfg.ue_speed * math.cos(heading), cfg.ue_speed * math.sin(heading), 0.0)
    return link_geometry((0.0, 0.0, cfg.bs_height), (x, y, cfg.h_ue), v)


def simulate_drop(cfg: DropConfig, drop_id: int, link_id: int = 0,
                  los_params: LosModelParams | None = None) -> tuple[DropResult, ChannelRealization]:
    """Placement, condition, path loss, realization and beamformed PSD for one drop."""
    seed = cfg.seed
    geom = place_ue(cfg, link_rng(seed, drop_id, link_id, Stream.PLACEMENT))
    if cfg.condition is not None:
        condition = cfg.condition
    else:
        p_los = los_probability(cfg.scenario, geom, los_params)
        condition = draw_condition(p_los, link_rng(seed, drop_id, link_id, Stream.CONDITION))
    params = params_for(cfg.scenario, condition, cfg.frequency_ghz)
    pl = total_path_loss(cfg.scenario, condition, geom, cfg.frequency_ghz, cfg.attenuation(),
                         link_rng(seed, drop_id, link_id, Stream.LARGE_SCALE), params=params)
    ss_cfg = SmallScaleConfig(tx_power_dbm=cfg.tx_power_dbm)
    real = generate_realization(cfg.scenario, condition, geom, cfg.carrier, params,
                                link_rng(seed, drop_id, link_id, Stream.SMALL_SCALE),
                                path_loss_db=pl.total, mean_path_loss_db=pl.mean,
                                config=ss_cfg, drop_id=drop_id)
    tx_arr, rx_arr = cfg.tx_array.build(), cfg.rx_array.build()
    matrix = build_channel_matrix(real, tx_arr, rx_arr)
    tx_dir, rx_dir = strongest_directions(real)
    gains = [beamforming_gain(matrix, tx_arr, rx_arr, tx_dir, rx_dir, cfg.n_subbands, t)
             for t in cfg.sample_times]
    gain_db = 10.0 * math.log10(np.mean([10.0 ** (g / 10.0) for g in gains]))
    sp = real.resolvable_subpaths
    # sum(alpha^2) is the resolvable power over the Tx power
    rx_dbm = cfg.tx_power_dbm + 10.0 * math.log10(float(np.sum(matrix.amplitudes ** 2))) + gain_db
    result = DropResult(
        drop_id=drop_id, link_id=link_id, condition=condition, d2D=geom.d2D, d3D=geom.d3D,
        path_loss=pl, n_clusters=real.n_clusters, n_subpaths=len(sp),
        rms_delay_spread_ns=rms_delay_spread(sp.delay, sp.power),
        rms_aod_spread_deg=rms_angular_spread(sp.aod, sp.power),
        rms_aoa_spread_deg=rms_angular_spread(sp.aoa, sp.power),
        beamforming_gain_db=gain_db, rx_power_dbm=rx_dbm,
    )
    return result, real


def _drop_worker(args) -> DropResult:
    cfg, drop_id = args
    return simulate_drop(cfg, drop_id)[0]


def run_drops(cfg: DropConfig) -> Iterator[DropResult]:
    """Evaluate every drop; results come out sorted by drop id for any worker count."""
    cfg.validate()
    ids = range(cfg.drops)
    if cfg.workers == 1:
        for i in ids:
            yield simulate_drop(cfg, i)[0]
        return
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        chunk = max(1, cfg.drops // (4 * cfg.workers))
        yield from pool.map(_drop_worker, ((cfg, i) for i in ids), chunksize=chunk)


def drops_csv(results: Iterable[DropResult], path: str | Path | None = None) -> str:
    ordered = sorted(results, key=lambda r: (r.drop_id, r.link_id))
    return write_csv((r.row() for r in ordered), DropResult.HEADER, path)


# ---------------------------------------------------------------------------
# Path loss sweep and reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathLossSample:
    condition: ChannelCondition
    d2D: float
    path_loss_db: float


@dataclass(frozen=True)
class SweepRow:
    scenario: Scenario
    condition: ChannelCondition
    frequency_ghz: float
    d2D: float
    n: int
    mean_db: float
    std_db: float

    HEADER = ("scenario", "condition", "frequency_ghz", "d2d_m", "n", "mean_path_loss_db",
              "std_path_loss_db")

    def row(self) -> tuple:
        return (self.scenario, self.condition, self.frequency_ghz, self.d2D, self.n,
                self.mean_db, self.std_db)


def sweep_samples(cfg: DropConfig, distances: Sequence[float],
                  conditions: Sequence[ChannelCondition | str] | None = None,
                  drops_per_distance: int | None = None) -> list[tuple[ChannelCondition, float, np.ndarray]]:
    """Total path loss draws for a UE on the x axis at each distance.

    Every draw is an independent link, so shadowing is i.i.d. N(0, sigma^2).
    """
    if conditions is None:
        conditions = [cfg.condition] if cfg.condition is not None else list(ChannelCondition)
    n = drops_per_distance or cfg.drops
    att = cfg.attenuation()
    out = []
    for ci, cond in enumerate(conditions):
        cond = as_condition(cond)
        params = params_for(cfg.scenario, cond, cfg.frequency_ghz)
        for di, d in enumerate(distances):
            if d < 1.0:
                raise ConfigError("sweep distances must be >= 1 m")
            geom = link_geometry((0.0, 0.0, cfg.bs_height), (float(d), 0.0, cfg.h_ue))
            rng = link_rng(cfg.seed, di, ci, Stream.LARGE_SCALE)
            if cfg.scenario is Scenario.RMa:
                base = float(fspl_1m(cfg.frequency_ghz)) + cih_slope(cond, att.h_bs) * math.log10(d)
            else:
                base = float(fspl_1m(cfg.frequency_ghz)) + 10.0 * params.n * math.log10(d)
            if att.atmospheric_enabled:
                base += atmospheric_attenuation(cfg.frequency_ghz, geom.d3D, att.atmosphere)
            base += foliage_loss(att)
            values = np.full(n, base)
            values = values + o2i_loss(att.o2i_mode, cfg.frequency_ghz, rng, size=n)
            if att.shadowing_enabled and params.chi_sigma > 0:
                values = values + params.chi_sigma * rng.standard_normal(n)
            out.append((cond, float(d), values))
    return out


def sweep(cfg: DropConfig, distances: Sequence[float],
          conditions: Sequence[ChannelCondition | str] | None = None,
          drops_per_distance: int | None = None) -> list[SweepRow]:
    rows = []
    for cond, d, values in sweep_samples(cfg, distances, conditions, drops_per_distance):
        rows.append(SweepRow(cfg.scenario, cond, cfg.frequency_ghz, d, len(values),
                             float(values.mean()), float(values.std())))
    return rows


def sweep_csv(rows: Iterable[SweepRow], path: str | Path | None = None) -> str:
    return write_csv((r.row() for r in rows), SweepRow.HEADER, path)


@dataclass(frozen=True)
class BinRow:
    condition: ChannelCondition
    d_lo: float
    d_hi: float
    n: int
    mean_db: float
    std_db: float

    HEADER = ("condition", "d_lo_m", "d_hi_m", "n", "mean_path_loss_db", "std_path_loss_db")

    def row(self) -> tuple:
        return (self.condition, self.d_lo, self.d_hi, self.n, self.mean_db, self.std_db)


def mean_pathloss_report(results: Iterable[Any], bins: Sequence[float]) -> list[BinRow]:
    """Distance-binned mean/std of total path loss per condition; empty bins are skipped.

    ``results`` needs ``condition``, ``d2D`` and ``path_loss_db`` attributes.
    Bins are half-open [lo, hi) except the last, which includes its upper edge.
    """
    edges = np.asarray(bins, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bins must be at least two strictly increasing edges")
    groups: dict[tuple[ChannelCondition, int], list[float]] = {}
    for r in results:
        idx = int(np.searchsorted(edges, r.d2D, side="right")) - 1
        if r.d2D == edges[-1]:
            idx = edges.size - 2
        if 0 <= idx < edges.size - 1:
            groups.setdefault((as_condition(r.condition), idx), []).append(r.path_loss_db)
    rows = []
    for cond in ChannelCondition:
        for idx in range(edges.size - 1):
            vals = groups.get((cond, idx))
            if vals:
                arr = np.asarray(vals)
                rows.append(BinRow(cond, float(edges[idx]), float(edges[idx + 1]), arr.size,
                                   float(arr.mean()), float(arr.std())))
    return rows


# ---------------------------------------------------------------------------
# Realization dump and PSD table
# ---------------------------------------------------------------------------

SUBPATH_HEADER = ("drop_id", "link_id", "cluster", "subpath", "delay_ns", "power_mw", "power_dbm",
                  "aod_deg", "zod_deg", "aoa_deg", "zoa_deg", "phase_tt", "phase_tp", "phase_pt",
                  "phase_pp", "xpd_tp_db", "xpd_pt_db", "xpd_pp_db", "doppler_hz")


def realization_rows(real: ChannelRealization, link_id: int = 0) -> Iterator[tuple]:
    sp = real.resolvable_subpaths
    dbm = sp.power_dbm
    for i in range(len(sp)):
        yield (real.drop_id, link_id, sp.cluster[i], sp.intra_index[i], sp.delay[i], sp.power[i],
               dbm[i], sp.aod[i], sp.zod[i], sp.aoa[i], sp.zoa[i], *sp.phases[i], *sp.xpd_db[i],
               sp.doppler[i])


PSD_HEADER = ("subband", "offset_hz", "s_tx_w_per_hz", "s_rx_w_per_hz", "gain_db")


def psd_rows(cfg: DropConfig, real: ChannelRealization, t: float = 0.0) -> Iterator[tuple]:
    tx_arr, rx_arr = cfg.tx_array.build(), cfg.rx_array.build()
    matrix = build_channel_matrix(real, tx_arr, rx_arr)
    tx_dir, rx_dir = strongest_directions(real)
    w_tx = tx_arr.steer(*tx_dir, matrix.wavelength)
    w_rx = rx_arr.steer(*rx_dir, matrix.wavelength)
    tx = SpectralDensity.flat(10.0 ** ((cfg.tx_power_dbm - 30.0) / 10.0), cfg.rf_bandwidth_hz,
                              cfg.n_subbands)
    rx = rx_psd(tx, matrix, w_tx, w_rx, t)
    with np.errstate(divide="ignore"):
        gain = 10.0 * np.log10(rx.values / tx.values)
    for i in range(len(tx.values)):
        yield (i, tx.frequencies[i], tx.values[i], rx.values[i], gain[i])
