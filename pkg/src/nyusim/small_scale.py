"""Time-cluster / spatial-lobe (TCSL) small-scale channel generation.

Angles are generated in the NYU convention (azimuth from the +y axis,
clockwise; elevation from the horizon) and converted to the global
coordinate system (azimuth from +x counterclockwise, zenith from +z) as the
last step. Delays are in ns and powers in mW throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from .core import (SPEED_OF_LIGHT, CarrierConfig, ChannelCondition, LinkGeometry, Scenario,
                   ScenarioParams, load_models, wrap_degrees)

TWO_PI = 2.0 * math.pi


def _round_count(x: float) -> int:
    """Integer bound for count distributions whose parameter was interpolated."""
    return max(1, int(math.floor(x + 0.5)))


# ---------------------------------------------------------------------------
# Containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeCluster:
    index: int
    delay: float          # excess delay tau_n [ns]
    power: float          # P_n [mW]
    n_subpaths: int
    gap: float = 0.0      # the Delta-tau draw that placed this cluster [ns]


@dataclass(frozen=True)
class SpatialLobe:
    kind: str             # "AOD" or "AOA"
    index: int            # 1-based
    azimuth: float        # mean lobe azimuth, NYU convention [deg]
    elevation: float      # mean lobe elevation [deg]
    n_lobes: int = 1

    @property
    def sector(self) -> tuple[float, float]:
        width = 360.0 / self.n_lobes
        return (self.index - 1) * width, self.index * width


@dataclass
class Subpaths:
    """Column-oriented set of multipath components.

    ``phases`` has columns (theta-theta, theta-phi, phi-theta, phi-phi) and
    ``xpd_db`` columns (theta-phi, phi-theta, phi-phi). NYU angles are kept
    alongside the GCS angles filled in by :func:`to_gcs`.
    """

    cluster: np.ndarray
    intra_index: np.ndarray
    intra_delay: np.ndarray
    delay: np.ndarray
    power: np.ndarray
    phases: np.ndarray
    azimuth_dep: np.ndarray
    elevation_dep: np.ndarray
    azimuth_arr: np.ndarray
    elevation_arr: np.ndarray
    aod_lobe: np.ndarray
    aoa_lobe: np.ndarray
    xpd_db: np.ndarray = None
    aod: np.ndarray = None
    zod: np.ndarray = None
    aoa: np.ndarray = None
    zoa: np.ndarray = None
    doppler: np.ndarray = None

    def __len__(self) -> int:
        return len(self.delay)

    def take(self, index) -> "Subpaths":
        return Subpaths(**{f.name: (None if getattr(self, f.name) is None
                                    else getattr(self, f.name)[index])
                           for f in fields(self)})

    def copy(self) -> "Subpaths":
        return Subpaths(**{f.name: (None if getattr(self, f.name) is None
                                    else getattr(self, f.name).copy())
                           for f in fields(self)})

    @property
    def amplitude(self) -> np.ndarray:
        return np.sqrt(self.power)

    @property
    def power_dbm(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.power)

    @property
    def xpd_linear(self) -> np.ndarray:
        return 10.0 ** (self.xpd_db / 10.0)

    def total_power(self) -> float:
        return float(np.sum(self.power))


@dataclass
class ChannelRealization:
    scenario: Scenario
    condition: ChannelCondition
    carrier: CarrierConfig
    geometry: LinkGeometry
    params: ScenarioParams
    tx_power_dbm: float
    path_loss_db: float
    rx_power_mw: float
    clusters: list[TimeCluster]
    aod_lobes: list[SpatialLobe]
    aoa_lobes: list[SpatialLobe]
    subpaths: Subpaths                  # all generated MPCs before merging
    resolvable_subpaths: Subpaths       # after merging, alignment, pruning
    dynamic_range_db: float
    intra_exponents: np.ndarray = field(default_factory=lambda: np.zeros(0))
    drop_id: int = 0

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)


@dataclass
class SmallScaleConfig:
    tx_power_dbm: float = 30.0
    baseband_bandwidth: float | None = None     # Hz; None -> rf_bandwidth / 2
    max_measurable_pl_db: float = 180.0
    min_dynamic_range_db: float = 30.0
    elevation_limit: float = 60.0
    xpd_mean_db: dict = None
    xpd_std_db: dict = None
    inh_cluster_delay_family: str = "exponential"   # or "lognormal"
    inh_lognormal_sigma: float | None = None

    def __post_init__(self):
        if self.xpd_mean_db is None or self.xpd_std_db is None:
            xpd = load_models()["xpd_db"]
            if self.xpd_mean_db is None:
                self.xpd_mean_db = {c: xpd[c]["mean"] for c in ("LOS", "NLOS")}
            if self.xpd_std_db is None:
                self.xpd_std_db = {c: xpd[c]["std"] for c in ("LOS", "NLOS")}
        if self.inh_cluster_delay_family not in ("exponential", "lognormal"):
            raise ValueError("inh_cluster_delay_family must be 'exponential' or 'lognormal'")

    def bb_bandwidth(self, carrier: CarrierConfig) -> float:
        if self.baseband_bandwidth is not None:
            return self.baseband_bandwidth
        return carrier.rf_bandwidth / 2.0


# ---------------------------------------------------------------------------
# Table-driven draws (each accepts ``size`` so it can be sampled in bulk)
# ---------------------------------------------------------------------------

def discrete_uniform(upper: float, rng: np.random.Generator, size=None):
    """DU(1, upper) with the interpolated bound rounded to an integer."""
    return rng.integers(1, _round_count(upper) + 1, size=size)


def discrete_exponential(mean: float, rng: np.random.Generator, size=None):
    """Geometric law on {1, 2, ...} with the given mean (>= 1)."""
    p = 1.0 / max(mean, 1.0)
    return rng.geometric(p, size=size)


def gen_num_time_clusters(params: ScenarioParams, rng: np.random.Generator, size=None):
    if params.scenario.is_outdoor:
        return discrete_uniform(params.N_c, rng, size)
    return rng.poisson(params.lambda_c, size=size) + 1


def gen_num_subpaths(params: ScenarioParams, rng: np.random.Generator, size=None):
    """Number of subpaths in a time cluster."""
    scen = params.scenario
    if scen is Scenario.RMa:
        return discrete_uniform(params.M_s, rng, size)
    if scen in (Scenario.UMi, Scenario.UMa):
        if params.high_band:
            return discrete_exponential(params.mu_s, rng, size)
        return discrete_uniform(params.M_s, rng, size)
    # indoor: (1 - beta) * delta(1) + beta * DE(mu_s)
    use_de = rng.random(size=size) < params.beta_s
    de = discrete_exponential(params.mu_s, rng, size)
    return np.where(use_de, de, 1) if size is not None else int(de if use_de else 1)


def _intra_uses_bandwidth_law(params: ScenarioParams) -> bool:
    return params.scenario.is_outdoor and not params.high_band


def draw_intra_exponent(params: ScenarioParams, rng: np.random.Generator, size=None):
    """Per-cluster exponent X_n ~ U(0, X_max) of the bandwidth-limited delay law."""
    return rng.uniform(0.0, params.X_max, size=size)


def draw_intra_delays_raw(params: ScenarioParams, rng: np.random.Generator, size=None):
    """Unsorted, un-normalized intra-cluster delays for the stochastic laws [ns]."""
    if params.scenario is Scenario.InF:
        return rng.gamma(params.alpha_rho, params.beta_rho, size=size)
    return rng.exponential(params.mu_rho, size=size)


def gen_intra_cluster_delays(params: ScenarioParams, bb_bandwidth: float, n_subpaths: int,
                             rng: np.random.Generator, exponent: float | None = None) -> np.ndarray:
    """Sorted intra-cluster excess delays rho_1..rho_M [ns], with rho_1 = 0."""
    if n_subpaths < 1:
        raise ValueError("a cluster needs at least one subpath")
    if _intra_uses_bandwidth_law(params):
        if exponent is None:
            exponent = draw_intra_exponent(params, rng)
        step_ns = 1e9 / bb_bandwidth
        return (step_ns * np.arange(n_subpaths)) ** (1.0 + exponent)
    rho = np.sort(draw_intra_delays_raw(params, rng, size=n_subpaths))
    return rho - rho[0]


def draw_cluster_gaps(params: ScenarioParams, rng: np.random.Generator, size=None,
                      config: SmallScaleConfig | None = None):
    """Random part Delta-tau of the inter-cluster spacing [ns]."""
    if params.scenario is Scenario.InF:
        return rng.gamma(params.alpha_tau, params.beta_tau, size=size)
    if (params.scenario is Scenario.InH and config is not None
            and config.inh_cluster_delay_family == "lognormal"):
        sigma = config.inh_lognormal_sigma
        if sigma is None:
            raise ValueError("lognormal InH cluster delays need inh_lognormal_sigma")
        return rng.lognormal(math.log(params.mu_tau) - sigma * sigma / 2.0, sigma, size=size)
    return rng.exponential(params.mu_tau, size=size)


def gen_cluster_delays(params: ScenarioParams, intra_delays: Sequence[np.ndarray],
                       rng: np.random.Generator, config: SmallScaleConfig | None = None):
    """Cluster excess delays via tau_n = tau_{n-1} + rho_last,n-1 + gap_n + MTI.

    Returns ``(tau, gaps)``.
    """
    gaps = np.atleast_1d(draw_cluster_gaps(params, rng, size=len(intra_delays), config=config))
    tau = np.empty(len(intra_delays))
    prev_tau, prev_last = 0.0, 0.0
    for n, rho in enumerate(intra_delays):
        tau[n] = prev_tau + prev_last + gaps[n] + params.mti
        prev_tau, prev_last = tau[n], float(rho[-1])
    return tau, gaps


def cluster_power_profile(delays, decay: float, sigma_db: float, rng: np.random.Generator):
    """Unnormalized powers exp(-delay/decay) * 10^(Z/10), Z ~ N(0, sigma_db)."""
    delays = np.asarray(delays, dtype=float)
    z = rng.normal(0.0, sigma_db, size=delays.shape) if sigma_db > 0 else np.zeros(delays.shape)
    return np.exp(-delays / decay) * 10.0 ** (z / 10.0)


def gen_cluster_powers(params: ScenarioParams, tau, rx_power_mw: float,
                       rng: np.random.Generator) -> np.ndarray:
    if not rx_power_mw > 0:
        raise ValueError("received power must be positive")
    raw = cluster_power_profile(tau, params.Gamma, params.sigma_Z, rng)
    return raw / raw.sum() * rx_power_mw


def gen_subpath_powers(params: ScenarioParams, intra_delays: Sequence[np.ndarray],
                       cluster_powers, rng: np.random.Generator) -> list[np.ndarray]:
    out = []
    for rho, p_n in zip(intra_delays, cluster_powers):
        raw = cluster_power_profile(rho, params.gamma, params.sigma_U, rng)
        out.append(raw / raw.sum() * p_n)
    return out


def gen_subpath_phases(rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Uniform phases in [0, 2pi) for the four polarization pairs, shape (size, 4)."""
    return rng.uniform(0.0, TWO_PI, size=(size, 4))


def gen_num_lobes(params: ScenarioParams, kind: str, rng: np.random.Generator, size=None):
    lam = params.lambda_AOD if kind == "AOD" else params.lambda_AOA
    if params.scenario is Scenario.InH:
        return discrete_uniform(lam, rng, size)
    return rng.poisson(lam, size=size) + 1


def draw_lobe_azimuths(counts, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Mean azimuths for lobe sets of the given sizes, one uniform draw per sector.

    Returns the concatenated azimuths and the matching 0-based sector index.
    """
    counts = np.atleast_1d(np.asarray(counts, dtype=int))
    sector = np.concatenate([np.arange(c) for c in counts])
    width = np.repeat(360.0 / counts, counts)
    lo = width * sector
    return rng.uniform(lo, lo + width), sector


def lobe_elevation_law(params: ScenarioParams, kind: str) -> tuple[float, float]:
    return ((params.mu_ZOD, params.sigma_ZOD) if kind == "AOD"
            else (params.mu_ZOA, params.sigma_ZOA))


def draw_lobe_elevations(params: ScenarioParams, kind: str, rng: np.random.Generator,
                         size: int) -> np.ndarray:
    mu, sigma = lobe_elevation_law(params, kind)
    return rng.normal(mu, sigma, size=size) if sigma > 0 else np.full(size, float(mu))


def gen_spatial_lobes(params: ScenarioParams, kind: str, rng: np.random.Generator) -> list[SpatialLobe]:
    if kind not in ("AOD", "AOA"):
        raise ValueError("lobe kind must be 'AOD' or 'AOA'")
    n = int(gen_num_lobes(params, kind, rng))
    azimuth, _ = draw_lobe_azimuths([n], rng)
    elevation = draw_lobe_elevations(params, kind, rng, n)
    return [SpatialLobe(kind, i + 1, float(azimuth[i]), float(elevation[i]), n) for i in range(n)]


def map_subpaths_to_lobes(n_subpaths: int, n_lobes: int, rng: np.random.Generator) -> np.ndarray:
    """1-based lobe id per subpath, uniform over the lobes."""
    return rng.integers(1, n_lobes + 1, size=n_subpaths)


def draw_angle_offsets(sigma: float, n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(0.0, sigma, size=n) if sigma > 0 else np.zeros(n)


def assign_subpath_angles(aod_lobes: list[SpatialLobe], aoa_lobes: list[SpatialLobe],
                          n_subpaths: int, params: ScenarioParams, rng: np.random.Generator,
                          elevation_limit: float = 60.0) -> dict[str, np.ndarray]:
    """Lobe mapping plus Gaussian angular offsets around the lobe means (NYU angles)."""
    aod_id = map_subpaths_to_lobes(n_subpaths, len(aod_lobes), rng)
    aoa_id = map_subpaths_to_lobes(n_subpaths, len(aoa_lobes), rng)
    dep_az = np.array([l.azimuth for l in aod_lobes])[aod_id - 1]
    dep_el = np.array([l.elevation for l in aod_lobes])[aod_id - 1]
    arr_az = np.array([l.azimuth for l in aoa_lobes])[aoa_id - 1]
    arr_el = np.array([l.elevation for l in aoa_lobes])[aoa_id - 1]
    dep_az = dep_az + draw_angle_offsets(params.sigma_phi_AOD, n_subpaths, rng)
    dep_el = dep_el + draw_angle_offsets(params.sigma_theta_ZOD, n_subpaths, rng)
    arr_az = arr_az + draw_angle_offsets(params.sigma_phi_AOA, n_subpaths, rng)
    arr_el = arr_el + draw_angle_offsets(params.sigma_theta_ZOA, n_subpaths, rng)
    lim = elevation_limit
    return {
        "aod_lobe": aod_id,
        "aoa_lobe": aoa_id,
        "azimuth_dep": wrap_degrees(dep_az),
        "elevation_dep": np.clip(dep_el, -lim, lim),
        "azimuth_arr": wrap_degrees(arr_az),
        "elevation_arr": np.clip(arr_el, -lim, lim),
    }


def absolute_propagation_times(geom: LinkGeometry, cluster_delays, intra_delays) -> list[np.ndarray]:
    """Absolute delay d3D/c + tau_n + rho_mn [ns] for every subpath, per cluster."""
    base = geom.d3D / SPEED_OF_LIGHT * 1e9
    return [base + t + np.asarray(rho) for t, rho in zip(cluster_delays, intra_delays)]


# ---------------------------------------------------------------------------
# Post-processing
# ---------------------------------------------------------------------------

def bandwidth_adjust(subpaths: Subpaths, rf_bandwidth: float) -> Subpaths:
    """Combine subpaths that the RF bandwidth cannot resolve.

    Subpaths falling in the same delay bin (width 1/bandwidth, anchored at
    the earliest delay) are summed as complex amplitudes. The merged delay
    is the power-weighted mean of the members; every other attribute is
    taken from the strongest member, except the co-polar phase which is the
    phase of the sum.
    """
    order = np.argsort(subpaths.delay, kind="stable")
    sp = subpaths.take(order)
    if len(sp) <= 1 or not math.isfinite(rf_bandwidth):
        return sp
    width_ns = 1e9 / rf_bandwidth
    bins = np.floor((sp.delay - sp.delay[0]) / width_ns).astype(np.int64)
    uniq, start, counts = np.unique(bins, return_index=True, return_counts=True)
    if np.all(counts == 1):
        return sp

    keep = []
    power = sp.power.copy()
    delay = sp.delay.copy()
    phases = sp.phases.copy()
    for s, c in zip(start, counts):
        if c == 1:
            keep.append(s)
            continue
        members = np.arange(s, s + c)
        field_sum = np.sum(np.sqrt(sp.power[members]) * np.exp(1j * sp.phases[members, 0]))
        strongest = members[np.argmax(sp.power[members])]
        w = sp.power[members]
        delay[strongest] = np.sum(w * sp.delay[members]) / np.sum(w) if w.sum() > 0 else sp.delay[s]
        power[strongest] = abs(field_sum) ** 2
        phases[strongest, 0] = np.mod(np.angle(field_sum), TWO_PI)
        keep.append(strongest)
    merged = replace(sp, power=power, delay=delay, phases=phases).take(np.array(keep))
    return merged.take(np.argsort(merged.delay, kind="stable"))


def align_los(subpaths: Subpaths, geom: LinkGeometry, condition: ChannelCondition) -> Subpaths:
    """Point the earliest subpath along the geometric LOS and rotate the rest with it."""
    if condition is not ChannelCondition.LOS or len(subpaths) == 0:
        return subpaths
    first = int(np.argmin(subpaths.delay))
    bearing = geom.azimuth_bearing_tx_to_rx
    elevation = geom.elevation_tx_to_rx
    d_az_dep = bearing - subpaths.azimuth_dep[first]
    d_el_dep = elevation - subpaths.elevation_dep[first]
    d_az_arr = (bearing + 180.0) - subpaths.azimuth_arr[first]
    d_el_arr = -elevation - subpaths.elevation_arr[first]

    az_dep = wrap_degrees(subpaths.azimuth_dep + d_az_dep)
    el_dep = np.clip(subpaths.elevation_dep + d_el_dep, -90.0, 90.0)
    az_arr = wrap_degrees(subpaths.azimuth_arr + d_az_arr)
    el_arr = np.clip(subpaths.elevation_arr + d_el_arr, -90.0, 90.0)
    # exact geometric values for the LOS path, free of rounding in the offsets
    az_dep[first] = wrap_degrees(bearing)
    el_dep[first] = elevation
    az_arr[first] = wrap_degrees(bearing + 180.0)
    el_arr[first] = -elevation
    return replace(subpaths, azimuth_dep=az_dep, elevation_dep=el_dep,
                   azimuth_arr=az_arr, elevation_arr=el_arr)


def dynamic_range_threshold(mean_path_loss_db: float, max_measurable_pl_db: float = 180.0,
                            min_span_db: float = 30.0) -> float:
    return max(max_measurable_pl_db - mean_path_loss_db, min_span_db)


def prune_dynamic_range(subpaths: Subpaths, threshold_db: float, keep: int | None = None) -> Subpaths:
    """Drop subpaths weaker than (strongest - threshold_db); ``keep`` is always retained."""
    if len(subpaths) == 0:
        raise ValueError("cannot prune an empty subpath set")
    floor = subpaths.power.max() * 10.0 ** (-threshold_db / 10.0)
    mask = subpaths.power >= floor
    mask[np.argmax(subpaths.power)] = True
    if keep is not None:
        mask[keep] = True
    return subpaths.take(np.flatnonzero(mask))


def gen_xpd(n_subpaths: int, mean_db: float, std_db: float, rng: np.random.Generator) -> np.ndarray:
    """Three XPD draws in dB per subpath (theta-phi, phi-theta, phi-phi)."""
    if std_db > 0:
        return rng.normal(mean_db, std_db, size=(n_subpaths, 3))
    return np.full((n_subpaths, 3), float(mean_db))


def nyu_to_gcs(azimuth, elevation):
    """NYU (azimuth from +y clockwise, elevation from horizon) -> GCS (phi, theta)."""
    phi = wrap_degrees(90.0 - np.asarray(azimuth, dtype=float))
    theta = 90.0 - np.asarray(elevation, dtype=float)
    return phi, (float(theta) if np.ndim(theta) == 0 else theta)


def gcs_to_nyu(phi, theta):
    azimuth = wrap_degrees(90.0 - np.asarray(phi, dtype=float))
    elevation = 90.0 - np.asarray(theta, dtype=float)
    return azimuth, (float(elevation) if np.ndim(elevation) == 0 else elevation)


def unit_vector(theta_deg, phi_deg) -> np.ndarray:
    """GCS unit vectors for zenith/azimuth arrays, shape (..., 3)."""
    th = np.radians(theta_deg)
    ph = np.radians(phi_deg)
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)


def to_gcs(subpaths: Subpaths) -> Subpaths:
    aod, zod = nyu_to_gcs(subpaths.azimuth_dep, subpaths.elevation_dep)
    aoa, zoa = nyu_to_gcs(subpaths.azimuth_arr, subpaths.elevation_arr)
    return replace(subpaths, aod=np.atleast_1d(aod), zod=np.atleast_1d(zod),
                   aoa=np.atleast_1d(aoa), zoa=np.atleast_1d(zoa))


def doppler_shifts(subpaths: Subpaths, geom: LinkGeometry, wavelength: float) -> np.ndarray:
    """Receiver-motion Doppler per subpath: (v . r_arrival) / lambda [Hz]."""
    r_rx = unit_vector(subpaths.zoa, subpaths.aoa)
    return r_rx @ np.asarray(geom.ue_velocity) / wavelength


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------

def generate_realization(scenario: Scenario, condition: ChannelCondition, geom: LinkGeometry,
                         carrier: CarrierConfig, params: ScenarioParams, rng: np.random.Generator,
                         *, path_loss_db: float, mean_path_loss_db: float | None = None,
                         config: SmallScaleConfig | None = None, drop_id: int = 0) -> ChannelRealization:
    """Run the TCSL procedure for one link given its condition and path loss."""
    config = SmallScaleConfig() if config is None else config
    if params.scenario is not Scenario(scenario) or params.condition is not ChannelCondition(condition):
        raise ValueError("params do not match the requested scenario/condition")
    condition = ChannelCondition(condition)
    if mean_path_loss_db is None:
        mean_path_loss_db = path_loss_db
    rx_power_mw = 10.0 ** ((config.tx_power_dbm - path_loss_db) / 10.0)

    n_clusters = int(gen_num_time_clusters(params, rng))
    aod_lobes = gen_spatial_lobes(params, "AOD", rng)
    aoa_lobes = gen_spatial_lobes(params, "AOA", rng)
    n_sub = [int(gen_num_subpaths(params, rng)) for _ in range(n_clusters)]

    bb = config.bb_bandwidth(carrier)
    exponents = np.zeros(n_clusters)
    intra = []
    for n in range(n_clusters):
        if _intra_uses_bandwidth_law(params):
            exponents[n] = draw_intra_exponent(params, rng)
        intra.append(gen_intra_cluster_delays(params, bb, n_sub[n], rng, exponent=exponents[n]))

    total = sum(n_sub)
    phases = gen_subpath_phases(rng, total)
    tau, gaps = gen_cluster_delays(params, intra, rng, config)
    p_cluster = gen_cluster_powers(params, tau, rx_power_mw, rng)
    p_sub = gen_subpath_powers(params, intra, p_cluster, rng)
    absolute = absolute_propagation_times(geom, tau, intra)
    angles = assign_subpath_angles(aod_lobes, aoa_lobes, total, params, rng,
                                   config.elevation_limit)

    clusters = [TimeCluster(n + 1, float(tau[n]), float(p_cluster[n]), n_sub[n], float(gaps[n]))
                for n in range(n_clusters)]
    subpaths = Subpaths(
        cluster=np.repeat(np.arange(1, n_clusters + 1), n_sub),
        intra_index=np.concatenate([np.arange(1, m + 1) for m in n_sub]),
        intra_delay=np.concatenate(intra),
        delay=np.concatenate(absolute),
        power=np.concatenate(p_sub),
        phases=phases,
        **angles,
    )

    # bandwidth merging then LOS alignment
    resolvable = bandwidth_adjust(subpaths, carrier.rf_bandwidth)
    resolvable = align_los(resolvable, geom, condition)
    # dynamic range; the aligned LOS path is never discarded
    dyn = dynamic_range_threshold(mean_path_loss_db, config.max_measurable_pl_db,
                                  config.min_dynamic_range_db)
    keep = int(np.argmin(resolvable.delay)) if condition is ChannelCondition.LOS else None
    resolvable = prune_dynamic_range(resolvable, dyn, keep=keep)
    # XPD, then conversion to GCS angles
    resolvable = replace(resolvable, xpd_db=gen_xpd(len(resolvable),
                                                    config.xpd_mean_db[condition.value],
                                                    config.xpd_std_db[condition.value], rng))
    resolvable = to_gcs(resolvable)
    resolvable = replace(resolvable, doppler=doppler_shifts(resolvable, geom, carrier.wavelength))

    return ChannelRealization(
        scenario=Scenario(scenario), condition=condition, carrier=carrier, geometry=geom,
        params=params, tx_power_dbm=config.tx_power_dbm, path_loss_db=float(path_loss_db),
        rx_power_mw=rx_power_mw, clusters=clusters, aod_lobes=aod_lobes, aoa_lobes=aoa_lobes,
        subpaths=subpaths, resolvable_subpaths=resolvable, dynamic_range_db=dyn,
        intra_exponents=exponents, drop_id=drop_id,
    )


# ---------------------------------------------------------------------------
# Summary statistics
# ---------------------------------------------------------------------------

def rms_delay_spread(delays, powers) -> float:
    w = np.asarray(powers, dtype=float)
    if w.sum() <= 0:
        return 0.0
    d = np.asarray(delays, dtype=float)
    mean = np.sum(w * d) / w.sum()
    return float(math.sqrt(max(np.sum(w * (d - mean) ** 2) / w.sum(), 0.0)))


def rms_angular_spread(angles_deg, powers) -> float:
    """Circular RMS angular spread, sqrt(-2 ln |R|) in degrees."""
    w = np.asarray(powers, dtype=float)
    if w.sum() <= 0:
        return 0.0
    r = abs(np.sum(w * np.exp(1j * np.radians(angles_deg))) / w.sum())
    return float(np.degrees(math.sqrt(max(-2.0 * math.log(max(r, 1e-300)), 0.0))))
