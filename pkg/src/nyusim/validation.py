"""Goodness-of-fit checks of the small-scale draws against their parameterization."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .core import Scenario, ScenarioParams
from .small_scale import (TWO_PI, ChannelRealization, SmallScaleConfig, _intra_uses_bandwidth_law,
                          _round_count, cluster_power_profile, draw_angle_offsets,
                          draw_cluster_gaps, draw_intra_delays_raw, draw_intra_exponent,
                          draw_lobe_azimuths, draw_lobe_elevations, gen_num_lobes,
                          gen_num_subpaths, gen_num_time_clusters, gen_subpath_phases,
                          lobe_elevation_law)

MIN_SAMPLES = 10_000
MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class FitResult:
    step: int
    quantity: str
    test: str
    n: int
    statistic: float
    p_value: float
    sample_mean: float
    expected_mean: float
    insufficient: bool = False

    def passed(self, alpha: float = 0.01) -> bool:
        return self.p_value > alpha


# ---------------------------------------------------------------------------
# Theoretical laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteLaw:
    """Integer law on {1, 2, ...} given by its pmf."""

    pmf: object            # callable k -> probability
    mean: float
    upper: int | None = None

    def expected_counts(self, observed: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Observed/expected category counts with the upper tail pooled to keep E >= 5."""
        top = self.upper if self.upper is not None else int(max(observed.max(), 1))
        ks = np.arange(1, top + 1)
        probs = np.array([self.pmf(k) for k in ks], dtype=float)
        obs = np.array([(observed == k).sum() for k in ks], dtype=float)
        if self.upper is None:
            probs[-1] += max(1.0 - probs.sum(), 0.0)
            obs[-1] += (observed > top).sum()
        exp = probs * n
        # pool from the tail until every cell has enough expected mass
        o, e = list(obs), list(exp)
        while len(e) > 1 and e[-1] < MIN_EXPECTED:
            tail_e, tail_o = e.pop(), o.pop()
            e[-1] += tail_e
            o[-1] += tail_o
        return np.array(o), np.array(e)


def _du_law(upper: float) -> DiscreteLaw:
    u = _round_count(upper)
    return DiscreteLaw(lambda k: 1.0 / u if 1 <= k <= u else 0.0, (1 + u) / 2.0, u)


def _poisson_plus_one(lam: float) -> DiscreteLaw:
    return DiscreteLaw(lambda k: float(stats.poisson.pmf(k - 1, lam)), lam + 1.0)


def _geometric(mean: float) -> DiscreteLaw:
    p = 1.0 / max(mean, 1.0)
    return DiscreteLaw(lambda k: float(stats.geom.pmf(k, p)), 1.0 / p)


def _mixture(beta: float, mean: float) -> DiscreteLaw:
    g = _geometric(mean)
    return DiscreteLaw(lambda k: beta * g.pmf(k) + (1.0 - beta) * (k == 1),
                       beta * g.mean + (1.0 - beta))


def cluster_count_law(params: ScenarioParams) -> DiscreteLaw:
    if params.scenario.is_outdoor:
        return _du_law(params.N_c)
    return _poisson_plus_one(params.lambda_c)


def subpath_count_law(params: ScenarioParams) -> DiscreteLaw:
    if params.scenario is Scenario.RMa:
        return _du_law(params.M_s)
    if params.scenario in (Scenario.UMi, Scenario.UMa):
        return _geometric(params.mu_s) if params.high_band else _du_law(params.M_s)
    return _mixture(params.beta_s, params.mu_s)


def lobe_count_law(params: ScenarioParams, kind: str) -> DiscreteLaw:
    lam = params.lambda_AOD if kind == "AOD" else params.lambda_AOA
    if params.scenario is Scenario.InH:
        return _du_law(lam)
    return _poisson_plus_one(lam)


def cluster_gap_law(params: ScenarioParams):
    if params.scenario is Scenario.InF:
        return stats.gamma(params.alpha_tau, scale=params.beta_tau)
    return stats.expon(scale=params.mu_tau)


def intra_delay_law(params: ScenarioParams):
    """Law of the raw draw behind the intra-cluster delays."""
    if _intra_uses_bandwidth_law(params):
        return stats.uniform(0.0, params.X_max)
    if params.scenario is Scenario.InF:
        return stats.gamma(params.alpha_rho, scale=params.beta_rho)
    return stats.expon(scale=params.mu_rho)


# ---------------------------------------------------------------------------
# Tests
# ---------------------------------------------------------------------------

def _degenerate(step, quantity, x, value) -> FitResult:
    ok = bool(np.allclose(x, value))
    return FitResult(step, quantity, "degenerate", len(x), 0.0 if ok else math.inf,
                     1.0 if ok else 0.0, float(np.mean(x)), float(value), len(x) < MIN_SAMPLES)


def chi_square_fit(step: int, quantity: str, x, law: DiscreteLaw) -> FitResult:
    x = np.asarray(x, dtype=int)
    if law.upper == 1:
        return _degenerate(step, quantity, x, 1)
    if np.any(x < 1) or (law.upper is not None and np.any(x > law.upper)):
        return FitResult(step, quantity, "chi-square", len(x), math.inf, 0.0,
                         float(x.mean()), law.mean, len(x) < MIN_SAMPLES)
    obs, exp = law.expected_counts(x, len(x))
    if len(obs) < 2:
        return _degenerate(step, quantity, x, 1)
    exp = exp * obs.sum() / exp.sum()
    stat, p = stats.chisquare(obs, exp)
    return FitResult(step, quantity, "chi-square", len(x), float(stat), float(p),
                     float(x.mean()), law.mean, len(x) < MIN_SAMPLES)


def ks_fit(step: int, quantity: str, x, dist) -> FitResult:
    x = np.asarray(x, dtype=float)
    stat, p = stats.kstest(x, dist.cdf)
    return FitResult(step, quantity, "KS", len(x), float(stat), float(p), float(x.mean()),
                     float(dist.mean()), len(x) < MIN_SAMPLES)


def normal_fit(step: int, quantity: str, x, mu: float, sigma: float) -> FitResult:
    if sigma == 0:
        return _degenerate(step, quantity, np.asarray(x, dtype=float), mu)
    return ks_fit(step, quantity, x, stats.norm(mu, sigma))


# ---------------------------------------------------------------------------
# Sample collection
# ---------------------------------------------------------------------------

def draw_step_samples(params: ScenarioParams, n: int, rng: np.random.Generator,
                      config: SmallScaleConfig | None = None) -> dict[str, np.ndarray]:
    """Draw ``n`` samples of every random quantity through the generator's samplers."""
    out: dict[str, np.ndarray] = {}
    out["n_clusters"] = np.asarray(gen_num_time_clusters(params, rng, size=n))
    out["n_subpaths"] = np.asarray(gen_num_subpaths(params, rng, size=n))
    out["cluster_gaps"] = np.asarray(draw_cluster_gaps(params, rng, size=n, config=config))
    if _intra_uses_bandwidth_law(params):
        out["intra_exponent"] = np.asarray(draw_intra_exponent(params, rng, size=n))
    else:
        out["intra_delay_raw"] = np.asarray(draw_intra_delays_raw(params, rng, size=n))
    out["cluster_shadow_db"] = 10.0 * np.log10(
        cluster_power_profile(np.zeros(n), params.Gamma, params.sigma_Z, rng))
    out["subpath_shadow_db"] = 10.0 * np.log10(
        cluster_power_profile(np.zeros(n), params.gamma, params.sigma_U, rng))
    out["phases"] = gen_subpath_phases(rng, n)
    for kind in ("AOD", "AOA"):
        counts = np.asarray(gen_num_lobes(params, kind, rng, size=n))
        out[f"n_{kind.lower()}_lobes"] = counts
        # lobe means for the first ~n lobes only
        k = int(np.searchsorted(np.cumsum(counts), n)) + 1
        az, sector = draw_lobe_azimuths(counts[:k], rng)
        width = np.repeat(360.0 / counts[:k], counts[:k])
        out[f"{kind.lower()}_lobe_sector_position"] = ((az - sector * width) / width)[:n]
        out[f"{kind.lower()}_lobe_elevation"] = draw_lobe_elevations(params, kind, rng, n)
    out["offset_aod"] = draw_angle_offsets(params.sigma_phi_AOD, n, rng)
    out["offset_zod"] = draw_angle_offsets(params.sigma_theta_ZOD, n, rng)
    out["offset_aoa"] = draw_angle_offsets(params.sigma_phi_AOA, n, rng)
    out["offset_zoa"] = draw_angle_offsets(params.sigma_theta_ZOA, n, rng)
    return out


def samples_from_realizations(realizations: Sequence[ChannelRealization]) -> dict[str, np.ndarray]:
    """Quantities recoverable from finished realizations (counts and phases)."""
    if not realizations:
        raise ValueError("no realizations given")
    return {
        "n_clusters": np.array([r.n_clusters for r in realizations]),
        "n_subpaths": np.concatenate([[c.n_subpaths for c in r.clusters] for r in realizations]),
        "cluster_gaps": np.concatenate([[c.gap for c in r.clusters] for r in realizations]),
        "phases": np.concatenate([r.subpaths.phases for r in realizations]),
        "n_aod_lobes": np.array([len(r.aod_lobes) for r in realizations]),
        "n_aoa_lobes": np.array([len(r.aoa_lobes) for r in realizations]),
    }


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

def distribution_report(samples: Mapping[str, np.ndarray], params: ScenarioParams) -> list[FitResult]:
    """Run the matching goodness-of-fit test for every quantity present in ``samples``.

    Results with fewer than 10^4 samples carry ``insufficient=True`` and a
    warning is emitted.
    """
    res: list[FitResult] = []
    s = samples
    if "n_clusters" in s:
        res.append(chi_square_fit(1, "n_clusters", s["n_clusters"], cluster_count_law(params)))
    if "n_subpaths" in s:
        res.append(chi_square_fit(2, "n_subpaths", s["n_subpaths"], subpath_count_law(params)))
    if "cluster_gaps" in s:
        res.append(ks_fit(3, "cluster_gaps", s["cluster_gaps"], cluster_gap_law(params)))
    if "intra_exponent" in s:
        res.append(ks_fit(4, "intra_exponent", s["intra_exponent"], intra_delay_law(params)))
    if "intra_delay_raw" in s:
        res.append(ks_fit(4, "intra_delay_raw", s["intra_delay_raw"], intra_delay_law(params)))
    if "cluster_shadow_db" in s:
        res.append(normal_fit(5, "cluster_shadow_db", s["cluster_shadow_db"], 0.0, params.sigma_Z))
    if "subpath_shadow_db" in s:
        res.append(normal_fit(6, "subpath_shadow_db", s["subpath_shadow_db"], 0.0, params.sigma_U))
    if "phases" in s:
        ph = np.asarray(s["phases"])
        for j, name in enumerate(("tt", "tp", "pt", "pp")[: ph.shape[1] if ph.ndim == 2 else 1]):
            col = ph[:, j] if ph.ndim == 2 else ph
            res.append(ks_fit(7, f"phase_{name}", col, stats.uniform(0.0, TWO_PI)))
    for kind in ("aod", "aoa"):
        if f"n_{kind}_lobes" in s:
            res.append(chi_square_fit(8, f"n_{kind}_lobes", s[f"n_{kind}_lobes"],
                                      lobe_count_law(params, kind.upper())))
        if f"{kind}_lobe_sector_position" in s:
            res.append(ks_fit(9, f"{kind}_lobe_sector_position",
                              s[f"{kind}_lobe_sector_position"], stats.uniform(0.0, 1.0)))
        if f"{kind}_lobe_elevation" in s:
            mu, sigma = lobe_elevation_law(params, kind.upper())
            res.append(normal_fit(10, f"{kind}_lobe_elevation", s[f"{kind}_lobe_elevation"],
                                  mu, sigma))
    sigmas = {"offset_aod": params.sigma_phi_AOD, "offset_zod": params.sigma_theta_ZOD,
              "offset_aoa": params.sigma_phi_AOA, "offset_zoa": params.sigma_theta_ZOA}
    for key, sigma in sigmas.items():
        if key in s:
            res.append(normal_fit(11, key, s[key], 0.0, sigma))
    short = [r.quantity for r in res if r.insufficient]
    if short:
        warnings.warn(f"fewer than {MIN_SAMPLES} samples for: {', '.join(short)}", stacklevel=2)
    return res


REPORT_HEADER = ("scenario", "condition", "frequency_ghz", "step", "quantity", "test", "n",
                 "statistic", "p_value", "sample_mean", "expected_mean", "insufficient", "pass")


def report_rows(results: Iterable[FitResult], params: ScenarioParams, alpha: float = 0.01):
    for r in results:
        yield (params.scenario.value, params.condition.value, params.frequency, r.step,
               r.quantity, r.test, r.n, r.statistic, r.p_value, r.sample_mean,
               r.expected_mean, r.insufficient, r.passed(alpha))
