import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from nyusim.core import link_geometry, params_for
from nyusim.large_scale import (AtmosphereTable, AttenuationConfig, O2IMode, PathLossBreakdown,
                                ShadowingState, atmospheric_attenuation, ci_path_loss,
                                cih_path_loss, cih_slope, fspl_1m, foliage_loss, o2i_loss,
                                o2i_mean, shadowing, total_path_loss)

C = 299_792_458.0


def fspl_oracle(f_ghz):
    # 20 log10(4 pi / c) + 20 log10(f_Hz), written the long way round
    return 20 * math.log10(4 * math.pi / C) + 20 * math.log10(f_ghz * 1e9)


@pytest.mark.parametrize("f,expected", [(1.0, 32.4478), (28.0, 61.3910), (142.0, 75.4928)])
def test_fspl_values(f, expected):
    assert fspl_1m(f) == pytest.approx(expected, abs=1e-3)
    assert fspl_1m(f) == pytest.approx(fspl_oracle(f), abs=1e-10)


def test_ci_vanishing_distance_term_at_one_meter():
    p = params_for("UMi", "LOS", 28)
    assert ci_path_loss(p, 1.0, 28) == pytest.approx(fspl_oracle(28), abs=1e-12)


def test_ci_umi_los_142_at_100m():
    p = params_for("UMi", "LOS", 142)
    assert ci_path_loss(p, 100.0, 142) == pytest.approx(fspl_oracle(142) + 40.0, abs=1e-9)


def test_ci_inh_nlos_140():
    p = params_for("InH", "NLOS", 140)
    assert ci_path_loss(p, 10.0, 140) == pytest.approx(fspl_oracle(140) + 27.0, abs=1e-9)


def test_ci_rejects_short_links_and_rma():
    with pytest.raises(ValueError):
        ci_path_loss(params_for("UMi", "LOS", 28), 0.5, 28)
    with pytest.raises(ValueError):
        ci_path_loss(params_for("RMa", "LOS", 28), 10.0, 28)


def test_cih_height_terms():
    assert cih_path_loss(100.0, 28, "LOS", 35) == pytest.approx(fspl_oracle(28) + 46.2, abs=1e-9)
    assert cih_path_loss(10.0, 28, "NLOS", 35) == pytest.approx(fspl_oracle(28) + 30.7, abs=1e-9)
    assert cih_path_loss(100.0, 28, "LOS", 70) == pytest.approx(
        fspl_oracle(28) + 23.1 * 0.97 * 2, abs=1e-9)


def test_cih_rejects_bad_height():
    with pytest.raises(ValueError):
        cih_slope("LOS", 0.0)


def test_o2i_none_is_zero():
    assert o2i_loss("None", 60.0, np.random.default_rng(0)) == 0.0


def test_o2i_low_below_high_in_mean():
    for f in np.linspace(0.5, 150, 60):
        assert o2i_mean("LowLoss", f) <= o2i_mean("HighLoss", f)


def test_o2i_low_loss_mean_at_28():
    rng = np.random.default_rng(1)
    draws = o2i_loss(O2IMode.LOW_LOSS, 28.0, rng, size=100_000)
    # floor at 0 dB only matters far below the mean here
    assert draws.mean() == pytest.approx(10 * math.log10(5 + 0.03 * 28 ** 2), abs=0.1)
    assert draws.min() >= 0.0


@pytest.mark.parametrize("rate,depth,expected", [(0.0, 5.0, 0.0), (0.4, 10.0, 4.0), (1.0, 0.0, 0.0)])
def test_foliage(rate, depth, expected):
    cfg = AttenuationConfig(foliage_loss_per_meter=rate, foliage_depth=depth)
    assert foliage_loss(cfg) == pytest.approx(expected)


def test_foliage_rejects_negative():
    with pytest.raises(ValueError):
        AttenuationConfig(foliage_loss_per_meter=-1.0)


def test_atmosphere_linear_and_exact_at_knots():
    table = AtmosphereTable.load()
    assert atmospheric_attenuation(60.0, 0.0, table) == 0.0
    a = atmospheric_attenuation(73.0, 400.0, table)
    assert atmospheric_attenuation(73.0, 800.0, table) == pytest.approx(2 * a)
    f0, v0 = table.frequencies[5], table.db_per_km[5]
    assert atmospheric_attenuation(f0, 1000.0, table) == pytest.approx(v0, abs=1e-12)


def test_atmosphere_oxygen_peak_near_60ghz():
    table = AtmosphereTable.load()
    assert table.specific_attenuation(60.0) > 10 * table.specific_attenuation(28.0)


def test_atmosphere_table_validation():
    with pytest.raises(ValueError):
        AtmosphereTable([1.0, 1.0], [0.1, 0.2])
    with pytest.raises(ValueError):
        AtmosphereTable([1.0, 2.0], [0.1, -0.2])
    with pytest.raises(ValueError):
        AtmosphereTable([1.0, 2.0], [0.1, 0.2]).specific_attenuation(3.0)


def test_shadowing_repeat_position_returns_previous_value():
    p = params_for("UMi", "NLOS", 28)
    state = ShadowingState(p.shadowing_corr_distance)
    g = link_geometry((0, 0, 10), (50, 0, 1.5))
    rng = np.random.default_rng(3)
    first = shadowing(p, state, g, rng)
    assert shadowing(p, state, g, rng) == pytest.approx(first, abs=1e-15)


def test_shadowing_std_for_independent_links():
    p = params_for("UMa", "NLOS", 28)
    rng = np.random.default_rng(4)
    values = []
    for _ in range(20_000):
        state = ShadowingState(p.shadowing_corr_distance)
        values.append(shadowing(p, state, link_geometry((0, 0, 35), (80, 0, 1.5)), rng))
    assert np.std(values) == pytest.approx(p.chi_sigma, rel=0.02)


def test_shadowing_correlation_distance_required_positive():
    with pytest.raises(ValueError):
        ShadowingState(0.0)


def test_breakdown_sums_components():
    b = PathLossBreakdown(60.0, 30.0, 1.0, 2.0, 3.0, -4.0)
    assert b.total == pytest.approx(92.0)
    assert b.mean == pytest.approx(96.0)


def test_total_with_everything_off_equals_closed_form():
    g = link_geometry((0, 0, 10), (100, 0, 1.5))
    cfg = AttenuationConfig(shadowing_enabled=False)
    b = total_path_loss("UMi", "LOS", g, 142.0, cfg, np.random.default_rng(0))
    assert b.total == pytest.approx(fspl_oracle(142) + 40.0, abs=1e-9)
    assert b.atmospheric == b.o2i == b.foliage == b.shadowing == 0.0


def test_total_with_flat_atmosphere():
    g = link_geometry((0, 0, 0), (100, 0, 0))
    table = AtmosphereTable([0.5, 150.0], [1.0, 1.0])
    cfg = AttenuationConfig(atmospheric_enabled=True, atmosphere=table, shadowing_enabled=False)
    b = total_path_loss("UMi", "LOS", g, 142.0, cfg, np.random.default_rng(0))
    assert b.total == pytest.approx(fspl_oracle(142) + 40.0 + 0.1, abs=1e-9)


def test_rma_dispatch_uses_height_model(monkeypatch):
    import nyusim.large_scale as ls

    def boom(*args, **kwargs):
        raise AssertionError("CI model called for RMa")

    monkeypatch.setattr(ls, "ci_path_loss", boom)
    g = link_geometry((0, 0, 35), (100, 0, 1.5))
    b = ls.total_path_loss("RMa", "LOS", g, 28.0, AttenuationConfig(shadowing_enabled=False),
                           np.random.default_rng(0))
    assert b.distance_term == pytest.approx(46.2, abs=1e-9)


@given(d=st.floats(1, 5000), f=st.floats(0.5, 150))
def test_nonnegative_terms_and_additivity(d, f):
    g = link_geometry((0, 0, 10), (d, 0, 1.5))
    cfg = AttenuationConfig(o2i_mode="HighLoss", foliage_loss_per_meter=0.2, foliage_depth=5,
                            atmospheric_enabled=True)
    b = total_path_loss("UMa", "NLOS", g, f, cfg, np.random.default_rng(0))
    assert b.atmospheric >= 0 and b.o2i >= 0 and b.foliage >= 0
    assert_allclose(b.total, b.fspl_1m + b.distance_term + b.atmospheric + b.o2i + b.foliage
                    + b.shadowing)
