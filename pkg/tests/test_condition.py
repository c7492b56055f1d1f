import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nyusim.condition import (ConditionCache, InFClutter, LosModelParams, draw_condition,
                              inf_los_probability, los_probability, uma_height_correction)
from nyusim.core import ChannelCondition, link_geometry


def umi_oracle(d):
    return (min(22 / d, 1) * (1 - math.exp(-d / 100)) + math.exp(-d / 100)) ** 2


@pytest.mark.parametrize("d", [1, 10, 22, 50, 100, 500])
def test_umi_matches_hand_formula(d):
    assert los_probability("UMi", d) == pytest.approx(umi_oracle(d), abs=1e-12)


def test_umi_is_one_up_to_d1():
    assert los_probability("UMi", 22.0) == pytest.approx(1.0, abs=1e-15)
    assert los_probability("UMi", 5.0) == 1.0


def test_uma_ground_ue_has_no_correction():
    d = 100.0
    base = 20 / d * (1 - math.exp(-d / 160)) + math.exp(-d / 160)
    assert los_probability("UMa", d) == pytest.approx(base ** 2, abs=1e-12)


def test_uma_height_correction_oracle():
    params = LosModelParams.from_models()
    d, h = 100.0, 18.0
    c = ((h - 13) / 10) ** 1.5 * 1.25 * (d / 100) ** 3 * math.exp(-d / 150)
    assert uma_height_correction(d, h, params) == pytest.approx(c, rel=1e-12)
    base = 20 / d * (1 - math.exp(-d / 160)) + math.exp(-d / 160)
    g = link_geometry((0, 0, 25), (d, 0, h))
    assert los_probability("UMa", g) == pytest.approx(min((base * (1 + c)) ** 2, 1.0), abs=1e-12)


def test_uma_correction_zero_below_13m_and_short_range():
    params = LosModelParams.from_models()
    assert uma_height_correction(100.0, 13.0, params) == 0.0
    assert uma_height_correction(18.0, 20.0, params) == 0.0


def test_uma_rejects_tall_ue():
    with pytest.raises(ValueError):
        los_probability("UMa", link_geometry((0, 0, 25), (50, 0, 30)))


def test_rma_3gpp_shape():
    assert los_probability("RMa", 10.0) == 1.0
    assert los_probability("RMa", 1010.0) == pytest.approx(math.exp(-1.0), abs=1e-12)


def test_inh_piecewise():
    assert los_probability("InH", 1.0) == 1.0
    assert los_probability("InH", 5.0) == pytest.approx(math.exp(-(5 - 1.2) / 4.7), abs=1e-12)
    assert los_probability("InH", 50.0) == pytest.approx(0.32 * math.exp(-(50 - 6.5) / 32.6),
                                                         abs=1e-12)


def test_inf_average_of_four_subscenarios():
    d = 20.0
    k_sl = -10 / math.log(1 - 0.2)
    k_dl = -2 / math.log(1 - 0.6)
    k_sh = k_sl * (8 - 1.5) / (2 - 1.5)
    k_dh = k_dl * (8 - 1.5) / (6 - 1.5)
    expected = np.mean([math.exp(-d / k) for k in (k_sl, k_dl, k_sh, k_dh)])
    assert inf_los_probability(d, LosModelParams.from_models()) == pytest.approx(expected, abs=1e-12)


def test_inf_clutter_validation():
    with pytest.raises(ValueError):
        InFClutter(1.2, 10, 2, 1.5, False)
    with pytest.raises(ValueError):
        InFClutter(0.2, 10, 2, 1.5, True).k_subsce(1.5)


@pytest.mark.parametrize("scenario", ["UMi", "UMa", "RMa", "InH", "InF"])
@given(d1=st.floats(1, 2000), d2=st.floats(1, 2000))
def test_probability_bounded_and_non_increasing(scenario, d1, d2):
    lo, hi = sorted((d1, d2))
    p_lo, p_hi = los_probability(scenario, lo), los_probability(scenario, hi)
    assert 0.0 <= p_hi <= p_lo + 1e-12 <= 1.0 + 1e-12


def test_independent_of_frequency():
    # the API takes no carrier: same geometry, same probability
    g = link_geometry((0, 0, 10), (40, 0, 1.5))
    assert los_probability("UMi", g) == los_probability("UMi", 40.0)


def test_rejects_zero_distance():
    with pytest.raises(ValueError):
        los_probability("UMi", 0.0)


def test_draw_condition_extremes_and_rate():
    rng = np.random.default_rng(0)
    assert draw_condition(1.0, rng) is ChannelCondition.LOS
    assert draw_condition(0.0, rng) is ChannelCondition.NLOS
    draws = [draw_condition(0.3, rng) is ChannelCondition.LOS for _ in range(20000)]
    assert np.mean(draws) == pytest.approx(0.3, abs=0.015)
    with pytest.raises(ValueError):
        draw_condition(1.5, rng)


def test_condition_cache_is_write_once():
    cache = ConditionCache()
    first = cache.get_or_draw(0, 0, lambda: ChannelCondition.LOS)
    second = cache.get_or_draw(0, 0, lambda: ChannelCondition.NLOS)
    assert first is second is ChannelCondition.LOS
    assert (0, 0) in cache and len(cache) == 1
