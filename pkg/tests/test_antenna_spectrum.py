import math

import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import make_subpaths, realize
from nyusim.antenna import AntennaArray, ElementPattern, element_field_pattern
from nyusim.spectrum import (ChannelMatrix, SpectralDensity, beamforming_gain,
                             build_channel_matrix, channel_matrix_from_subpaths, long_term,
                             polarization_matrices, rx_psd)

LAMBDA = 299_792_458.0 / 28e9
BW = 800e6


def gcs_subpaths(delays, powers, aod=None, zod=None, aoa=None, zoa=None, phases=None,
                 xpd_db=None, doppler=None):
    sp = make_subpaths(delays, powers, phases=phases)
    n = len(sp)

    def col(x, default):
        return np.broadcast_to(np.asarray(default if x is None else x, dtype=float), (n,)).copy()

    xpd = np.full((n, 3), np.inf) if xpd_db is None else np.asarray(xpd_db, dtype=float)
    return replace(sp, aod=col(aod, 0.0), zod=col(zod, 90.0), aoa=col(aoa, 180.0),
                   zoa=col(zoa, 90.0), xpd_db=xpd, doppler=col(doppler, 0.0))


def matrix_for(sp, tx=None, rx=None):
    tx = tx or AntennaArray()
    rx = rx or AntennaArray()
    return channel_matrix_from_subpaths(sp, np.sqrt(sp.power), tx, rx, LAMBDA, BW), tx, rx


# -- element patterns -------------------------------------------------------

def test_isotropic_element():
    assert element_field_pattern("Isotropic", 37.0, 211.0) == (1.0, 0.0)


def test_directional_peak_and_backlobe():
    f_theta, f_phi = element_field_pattern(ElementPattern.DIRECTIONAL_3GPP, 90.0, 0.0)
    assert f_theta ** 2 == pytest.approx(10 ** 0.8)
    assert f_phi == 0.0
    back, _ = element_field_pattern(ElementPattern.DIRECTIONAL_3GPP, 90.0, 180.0)
    assert 10 * math.log10(back ** 2) == pytest.approx(8.0 - 30.0)


def test_directional_half_power_beamwidth():
    edge, _ = element_field_pattern(ElementPattern.DIRECTIONAL_3GPP, 90.0, 32.5)
    assert 10 * math.log10(edge ** 2) == pytest.approx(8.0 - 3.0)


@pytest.mark.parametrize("theta,phi", [(-1.0, 0.0), (181.0, 0.0), (90.0, 360.0), (90.0, -5.0)])
def test_pattern_rejects_out_of_range(theta, phi):
    with pytest.raises(ValueError):
        element_field_pattern("Isotropic", theta, phi)


# -- arrays -----------------------------------------------------------------

def test_array_positions_and_default_weights():
    arr = AntennaArray(2, 3)
    pos = arr.element_positions(LAMBDA)
    assert pos.shape == (6, 3)
    assert np.linalg.norm(arr.weights) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        arr.set_weights(np.ones(6))
    with pytest.raises(ValueError):
        arr.set_weights(np.ones(5) / math.sqrt(5))


def test_rotated_array_keeps_field_magnitude():
    arr = AntennaArray(pattern="Isotropic", bearing=30.0, downtilt=10.0)
    f_theta, f_phi = arr.field_pattern(np.array([60.0, 120.0]), np.array([10.0, 250.0]))
    assert_allclose(f_theta ** 2 + f_phi ** 2, 1.0)


def test_rotated_directional_array_points_along_bearing():
    arr = AntennaArray(pattern="Directional3gpp", bearing=90.0)
    f_theta, f_phi = arr.field_pattern(90.0, 90.0)
    assert f_theta ** 2 + f_phi ** 2 == pytest.approx(10 ** 0.8)


# -- channel matrix ---------------------------------------------------------

def test_single_tap_unit_arrays_gives_amplitude():
    sp = gcs_subpaths([100.0], [0.25])
    m, _, _ = matrix_for(sp)
    assert m.coefficients.shape == (1, 1, 1)
    assert m.coefficients[0, 0, 0] == pytest.approx(0.5)


def test_isotropic_magnitude_independent_of_element():
    sp = gcs_subpaths([10.0, 30.0], [1.0, 0.5], aod=[20.0, 200.0], zod=[80.0, 95.0],
                      aoa=[140.0, 10.0], zoa=[100.0, 70.0], phases=[0.4, 2.0])
    m, _, _ = matrix_for(sp, AntennaArray(2, 2), AntennaArray(4, 2))
    mags = np.abs(m.coefficients)
    assert m.coefficients.shape == (2, 8, 4)
    assert_allclose(mags, mags[:, :1, :1] * np.ones_like(mags))


def test_broadside_arrival_in_phase():
    sp = gcs_subpaths([1.0], [1.0], aoa=0.0, zoa=90.0)
    m, _, _ = matrix_for(sp, rx=AntennaArray(1, 2))
    h = m.coefficients[0, :, 0]
    assert h[0] == pytest.approx(h[1])


def test_delays_preserved_exactly():
    delays = [123.456789, 987.654321]
    m, _, _ = matrix_for(gcs_subpaths(delays, [1.0, 1.0]))
    assert list(m.delays) == delays


def test_polarization_matrix_cross_terms():
    sp = gcs_subpaths([1.0], [1.0], phases=[[0.0, 0.0, 0.0, 0.0]], xpd_db=[[10.0, 20.0, 0.0]])
    pol = polarization_matrices(sp)[0]
    assert_allclose(np.abs(pol), [[1.0, math.sqrt(0.1)], [math.sqrt(0.01), 1.0]])


def test_build_from_realization_dimensions():
    r = realize("UMi", "NLOS", seed=5)
    m = build_channel_matrix(r, AntennaArray(2, 2), AntennaArray(1, 4))
    assert m.coefficients.shape == (len(r.resolvable_subpaths), 4, 4)
    # unit-norm amplitudes squared sum to resolvable power over Tx power
    assert np.sum(m.amplitudes ** 2) == pytest.approx(
        r.resolvable_subpaths.total_power() / 10 ** (r.tx_power_dbm / 10))


@given(rot=st.floats(0, 2 * math.pi))
def test_tap_energy_invariant_under_global_phase(rot):
    sp = gcs_subpaths([1.0, 5.0], [1.0, 0.3], phases=[0.2, 1.7], aoa=[30.0, 200.0])
    m1, _, _ = matrix_for(sp, AntennaArray(2, 2), AntennaArray(2, 2))
    sp2 = replace(sp, phases=np.mod(sp.phases + rot, 2 * math.pi))
    m2, _, _ = matrix_for(sp2, AntennaArray(2, 2), AntennaArray(2, 2))
    assert_allclose(np.sum(np.abs(m1.coefficients) ** 2, axis=(1, 2)),
                    np.sum(np.abs(m2.coefficients) ** 2, axis=(1, 2)))


def test_impulse_response_rotates_with_doppler():
    sp = gcs_subpaths([1.0], [1.0], doppler=[50.0])
    m, _, _ = matrix_for(sp)
    _, h = m.impulse_response(0.005)
    assert h[0, 0, 0] == pytest.approx(m.coefficients[0, 0, 0] * np.exp(2j * math.pi * 0.25))


# -- long-term component ----------------------------------------------------

def test_long_term_unit_arrays():
    sp = gcs_subpaths([1.0, 2.0], [1.0, 0.5], phases=[0.3, 1.1])
    m, _, _ = matrix_for(sp)
    assert_allclose(long_term(m, [1.0], [1.0]), m.coefficients[:, 0, 0])


def test_long_term_null_steering():
    sp = gcs_subpaths([1.0], [1.0], aoa=40.0, zoa=80.0)
    rx = AntennaArray(1, 2)
    m, _, _ = matrix_for(sp, rx=rx)
    a = rx.steering_vector(80.0, 40.0, LAMBDA)
    w = np.array([np.conj(a[1]), -np.conj(a[0])])
    w = np.conj(w) / np.linalg.norm(w)   # orthogonal to the array response
    assert abs(np.vdot(np.conj(w), a)) == pytest.approx(0.0, abs=1e-12)
    assert abs(long_term(m, [1.0], w)[0]) == pytest.approx(0.0, abs=1e-12)


def test_long_term_dimension_mismatch():
    m, _, _ = matrix_for(gcs_subpaths([1.0], [1.0]), rx=AntennaArray(1, 2))
    with pytest.raises(ValueError):
        long_term(m, [1.0], [1.0])


@settings(max_examples=50)
@given(seed=st.integers(0, 10_000))
def test_long_term_cauchy_schwarz(seed):
    rng = np.random.default_rng(seed)
    sp = gcs_subpaths([1.0, 4.0], [1.0, 0.2], aoa=rng.uniform(0, 360, 2), zoa=rng.uniform(0, 180, 2),
                      phases=rng.uniform(0, 6, 2))
    m, _, _ = matrix_for(sp, AntennaArray(2, 2), AntennaArray(1, 3))
    w_tx = rng.normal(size=4) + 1j * rng.normal(size=4)
    w_rx = rng.normal(size=3) + 1j * rng.normal(size=3)
    w_tx, w_rx = w_tx / np.linalg.norm(w_tx), w_rx / np.linalg.norm(w_rx)
    bound = math.sqrt(12) * np.abs(m.coefficients).max(axis=(1, 2))
    assert np.all(np.abs(long_term(m, w_tx, w_rx)) <= bound + 1e-12)


def test_negated_phases_conjugate_long_term():
    sp = gcs_subpaths([1.0, 3.0], [1.0, 0.5], phases=[0.4, 2.5])
    m1, _, _ = matrix_for(sp)
    m2, _, _ = matrix_for(replace(sp, phases=np.mod(-sp.phases, 2 * math.pi)))
    l1, l2 = long_term(m1, [1.0], [1.0]), long_term(m2, [1.0], [1.0])
    assert_allclose(l2, np.conj(l1), atol=1e-12)
    # the PSD reflects about the carrier
    grid = SpectralDensity.flat(1.0, BW, 100)
    s1 = rx_psd(grid, m1, [1.0], [1.0]).values
    s2 = rx_psd(grid, m2, [1.0], [1.0]).values
    assert_allclose(s2, s1[::-1], rtol=1e-9)


# -- PSD --------------------------------------------------------------------

def test_flat_grid():
    g = SpectralDensity.flat(2.0, BW, 100)
    assert len(g.frequencies) == 100
    assert_allclose(np.diff(g.frequencies), BW / 100)
    assert g.total_power() == pytest.approx(2.0)
    with pytest.raises(ValueError):
        SpectralDensity(np.zeros(3), -np.ones(3))


def test_single_tap_flat_psd():
    m, _, _ = matrix_for(gcs_subpaths([250.0], [0.01], phases=[1.0]))
    out = rx_psd(SpectralDensity.flat(1.0, BW), m, [1.0], [1.0])
    assert_allclose(out.values, 0.01 / BW)


def test_two_tap_ripple_period():
    dt_ns = 25.0
    m, _, _ = matrix_for(gcs_subpaths([100.0, 100.0 + dt_ns], [1.0, 1.0]))
    f = np.linspace(-BW / 2, BW / 2, 4001)
    out = rx_psd(SpectralDensity(f, np.ones_like(f)), m, [1.0], [1.0])
    expected = np.abs(1 + np.exp(-2j * math.pi * f * dt_ns * 1e-9)) ** 2
    assert_allclose(out.values, expected, atol=1e-9)
    shifted = rx_psd(SpectralDensity(f[:2001] + 1 / (dt_ns * 1e-9), np.ones(2001)), m, [1.0], [1.0])
    assert_allclose(shifted.values, out.values[:2001], atol=1e-9)


def test_doppler_period():
    m, _, _ = matrix_for(gcs_subpaths([1.0, 9.0], [1.0, 0.5], doppler=[200.0, 0.0]))
    grid = SpectralDensity.flat(1.0, BW, 50)
    assert_allclose(rx_psd(grid, m, [1.0], [1.0], 0.0).values,
                    rx_psd(grid, m, [1.0], [1.0], 1 / 200.0).values, rtol=1e-9)


def test_psd_grid_outside_band_rejected():
    m, _, _ = matrix_for(gcs_subpaths([1.0], [1.0]))
    with pytest.raises(ValueError):
        rx_psd(SpectralDensity(np.array([0.0, BW]), np.ones(2)), m, [1.0], [1.0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), t=st.floats(0, 1))
def test_psd_non_negative(seed, t):
    r = realize("InH", "NLOS", seed=seed, velocity=(1.0, 0.5, 0.0))
    m = build_channel_matrix(r, AntennaArray(2, 2), AntennaArray(2, 2))
    out = rx_psd(SpectralDensity.flat(1.0, r.carrier.rf_bandwidth), m, AntennaArray(2, 2).weights,
                 AntennaArray(2, 2).weights, t)
    assert np.all(out.values >= 0)


# -- beamforming gain -------------------------------------------------------

def test_unit_arrays_no_gain():
    m, tx, rx = matrix_for(gcs_subpaths([10.0], [1.0]))
    assert beamforming_gain(m, tx, rx, (90.0, 0.0), (90.0, 180.0)) == pytest.approx(0.0, abs=1e-9)


def test_rx_array_gain():
    sp = gcs_subpaths([10.0], [1.0], aoa=75.0, zoa=60.0)
    m, tx, rx = matrix_for(sp, rx=AntennaArray(2, 4))
    g = beamforming_gain(m, tx, rx, (90.0, 0.0), (60.0, 75.0))
    assert g == pytest.approx(10 * math.log10(8), abs=1e-6)


def test_steering_away_is_worse():
    sp = gcs_subpaths([10.0], [1.0], aoa=30.0, zoa=90.0)
    m, tx, rx = matrix_for(sp, rx=AntennaArray(4, 4))
    on = beamforming_gain(m, tx, rx, (90.0, 0.0), (90.0, 30.0))
    off = beamforming_gain(m, tx, rx, (90.0, 0.0), (90.0, 210.0))
    assert off <= on


def test_full_matched_gain():
    sp = gcs_subpaths([10.0], [1.0], aod=20.0, zod=100.0, aoa=200.0, zoa=80.0, phases=[1.3])
    m, tx, rx = matrix_for(sp, AntennaArray(4, 4), AntennaArray(4, 4))
    g = beamforming_gain(m, tx, rx, (100.0, 20.0), (80.0, 200.0))
    assert g == pytest.approx(10 * math.log10(256), abs=1e-6)
