"""MIMO channel coefficients, long-term components and received PSD."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .antenna import AntennaArray
from .small_scale import ChannelRealization, Subpaths, unit_vector


@dataclass(frozen=True)
class ChannelMatrix:
    """Per-subpath coefficient blocks H[m, u, s] with their delays and Dopplers.

    Amplitudes are channel gains (sqrt of subpath power over Tx power), so
    the matrix maps transmitted to received power.
    """

    coefficients: np.ndarray     # (M, U, S) complex
    delays: np.ndarray           # ns
    doppler: np.ndarray          # Hz
    amplitudes: np.ndarray       # alpha_m, linear
    wavelength: float
    rf_bandwidth: float

    @property
    def n_rx(self) -> int:
        return self.coefficients.shape[1]

    @property
    def n_tx(self) -> int:
        return self.coefficients.shape[2]

    def __len__(self) -> int:
        return self.coefficients.shape[0]

    def impulse_response(self, t: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Tap delays [ns] and time-varying blocks H_m(t) = H_m exp(j2pi nu_m t)."""
        rot = np.exp(2j * math.pi * self.doppler * t)
        return self.delays.copy(), self.coefficients * rot[:, None, None]


@dataclass(frozen=True)
class SpectralDensity:
    """PSD samples at subband centers given as offsets from the carrier [Hz]."""

    frequencies: np.ndarray
    values: np.ndarray           # W/Hz

    def __post_init__(self):
        if np.shape(self.frequencies) != np.shape(self.values) or np.ndim(self.values) != 1:
            raise ValueError("frequencies and values must be equal-length vectors")
        if np.any(np.asarray(self.values) < 0):
            raise ValueError("PSD values must be non-negative")

    @classmethod
    def flat(cls, total_power_w: float, rf_bandwidth: float, n_subbands: int = 100) -> "SpectralDensity":
        width = rf_bandwidth / n_subbands
        centers = -rf_bandwidth / 2 + width * (np.arange(n_subbands) + 0.5)
        return cls(centers, np.full(n_subbands, total_power_w / rf_bandwidth))

    @property
    def subband_width(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0]) if len(self.frequencies) > 1 else 0.0

    def total_power(self, rf_bandwidth: float | None = None) -> float:
        width = self.subband_width or (rf_bandwidth or 0.0)
        return float(np.sum(self.values) * width)


def polarization_matrices(subpaths: Subpaths) -> np.ndarray:
    """2x2 polarization coupling per subpath, shape (M, 2, 2)."""
    ph = subpaths.phases
    if subpaths.xpd_db is None:
        inv_k = np.zeros((len(subpaths), 3))
    else:
        inv_k = 1.0 / subpaths.xpd_linear
    pol = np.empty((len(subpaths), 2, 2), dtype=complex)
    pol[:, 0, 0] = np.exp(1j * ph[:, 0])
    pol[:, 0, 1] = np.sqrt(inv_k[:, 0]) * np.exp(1j * ph[:, 1])
    pol[:, 1, 0] = np.sqrt(inv_k[:, 1]) * np.exp(1j * ph[:, 2])
    pol[:, 1, 1] = np.sqrt(inv_k[:, 2]) * np.exp(1j * ph[:, 3])
    return pol


def build_channel_matrix(realization: ChannelRealization, tx_array: AntennaArray,
                         rx_array: AntennaArray) -> ChannelMatrix:
    sp = realization.resolvable_subpaths
    if sp.aod is None:
        raise ValueError("realization has no GCS angles; run the full generation first")
    tx_power_mw = 10.0 ** (realization.tx_power_dbm / 10.0)
    amplitude = np.sqrt(sp.power / tx_power_mw)
    return channel_matrix_from_subpaths(sp, amplitude, tx_array, rx_array,
                                       realization.carrier.wavelength,
                                       realization.carrier.rf_bandwidth)


def channel_matrix_from_subpaths(sp: Subpaths, amplitude, tx_array: AntennaArray,
                                 rx_array: AntennaArray, wavelength: float,
                                 rf_bandwidth: float) -> ChannelMatrix:
    amplitude = np.asarray(amplitude, dtype=float)
    if amplitude.shape != (len(sp),):
        raise ValueError("one amplitude per subpath is required")
    f_rx = np.stack(rx_array.field_pattern(sp.zoa, sp.aoa), axis=-1)   # (M, 2)
    f_tx = np.stack(tx_array.field_pattern(sp.zod, sp.aod), axis=-1)
    pol = polarization_matrices(sp)
    gain = np.einsum("mi,mij,mj->m", f_rx, pol, f_tx)
    a_rx = rx_array.steering_vector(sp.zoa, sp.aoa, wavelength)          # (M, U)
    a_tx = tx_array.steering_vector(sp.zod, sp.aod, wavelength)          # (M, S)
    coeff = (amplitude * gain)[:, None, None] * a_rx[:, :, None] * a_tx[:, None, :]
    doppler = sp.doppler if sp.doppler is not None else np.zeros(len(sp))
    return ChannelMatrix(coeff, sp.delay.copy(), np.asarray(doppler, dtype=float), amplitude,
                         wavelength, rf_bandwidth)


def _check_weights(matrix: ChannelMatrix, w_tx, w_rx):
    w_tx = np.asarray(w_tx, dtype=complex).ravel()
    w_rx = np.asarray(w_rx, dtype=complex).ravel()
    if w_tx.size != matrix.n_tx or w_rx.size != matrix.n_rx:
        raise ValueError(f"weights ({w_rx.size} rx, {w_tx.size} tx) do not match the "
                         f"{matrix.n_rx}x{matrix.n_tx} channel")
    return w_tx, w_rx


def long_term(matrix: ChannelMatrix, w_tx, w_rx) -> np.ndarray:
    """L_m = sum_u sum_s w_rx,u H_{u,s,m} w_tx,s for every subpath m."""
    w_tx, w_rx = _check_weights(matrix, w_tx, w_rx)
    return np.einsum("u,mus,s->m", w_rx, matrix.coefficients, w_tx)


def frequency_response(matrix: ChannelMatrix, lt: np.ndarray, offsets, t: float = 0.0) -> np.ndarray:
    """sum_m L_m exp(j2pi nu_m t) exp(-j2pi tau_m f) at the given offsets [Hz]."""
    offsets = np.asarray(offsets, dtype=float)
    tau_s = matrix.delays * 1e-9
    doppler_phase = np.exp(2j * math.pi * matrix.doppler * t)
    steer = np.exp(-2j * math.pi * np.outer(offsets, tau_s))          # (F, M)
    return steer @ (lt * doppler_phase)


def rx_psd(tx_psd: SpectralDensity, matrix: ChannelMatrix, w_tx, w_rx,
           t: float = 0.0) -> SpectralDensity:
    """Beamformed received PSD at time ``t``.

    The delay term uses exp(-j2pi tau f); only |.|^2 enters the result.
    """
    freqs = np.asarray(tx_psd.frequencies, dtype=float)
    if np.any(np.abs(freqs) > matrix.rf_bandwidth / 2 * (1 + 1e-12)):
        raise ValueError("PSD grid extends beyond the channel bandwidth")
    lt = long_term(matrix, w_tx, w_rx)
    h = frequency_response(matrix, lt, freqs, t)
    return SpectralDensity(freqs.copy(), np.asarray(tx_psd.values) * np.abs(h) ** 2)


def beamforming_gain(matrix: ChannelMatrix, tx_array: AntennaArray, rx_array: AntennaArray,
                     tx_direction: tuple[float, float], rx_direction: tuple[float, float],
                     n_subbands: int = 100, t: float = 0.0) -> float:
    """Gain [dB] of the beamformed channel over the omnidirectional tap power.

    Both arrays are steered with conjugate weights toward the given GCS
    (zenith, azimuth) directions. The reference is sum_m alpha_m^2, i.e. the
    received power of a single isotropic element pair.
    """
    w_tx = tx_array.steer(*tx_direction, matrix.wavelength)
    w_rx = rx_array.steer(*rx_direction, matrix.wavelength)
    grid = SpectralDensity.flat(1.0, matrix.rf_bandwidth, n_subbands)
    out = rx_psd(grid, matrix, w_tx, w_rx, t)
    omni = float(np.sum(matrix.amplitudes ** 2))
    ratio = float(np.mean(out.values / grid.values)) / omni
    return 10.0 * math.log10(ratio) if ratio > 0 else -math.inf


def strongest_directions(realization: ChannelRealization):
    """GCS (zenith, azimuth) of the strongest resolvable subpath at Tx and Rx."""
    sp = realization.resolvable_subpaths
    k = int(np.argmax(sp.power))
    return (float(sp.zod[k]), float(sp.aod[k])), (float(sp.zoa[k]), float(sp.aoa[k]))


def arrival_vectors(sp: Subpaths) -> np.ndarray:
    return unit_vector(sp.zoa, sp.aoa)
