"""Uniform planar arrays and element field patterns."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import wrap_degrees

# Directional element of 3GPP 38.901 Table 7.3-1
HPBW_DEG = 65.0
SIDE_LOBE_DB = 30.0
MAX_ATTENUATION_DB = 30.0
MAX_GAIN_DBI = 8.0


class ElementPattern(str, enum.Enum):
    ISOTROPIC = "Isotropic"
    DIRECTIONAL_3GPP = "Directional3gpp"


def _check_angles(theta, phi):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any((theta < 0) | (theta > 180)):
        raise ValueError("zenith angle must lie in [0, 180] degrees")
    if np.any((phi < 0) | (phi >= 360)):
        raise ValueError("azimuth angle must lie in [0, 360) degrees")
    return theta, phi


def directional_gain_db(theta, phi):
    """3GPP element power pattern in dBi, theta/phi in degrees (local)."""
    phi_c = np.where(phi > 180.0, phi - 360.0, phi)
    a_v = -np.minimum(12.0 * ((theta - 90.0) / HPBW_DEG) ** 2, SIDE_LOBE_DB)
    a_h = -np.minimum(12.0 * (phi_c / HPBW_DEG) ** 2, MAX_ATTENUATION_DB)
    return MAX_GAIN_DBI - np.minimum(-(a_v + a_h), MAX_ATTENUATION_DB)


def element_field_pattern(pattern: ElementPattern | str, theta, phi):
    """Field components (F_theta, F_phi) of a vertically polarized element."""
    theta, phi = _check_angles(theta, phi)
    pattern = ElementPattern(pattern)
    if pattern is ElementPattern.ISOTROPIC:
        f_theta = np.ones(np.broadcast(theta, phi).shape)
    else:
        f_theta = np.sqrt(10.0 ** (directional_gain_db(theta, phi) / 10.0))
    f_phi = np.zeros_like(f_theta)
    if f_theta.ndim == 0:
        return float(f_theta), float(f_phi)
    return f_theta, f_phi


def _rotation(bearing_deg: float, downtilt_deg: float) -> np.ndarray:
    a, b = math.radians(bearing_deg), math.radians(downtilt_deg)
    rz = np.array([[math.cos(a), -math.sin(a), 0.0], [math.sin(a), math.cos(a), 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[math.cos(b), 0.0, math.sin(b)], [0.0, 1.0, 0.0], [-math.sin(b), 0.0, math.cos(b)]])
    return rz @ ry


@dataclass
class AntennaArray:
    """Uniform planar array in the local y-z plane, boresight along local +x.

    ``spacing`` is in wavelengths; ``bearing`` and ``downtilt`` rotate the
    panel in the global frame. Weights default to a uniform unit-norm vector.
    """

    rows: int = 1
    cols: int = 1
    spacing: float = 0.5
    pattern: ElementPattern = ElementPattern.ISOTROPIC
    bearing: float = 0.0
    downtilt: float = 0.0
    weights: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("array needs at least one row and column")
        if self.spacing <= 0:
            raise ValueError("element spacing must be positive")
        self.pattern = ElementPattern(self.pattern)
        if self.weights is None:
            self.weights = np.full(self.size, 1.0 / math.sqrt(self.size), dtype=complex)
        else:
            self.set_weights(self.weights)

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def set_weights(self, w) -> None:
        w = np.asarray(w, dtype=complex).ravel()
        if w.size != self.size:
            raise ValueError(f"weight vector has {w.size} entries, array has {self.size}")
        if not math.isclose(np.linalg.norm(w), 1.0, rel_tol=1e-9):
            raise ValueError("beamforming weights must have unit norm")
        self.weights = w

    def element_positions(self, wavelength: float) -> np.ndarray:
        """Element positions in meters, shape (rows*cols, 3), row-major."""
        r, c = np.meshgrid(np.arange(self.rows), np.arange(self.cols), indexing="ij")
        local = np.stack([np.zeros(self.size), c.ravel() * self.spacing * wavelength,
                          r.ravel() * self.spacing * wavelength], axis=1)
        return local @ _rotation(self.bearing, self.downtilt).T

    def field_pattern(self, theta, phi):
        """(F_theta, F_phi) in the global frame for GCS directions (degrees)."""
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if self.bearing == 0.0 and self.downtilt == 0.0:
            return element_field_pattern(self.pattern, theta, wrap_degrees(phi))
        th, ph = np.radians(theta), np.radians(phi)
        glob = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
        local = glob @ _rotation(self.bearing, self.downtilt)
        theta_l = np.degrees(np.arccos(np.clip(local[..., 2], -1.0, 1.0)))
        phi_l = wrap_degrees(np.degrees(np.arctan2(local[..., 1], local[..., 0])))
        f_th, f_ph = element_field_pattern(self.pattern, theta_l, phi_l)
        a, b = math.radians(self.bearing), math.radians(self.downtilt)
        psi = np.angle((math.cos(b) * np.sin(th) - math.sin(b) * np.cos(th) * np.cos(ph - a))
                       + 1j * math.sin(b) * np.sin(ph - a))
        return (np.cos(psi) * f_th - np.sin(psi) * f_ph,
                np.sin(psi) * f_th + np.cos(psi) * f_ph)

    def steering_vector(self, theta, phi, wavelength: float) -> np.ndarray:
        """exp(j 2pi r.d / lambda) for each element; shape (..., size)."""
        th, ph = np.radians(theta), np.radians(phi)
        r = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
        return np.exp(2j * math.pi * (r @ self.element_positions(wavelength).T) / wavelength)

    def steer(self, theta: float, phi: float, wavelength: float) -> np.ndarray:
        """Point the beam with conjugate (matched) weights; returns the weights."""
        a = self.steering_vector(theta, phi, wavelength)
        self.set_weights(np.conj(a) / math.sqrt(self.size))
        return self.weights
