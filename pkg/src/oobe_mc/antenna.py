"""Transmitter array patterns and the sounder receive pattern.

Transmitter angles use the panel frame: ``theta`` is measured from the panel's
vertical axis (90 deg lies in the boresight plane) and ``phi`` is the azimuth
from boresight. Every gain function accepts scalars or broadcastable arrays.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

_AF_FLOOR = 1e-30  # keeps exact array nulls finite (-300 dB)


class OobeCorrelation(str, enum.Enum):
    """How out-of-band power couples to the beamforming array.

    CORRELATED: OOBE is steered with the wanted signal (full composite pattern).
    UNCORRELATED: OOBE adds incoherently across elements, so it radiates with
    the element pattern while the total radiated power stays the same.
    """

    CORRELATED = "correlated"
    UNCORRELATED = "uncorrelated"


@dataclass(frozen=True)
class ElementPattern:
    g_max_dbi: float = 5.0
    am_db: float = 30.0
    sla_v_db: float = 30.0
    theta_3db_deg: float = 65.0
    phi_3db_deg: float = 65.0

    def __post_init__(self):
        if not self.am_db > 0:
            raise InvalidArgumentError("am_db must be > 0")
        if not self.sla_v_db > 0:
            raise InvalidArgumentError("sla_v_db must be > 0")
        for name in ("theta_3db_deg", "phi_3db_deg"):
            if not 0 < getattr(self, name) < 180:
                raise InvalidArgumentError(f"{name} must be in (0, 180)")


@dataclass(frozen=True)
class ArrayConfig:
    rows: int = 8
    cols: int = 8
    spacing_wavelengths: float = 0.5
    steer_theta_deg: float = 90.0
    steer_phi_deg: float = 0.0
    mechanical_downtilt_deg: float = 0.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InvalidArgumentError("rows and cols must be >= 1")
        if not self.spacing_wavelengths > 0:
            raise InvalidArgumentError("spacing_wavelengths must be > 0")

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class TxAntenna:
    element: ElementPattern = field(default_factory=ElementPattern)
    array: ArrayConfig = field(default_factory=ArrayConfig)


@dataclass(frozen=True)
class SounderPattern:
    g_max_dbi: float = 45.0
    rolloff_coeff_db_per_deg2: float = 1.0
    floor_dbi: float = -5.0

    def __post_init__(self):
        if not self.g_max_dbi > self.floor_dbi:
            raise InvalidArgumentError("g_max_dbi must exceed floor_dbi")
        if not self.rolloff_coeff_db_per_deg2 >= 0:
            raise InvalidArgumentError("rolloff_coeff_db_per_deg2 must be >= 0")


def _check_angles(theta, phi):
    if np.any((theta < 0) | (theta > 180)):
        raise InvalidArgumentError("theta must lie in [0, 180] degrees")
    if np.any((phi < -180) | (phi > 180)):
        raise InvalidArgumentError("phi must lie in [-180, 180] degrees")


def _out(a):
    return float(a) if np.ndim(a) == 0 else a


def element_gain(p: ElementPattern, theta_deg, phi_deg):
    theta = np.asarray(theta_deg, dtype=float)
    phi = np.asarray(phi_deg, dtype=float)
    _check_angles(theta, phi)
    a_h = -np.minimum(12.0 * (phi / p.phi_3db_deg) ** 2, p.am_db)
    a_v = -np.minimum(12.0 * ((theta - 90.0) / p.theta_3db_deg) ** 2, p.sla_v_db)
    return _out(p.g_max_dbi - np.minimum(-(a_h + a_v), p.am_db))


def array_factor_db(a: ArrayConfig, theta_deg, phi_deg, steer_theta_deg=None, steer_phi_deg=None):
    """Normalised array factor 10*log10(|sum w*v|^2) with unit-power weights.

    Peaks at 10*log10(rows*cols) in the steering direction.
    """
    st = a.steer_theta_deg if steer_theta_deg is None else steer_theta_deg
    sp = a.steer_phi_deg if steer_phi_deg is None else steer_phi_deg
    th = np.radians(np.asarray(theta_deg, dtype=float))
    ph = np.radians(np.asarray(phi_deg, dtype=float))
    sth = np.radians(np.asarray(st, dtype=float))
    sph = np.radians(np.asarray(sp, dtype=float))
    k = 2.0 * math.pi * a.spacing_wavelengths
    psi_v = k * (np.cos(th) - np.cos(sth))
    psi_h = k * (np.sin(th) * np.sin(ph) - np.sin(sth) * np.sin(sph))
    # uniform weights make the planar factor separable into row and column sums
    af_v = _line_power(psi_v, a.rows)
    af_h = _line_power(psi_h, a.cols)
    af = af_v * af_h / a.n_elements
    return _out(10.0 * np.log10(np.maximum(af, _AF_FLOOR)))


def _line_power(psi, n):
    idx = np.arange(n)
    psi = np.asarray(psi)
    s = np.exp(1j * np.multiply.outer(psi, idx)).sum(axis=-1)
    return np.abs(s) ** 2


def array_gain(e: ElementPattern, a: ArrayConfig, theta_deg, phi_deg, steer_theta_deg=None, steer_phi_deg=None):
    """Composite beamformed gain (dBi): element pattern plus array factor."""
    ge = element_gain(e, theta_deg, phi_deg)
    if a.n_elements == 1:
        return ge
    return _out(ge + array_factor_db(a, theta_deg, phi_deg, steer_theta_deg, steer_phi_deg))


def tx_gain(ant: TxAntenna, mode: OobeCorrelation, theta_deg, phi_deg, steer_theta_deg=None, steer_phi_deg=None):
    """Gain applied to out-of-band emissions under the chosen correlation mode."""
    if OobeCorrelation(mode) is OobeCorrelation.CORRELATED:
        return array_gain(ant.element, ant.array, theta_deg, phi_deg, steer_theta_deg, steer_phi_deg)
    return element_gain(ant.element, theta_deg, phi_deg)


def panel_angles(azimuth_deg, elevation_deg, panel_azimuth_deg, downtilt_deg=0.0):
    """Convert a local (azimuth, elevation) direction into panel (theta, phi).

    ``panel_azimuth_deg`` is the boresight azimuth (counter-clockwise from +x)
    and positive ``downtilt_deg`` tilts the boresight below the horizon.
    """
    az = np.radians(np.asarray(azimuth_deg, dtype=float) - np.asarray(panel_azimuth_deg, dtype=float))
    el = np.radians(np.asarray(elevation_deg, dtype=float))
    tilt = np.radians(np.asarray(downtilt_deg, dtype=float))
    ux = np.cos(el) * np.cos(az)
    uy = np.cos(el) * np.sin(az)
    uz = np.sin(el)
    vx = ux * np.cos(tilt) - uz * np.sin(tilt)
    vz = ux * np.sin(tilt) + uz * np.cos(tilt)
    theta = np.degrees(np.arccos(np.clip(vz, -1.0, 1.0)))
    phi = np.degrees(np.arctan2(uy, vx))
    return _out(theta), _out(phi)


def sounder_gain(s: SounderPattern, offaxis_deg):
    off = np.asarray(offaxis_deg, dtype=float)
    if np.any(off < 0):
        raise InvalidArgumentError("off-axis angle must be >= 0")
    return _out(np.maximum(s.g_max_dbi - s.rolloff_coeff_db_per_deg2 * off**2, s.floor_dbi))
