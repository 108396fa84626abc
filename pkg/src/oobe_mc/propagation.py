"""Path and atmospheric losses. All losses are positive dB attenuations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

SPEED_OF_LIGHT_M_S = 299_792_458.0


@dataclass(frozen=True)
class PropagationLosses:
    l_path_db: float
    l_gas_db: float = 0.0
    l_other_db: float = 0.0

    def __post_init__(self):
        for name in ("l_path_db", "l_gas_db", "l_other_db"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidArgumentError(f"{name} must be a finite value >= 0, got {v}")


def fspl(frequency_hz, distance_km):
    """Free-space path loss 20*log10(4*pi*d/lambda) in dB.

    Accepts scalars or numpy arrays for ``distance_km``.
    """
    if not frequency_hz > 0:
        raise InvalidArgumentError(f"frequency must be > 0, got {frequency_hz}")
    d_m = np.asarray(distance_km, dtype=float) * 1e3
    if np.any(~(d_m > 0)):
        raise InvalidArgumentError("distance must be > 0")
    loss = 20.0 * np.log10(4.0 * math.pi * d_m * frequency_hz / SPEED_OF_LIGHT_M_S)
    return float(loss) if loss.ndim == 0 else loss


def gaseous_loss(zenith_attenuation_db, elevation_deg):
    """Slant-path gaseous attenuation using the cosecant law."""
    if zenith_attenuation_db < 0:
        raise InvalidArgumentError(
            f"zenith attenuation must be >= 0, got {zenith_attenuation_db}"
        )
    el = np.asarray(elevation_deg, dtype=float)
    if np.any(~((el > 0) & (el <= 90))):
        raise InvalidArgumentError("elevation must be in (0, 90] degrees")
    loss = zenith_attenuation_db / np.sin(np.radians(el))
    # sin(90 deg) is not exactly 1 in floating point
    loss = np.where(el == 90, zenith_attenuation_db, loss)
    return float(loss) if loss.ndim == 0 else loss


def total_loss(l: PropagationLosses) -> float:
    return l.l_path_db + l.l_gas_db + l.l_other_db
