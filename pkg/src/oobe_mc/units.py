"""Decibel/linear conversions and bandwidth-referenced power levels.

Conventions used throughout the package:

* Powers are carried in dBm together with the bandwidth they are integrated
  over. Accumulation happens in linear watts; dB is only an I/O form.
* Losses (path, gas, other, power control) are stored as positive dB
  attenuations and subtracted in link budgets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError, UnitMismatchError


@dataclass(frozen=True)
class DecibelPower:
    """Power level in dBm integrated over ``ref_bandwidth_hz``."""

    dbm: float
    ref_bandwidth_hz: float

    def __post_init__(self):
        if not math.isfinite(self.dbm):
            raise InvalidArgumentError(f"dbm must be finite, got {self.dbm}")
        if not (self.ref_bandwidth_hz > 0 and math.isfinite(self.ref_bandwidth_hz)):
            raise InvalidArgumentError(
                f"ref_bandwidth_hz must be positive, got {self.ref_bandwidth_hz}"
            )

    @property
    def watts(self) -> float:
        return dbm_to_watts(self.dbm)


def db_to_linear(value_db: float) -> float:
    if not math.isfinite(value_db):
        raise InvalidArgumentError(f"dB value must be finite, got {value_db}")
    return 10.0 ** (value_db / 10.0)


def linear_to_db(ratio: float) -> float:
    if not ratio > 0 or not math.isfinite(ratio):
        raise InvalidArgumentError(f"linear ratio must be positive and finite, got {ratio}")
    return 10.0 * math.log10(ratio)


def dbm_to_watts(dbm):
    """dBm to watts; accepts scalars or arrays. ``-inf`` maps to 0 W."""
    if np.ndim(dbm):
        return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts):
    """Watts to dBm; 0 W maps to ``-inf`` (the empty-sum marker)."""
    if np.ndim(watts):
        w = np.asarray(watts, dtype=float)
        out = np.full(w.shape, -np.inf)
        pos = w > 0
        out[pos] = 10.0 * np.log10(w[pos]) + 30.0
        return out
    if watts <= 0:
        return -math.inf
    return 10.0 * math.log10(watts) + 30.0


def bandwidth_rescale(p: DecibelPower, target_bandwidth_hz: float) -> DecibelPower:
    """Re-reference ``p`` to another integration bandwidth.

    Assumes the emission is spectrally flat across both bandwidths, so the
    integrated power scales with the bandwidth ratio.
    """
    if not (target_bandwidth_hz > 0 and math.isfinite(target_bandwidth_hz)):
        raise InvalidArgumentError(
            f"target bandwidth must be positive, got {target_bandwidth_hz}"
        )
    shift = 10.0 * math.log10(target_bandwidth_hz / p.ref_bandwidth_hz)
    return DecibelPower(p.dbm + shift, target_bandwidth_hz)


def power_sum(powers: Sequence[DecibelPower]) -> DecibelPower:
    """Sum powers in the linear domain."""
    if not powers:
        raise InvalidArgumentError("power_sum needs at least one power")
    bw = powers[0].ref_bandwidth_hz
    for p in powers[1:]:
        if p.ref_bandwidth_hz != bw:
            raise UnitMismatchError(
                f"cannot sum powers referenced to {bw} Hz and {p.ref_bandwidth_hz} Hz"
            )
    # fsum keeps the result independent of ordering to within rounding
    total = math.fsum(dbm_to_watts(p.dbm) for p in powers)
    return DecibelPower(watts_to_dbm(total), bw)
