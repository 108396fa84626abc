"""Emitter taxonomy, OOBE assignment and UE open-loop power control."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .antenna import TxAntenna
from .errors import ConfigError, InvalidArgumentError
from .geometry import GroundPoint
from .propagation import fspl
from .units import DecibelPower, bandwidth_rescale

MIN_COUPLING_DISTANCE_KM = 1e-3
"""Ground separations below 1 m are clamped before computing coupling loss."""


class EmitterKind(enum.IntEnum):
    GNB = 0
    REPEATER_DOWN = 1
    UE = 2
    REPEATER_UP = 3

    @property
    def downstream(self) -> bool:
        return self in (EmitterKind.GNB, EmitterKind.REPEATER_DOWN)


@dataclass(frozen=True)
class PowerControlConfig:
    enabled: bool = True
    p0_dbm: float = -90.0
    alpha: float = 1.0
    p_max_dbm: float = 22.0
    p_min_dbm: float = -40.0

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}", field="alpha")
        if self.p_min_dbm > self.p_max_dbm:
            raise ConfigError("p_min_dbm must not exceed p_max_dbm", field="p_min_dbm")

    @property
    def max_reduction_db(self) -> float:
        return self.p_max_dbm - self.p_min_dbm


@dataclass(frozen=True)
class OobeLimits:
    """Per-class OOBE levels.

    gNB and repeater levels are absolute TRPs with their own integration
    bandwidth and are re-referenced to the scenario bandwidth. UE levels are
    offsets from the subclass maximum in-band TRP, already expressed in the
    scenario bandwidth.
    """

    gnb: DecibelPower = field(default_factory=lambda: DecibelPower(-27.0, 200e6))
    repeater: Optional[DecibelPower] = None  # None: same as gnb
    ue_offset_db: float = -49.0
    high_power_ue_offset_db: float = -67.0


@dataclass(frozen=True)
class EmitterNode:
    kind: EmitterKind
    position: GroundPoint
    oobe_trp: DecibelPower  # before any power-control reduction
    antenna: TxAntenna
    serving_position: Optional[GroundPoint] = None
    active: bool = True
    panel_azimuth_deg: float = 0.0
    steer_theta_deg: float = 90.0
    steer_phi_deg: float = 0.0
    l_pwrctl_db: float = 0.0
    high_power: bool = False

    @property
    def effective_oobe(self) -> DecibelPower:
        return effective_ue_oobe(self.l_pwrctl_db, self.oobe_trp)


def coupling_loss(frequency_hz, distance_km, l_other_db):
    """In-band UE-to-serving-node loss: FSPL at the link frequency plus fixed losses."""
    d = np.maximum(np.asarray(distance_km, dtype=float), MIN_COUPLING_DISTANCE_KM)
    loss = fspl(frequency_hz, d) + l_other_db
    return float(loss) if np.ndim(loss) == 0 else loss


def ue_transmit_power(cfg: PowerControlConfig, coupling_loss_db: float, channel_bandwidth_hz: float = 200e6):
    """Open-loop fractional power control.

    Returns ``(tx_power, l_pwrctl_db)`` where the reduction is measured from
    the UE maximum power.
    """
    if not coupling_loss_db >= 0:
        raise InvalidArgumentError(f"coupling loss must be >= 0, got {coupling_loss_db}")
    p, l = ue_transmit_power_db(cfg, coupling_loss_db)
    return DecibelPower(float(p), channel_bandwidth_hz), float(l)


def ue_transmit_power_db(cfg: PowerControlConfig, coupling_loss_db):
    """Array form of :func:`ue_transmit_power` returning plain dB values."""
    cl = np.asarray(coupling_loss_db, dtype=float)
    if not cfg.enabled:
        p = np.full(cl.shape, cfg.p_max_dbm)
    else:
        p = np.clip(cfg.p0_dbm + cfg.alpha * cl, cfg.p_min_dbm, cfg.p_max_dbm)
    return p, cfg.p_max_dbm - p


def assign_oobe_trp(kind: EmitterKind, limits: OobeLimits, ref_bandwidth_hz: float, *, ue_p_max_dbm: float = 22.0, high_power: bool = False) -> DecibelPower:
    kind = EmitterKind(kind)
    if kind is EmitterKind.GNB:
        if limits.gnb is None:
            raise ConfigError("no OOBE limit configured for gNBs", field="oobe_limits.gnb")
        return bandwidth_rescale(limits.gnb, ref_bandwidth_hz)
    if kind is EmitterKind.REPEATER_DOWN:
        src = limits.repeater if limits.repeater is not None else limits.gnb
        if src is None:
            raise ConfigError("no OOBE limit configured for repeaters", field="oobe_limits.repeater")
        return bandwidth_rescale(src, ref_bandwidth_hz)
    # UE and relayed-UE emissions share the UE rule
    offset = limits.high_power_ue_offset_db if high_power else limits.ue_offset_db
    if offset is None or not math.isfinite(offset):
        raise ConfigError("no OOBE offset configured for UEs", field="oobe_limits")
    return DecibelPower(ue_p_max_dbm + offset, ref_bandwidth_hz)


def effective_ue_oobe(l_pwrctl_db: float, base_oobe: DecibelPower) -> DecibelPower:
    """OOBE after power control; out-of-band power tracks in-band power dB for dB."""
    return DecibelPower(base_oobe.dbm - l_pwrctl_db, base_oobe.ref_bandwidth_hz)
