"""Scenario description, JSON schema handling and validation.

A scenario file is a JSON object whose keys mirror the :class:`Scenario`
fields. Nested objects mirror the nested dataclasses. Every key is optional;
unknown keys are rejected at every level.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .antenna import ArrayConfig, ElementPattern, OobeCorrelation, SounderPattern, TxAntenna
from .emitters import OobeLimits, PowerControlConfig
from .errors import ConfigError
from .geometry import SounderGeometry
from .units import DecibelPower

SCHEMA_VERSION = 1
_UINT64 = 2**64


class DuplexMode(str, enum.Enum):
    DOWNSTREAM = "downstream"
    UPSTREAM = "upstream"
    BOTH = "both"


class UeAttach(str, enum.Enum):
    NEAREST = "nearest"  # nearest of the gNB and its repeaters
    REPEATER = "repeater"  # nearest repeater whenever the cell has one


def _default_gnb_antenna():
    return TxAntenna(ElementPattern(), ArrayConfig(rows=8, cols=8, mechanical_downtilt_deg=6.0))


def _default_ue_antenna():
    return TxAntenna(ElementPattern(), ArrayConfig(rows=4, cols=4))


@dataclass(frozen=True)
class AntennaSet:
    gnb: TxAntenna = field(default_factory=_default_gnb_antenna)
    repeater: Optional[TxAntenna] = None  # None: reuse the gNB antenna
    ue: TxAntenna = field(default_factory=_default_ue_antenna)

    @property
    def repeater_or_gnb(self) -> TxAntenna:
        return self.repeater if self.repeater is not None else self.gnb


@dataclass(frozen=True)
class ClassLosses:
    gnb: float = 3.0
    repeater: float = 3.0
    ue: float = 3.0

    def __post_init__(self):
        for name in ("gnb", "repeater", "ue"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"must be a finite value >= 0, got {v}", field=name)


def _default_high_power_pc():
    return PowerControlConfig(enabled=False, p_max_dbm=40.0)


@dataclass(frozen=True)
class Scenario:
    geometry: SounderGeometry = field(default_factory=SounderGeometry)
    sounder_pattern: SounderPattern = field(default_factory=SounderPattern)
    frequency_hz: float = 23.8e9
    ref_bandwidth_hz: float = 200e6
    link_frequency_hz: float = 24.35e9
    gnb_density_per_km2: float = 0.1
    cell_radius_km: float = 0.5
    repeater_factor_f: int = 0
    repeaters_relay_upstream: bool = True
    ue_attach: UeAttach = UeAttach.NEAREST
    ues_per_gnb: int = 3
    duplex_mode: DuplexMode = DuplexMode.BOTH
    tdd_downlink_fraction: float = 0.75
    network_loading: float = 0.5
    power_control: PowerControlConfig = field(default_factory=PowerControlConfig)
    high_power_ue_fraction: float = 0.0
    high_power_power_control: PowerControlConfig = field(default_factory=_default_high_power_pc)
    oobe_limits: OobeLimits = field(default_factory=OobeLimits)
    oobe_correlation: OobeCorrelation = OobeCorrelation.UNCORRELATED
    antennas: AntennaSet = field(default_factory=AntennaSet)
    zenith_attenuation_db: float = 1.0
    l_other_db: ClassLosses = field(default_factory=ClassLosses)
    trials: int = 1000
    master_seed: int = 0
    threshold_dbm: Optional[float] = None

    def __post_init__(self):
        validate(self)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return _to_jsonable(self)

    def hash(self, exclude: str | None = None) -> str:
        return scenario_hash(self.to_dict(), exclude)


def validate(s: Scenario) -> None:
    def need(cond, name, msg):
        if not cond:
            raise ConfigError(msg, field=name)

    for name in ("tdd_downlink_fraction", "network_loading", "high_power_ue_fraction"):
        v = getattr(s, name)
        need(0.0 <= v <= 1.0, name, f"must lie in [0, 1], got {v}")
    need(s.frequency_hz > 0, "frequency_hz", "must be > 0")
    need(s.link_frequency_hz > 0, "link_frequency_hz", "must be > 0")
    need(s.ref_bandwidth_hz > 0, "ref_bandwidth_hz", "must be > 0")
    need(math.isfinite(s.gnb_density_per_km2) and s.gnb_density_per_km2 >= 0,
         "gnb_density_per_km2", "must be a finite value >= 0")
    need(s.cell_radius_km > 0, "cell_radius_km", "must be > 0")
    need(s.repeater_factor_f >= 0, "repeater_factor_f", f"must be >= 0, got {s.repeater_factor_f}")
    need(s.ues_per_gnb >= 0, "ues_per_gnb", f"must be >= 0, got {s.ues_per_gnb}")
    need(s.trials >= 1, "trials", f"must be >= 1, got {s.trials}")
    need(0 <= s.master_seed < _UINT64, "master_seed", "must be an unsigned 64-bit integer")
    need(s.zenith_attenuation_db >= 0, "zenith_attenuation_db", "must be >= 0")
    if s.threshold_dbm is not None:
        need(math.isfinite(s.threshold_dbm), "threshold_dbm", "must be finite")


# --------------------------------------------------------------------------
# (de)serialisation


def _to_jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


def scenario_hash(d: dict, exclude: str | None = None) -> str:
    flat = flatten(d)
    if exclude:
        flat = {k: v for k, v in flat.items() if not _under(k, exclude)}
    blob = json.dumps(flat, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _under(key: str, prefix: str) -> bool:
    return key == prefix or key.startswith(prefix + ".")


def flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        path = f"{prefix}.{k}" if prefix else k
        if isinstance(v, dict):
            out.update(flatten(v, path))
        else:
            out[path] = v
    return out


def _unwrap_optional(tp):
    if typing.get_origin(tp) is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if len(args) == 1:
            return args[0], True
    return tp, False


def _coerce(tp, value, path):
    tp, optional = _unwrap_optional(tp)
    if value is None:
        if optional:
            return None
        raise ConfigError("must not be null", field=path)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if isinstance(tp, type) and issubclass(tp, enum.Enum):
        try:
            return tp(value.lower() if isinstance(value, str) else value)
        except ValueError:
            choices = ", ".join(m.value for m in tp)
            raise ConfigError(f"expected one of {choices}, got {value!r}", field=path) from None
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", field=path)
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", field=path)
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", field=path)
        if not math.isfinite(value):
            raise ConfigError("must be finite", field=path)
        return float(value)
    raise ConfigError(f"unsupported field type {tp!r}", field=path)


def _build(cls, data, path=""):
    if not isinstance(data, dict):
        raise ConfigError(f"expected an object, got {type(data).__name__}", field=path or None)
    hints = typing.get_type_hints(cls)
    names = [f.name for f in dataclasses.fields(cls)]
    unknown = sorted(set(data) - set(names))
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigError(f"unknown key(s): {', '.join(where + k for k in unknown)}",
                          field=f"{where}{unknown[0]}")
    kwargs = {}
    for name in names:
        if name in data:
            sub = f"{path}.{name}" if path else name
            kwargs[name] = _coerce(hints[name], data[name], sub)
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        if path and exc.field:
            raise ConfigError(exc.message, field=f"{path}.{exc.field}") from None
        if path and not exc.field:
            raise ConfigError(exc.message, field=path) from None
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), field=path or None) from None


def scenario_from_dict(data: dict) -> Scenario:
    data = dict(data)
    version = data.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {version!r}", field="schema_version")
    return _build(Scenario, data)


def parse_scenario(path) -> Scenario:
    """Load and validate a JSON scenario file, applying defaults."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    return scenario_from_dict(data)


def set_knob(s: Scenario, knob: str, value: Any) -> Scenario:
    """Return a copy of ``s`` with the dotted field ``knob`` set to ``value``."""
    d = s.to_dict()
    node = d
    parts = knob.split(".")
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise ConfigError("not a nested scenario field", field=knob)
        node = node[p]
    if parts[-1] not in node:
        raise ConfigError("unknown scenario field", field=knob)
    node[parts[-1]] = value
    return scenario_from_dict(d)


__all__ = [
    "AntennaSet",
    "ClassLosses",
    "DecibelPower",
    "DuplexMode",
    "Scenario",
    "UeAttach",
    "parse_scenario",
    "scenario_from_dict",
    "scenario_hash",
    "set_knob",
]
