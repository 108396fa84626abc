"""Sounder-to-ground geometry on a spherical Earth.

Ground points live on a local tangent plane (x east-ish, y north-ish, z up)
centred on the footprint centre. The satellite sits in the x-z plane on the
+x side, at the position implied by its altitude and the elevation at which
it is seen from the footprint centre. Curvature inside the footprint is
ignored; curvature between the ground and the satellite is not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

EARTH_RADIUS_KM = 6371.0
_COORD_LIMIT_KM = 10_000.0


@dataclass(frozen=True)
class GroundPoint:
    x_km: float
    y_km: float

    def __post_init__(self):
        for name in ("x_km", "y_km"):
            v = getattr(self, name)
            if not math.isfinite(v) or abs(v) > _COORD_LIMIT_KM:
                raise InvalidArgumentError(f"{name} out of range: {v}")

    def distance_to(self, other: "GroundPoint") -> float:
        return math.hypot(self.x_km - other.x_km, self.y_km - other.y_km)


@dataclass(frozen=True)
class SounderGeometry:
    altitude_km: float = 824.0
    elevation_deg: float = 90.0
    footprint_radius_km: float = 25.0

    def __post_init__(self):
        if not self.altitude_km > 0:
            raise InvalidArgumentError(f"altitude_km must be > 0, got {self.altitude_km}")
        if not 0 < self.elevation_deg <= 90:
            raise InvalidArgumentError(
                f"elevation_deg must be in (0, 90], got {self.elevation_deg}"
            )
        if not self.footprint_radius_km > 0:
            raise InvalidArgumentError(
                f"footprint_radius_km must be > 0, got {self.footprint_radius_km}"
            )

    @property
    def area_km2(self) -> float:
        return math.pi * self.footprint_radius_km**2

    def satellite_position(self) -> np.ndarray:
        """Satellite coordinates (km) in the local tangent frame."""
        d = slant_range(self.elevation_deg, self.altitude_km)
        el = math.radians(self.elevation_deg)
        return np.array([d * math.cos(el), 0.0, d * math.sin(el)])


@dataclass(frozen=True)
class LookAngles:
    emitter_elevation_deg: float
    emitter_azimuth_deg: float  # counter-clockwise from +x, toward the satellite
    sounder_offaxis_deg: float
    slant_range_km: float


def slant_range(elevation_deg, altitude_km):
    """Ground-to-satellite distance (km) for a given elevation angle."""
    if not 0 <= elevation_deg <= 90:
        raise InvalidArgumentError(f"elevation must be in [0, 90], got {elevation_deg}")
    if not altitude_km > 0:
        raise InvalidArgumentError(f"altitude must be > 0, got {altitude_km}")
    if elevation_deg == 90:
        return float(altitude_km)
    re = EARTH_RADIUS_KM
    s = math.sin(math.radians(elevation_deg))
    return math.sqrt((re * s) ** 2 + 2 * re * altitude_km + altitude_km**2) - re * s


def look_angles_xy(x_km, y_km, g: SounderGeometry):
    """Vectorised look angles for arrays of ground coordinates.

    Returns ``(elevation_deg, azimuth_deg, offaxis_deg, slant_km)`` arrays.
    """
    x = np.asarray(x_km, dtype=float)
    y = np.asarray(y_km, dtype=float)
    sat = g.satellite_position()
    vx = sat[0] - x
    vy = sat[1] - y
    vz = np.broadcast_to(sat[2], x.shape)
    slant = np.sqrt(vx * vx + vy * vy + vz * vz)
    elev = np.degrees(np.arcsin(np.clip(vz / slant, -1.0, 1.0)))
    az = np.degrees(np.arctan2(vy, vx))
    # angle at the satellite between the boresight (toward the centre) and the emitter ray
    bore = -sat / np.linalg.norm(sat)
    cos_off = -(vx * bore[0] + vy * bore[1] + vz * bore[2]) / slant
    off = np.degrees(np.arccos(np.clip(cos_off, -1.0, 1.0)))
    return elev, az, off, slant


def look_angles(p: GroundPoint, g: SounderGeometry) -> LookAngles:
    r = math.hypot(p.x_km, p.y_km)
    if r > 2 * g.footprint_radius_km:
        raise InvalidArgumentError(
            f"point at {r:.3f} km lies beyond twice the footprint radius"
        )
    elev, az, off, slant = look_angles_xy(p.x_km, p.y_km, g)
    return LookAngles(float(elev), float(az), float(off), float(slant))


def in_footprint(p: GroundPoint, g: SounderGeometry) -> bool:
    return math.hypot(p.x_km, p.y_km) <= g.footprint_radius_km
