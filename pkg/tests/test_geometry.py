import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oobe_mc.errors import InvalidArgumentError
from oobe_mc.geometry import (
    GroundPoint,
    SounderGeometry,
    in_footprint,
    look_angles,
    slant_range,
)

from oracles import satellite_xyz, slant_range_central_angle


def test_slant_range_nadir_equals_altitude():
    assert slant_range(90, 824) == 824
    assert slant_range(90, 500) == 500


def test_slant_range_horizon():
    # sqrt((6371 + 824)^2 - 6371^2)
    assert slant_range(0, 824) == pytest.approx(3343.4, abs=0.05)
    assert slant_range(0, 824) == pytest.approx(slant_range_central_angle(0, 824), rel=1e-12)


@given(st.floats(0, 89.999), st.floats(200, 36000))
def test_slant_range_matches_central_angle_oracle(el, h):
    assert slant_range(el, h) == pytest.approx(slant_range_central_angle(el, h), rel=1e-9)


def test_slant_range_monotone_decreasing():
    els = np.linspace(0, 90, 901)
    d = [slant_range(e, 824) for e in els]
    assert all(a > b for a, b in zip(d, d[1:]))


@pytest.mark.parametrize("el", [-1, 90.5])
def test_slant_range_rejects_bad_elevation(el):
    with pytest.raises(InvalidArgumentError):
        slant_range(el, 824)


def test_satellite_position_matches_oracle():
    for el in (20, 45, 73.3, 90):
        g = SounderGeometry(elevation_deg=el)
        assert np.allclose(g.satellite_position(), satellite_xyz(el, 824), atol=1e-6)


def test_look_angles_boresight():
    la = look_angles(GroundPoint(0, 0), SounderGeometry())
    assert la.sounder_offaxis_deg == pytest.approx(0.0, abs=1e-9)
    assert la.slant_range_km == pytest.approx(824.0)
    assert la.emitter_elevation_deg == pytest.approx(90.0)


def test_look_angles_offset_point_nadir():
    la = look_angles(GroundPoint(10, 0), SounderGeometry())
    assert la.sounder_offaxis_deg == pytest.approx(math.degrees(math.atan(10 / 824)), abs=1e-6)
    assert la.sounder_offaxis_deg == pytest.approx(0.695, abs=5e-4)


def test_look_angles_centre_sees_configured_elevation():
    la = look_angles(GroundPoint(0, 0), SounderGeometry(elevation_deg=30))
    assert la.emitter_elevation_deg == pytest.approx(30.0, abs=1e-9)
    assert la.sounder_offaxis_deg == pytest.approx(0.0, abs=1e-6)


def test_look_angles_precondition():
    with pytest.raises(InvalidArgumentError):
        look_angles(GroundPoint(60, 0), SounderGeometry(footprint_radius_km=25))


def test_offaxis_monotone_in_ground_distance():
    g = SounderGeometry()
    offs = [look_angles(GroundPoint(r, 0), g).sounder_offaxis_deg for r in np.linspace(0, 50, 51)]
    assert all(b >= a for a, b in zip(offs, offs[1:]))


@pytest.mark.parametrize("p, inside", [((0, 0), True), ((25, 0), True), ((25.001, 0), False)])
def test_in_footprint(p, inside):
    assert in_footprint(GroundPoint(*p), SounderGeometry(footprint_radius_km=25)) is inside


@given(st.floats(0, 40), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_in_footprint_rotation_invariant(r, a, b):
    g = SounderGeometry(footprint_radius_km=25)
    p1 = GroundPoint(r * math.cos(a), r * math.sin(a))
    p2 = GroundPoint(r * math.cos(b), r * math.sin(b))
    # points within rounding of the boundary can land either side
    if abs(r - 25) > 1e-9:
        assert in_footprint(p1, g) == in_footprint(p2, g)


def test_geometry_validation():
    with pytest.raises(InvalidArgumentError):
        SounderGeometry(altitude_km=0)
    with pytest.raises(InvalidArgumentError):
        SounderGeometry(elevation_deg=0)
    with pytest.raises(InvalidArgumentError):
        GroundPoint(20000, 0)
