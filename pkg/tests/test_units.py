import math

import pytest
from hypothesis import given, strategies as st

from oobe_mc.errors import InvalidArgumentError, UnitMismatchError
from oobe_mc.units import (
    DecibelPower,
    bandwidth_rescale,
    db_to_linear,
    linear_to_db,
    power_sum,
)


@pytest.mark.parametrize("db, lin", [(0.0, 1.0), (10.0, 10.0), (-30.0, 0.001)])
def test_db_to_linear(db, lin):
    assert db_to_linear(db) == pytest.approx(lin, rel=1e-12)


@pytest.mark.parametrize("ratio, db", [(1.0, 0.0), (2.0, 3.0103), (5.0, 6.9897)])
def test_linear_to_db(ratio, db):
    assert linear_to_db(ratio) == pytest.approx(db, abs=5e-5)


@pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
def test_db_to_linear_rejects_non_finite(bad):
    with pytest.raises(InvalidArgumentError):
        db_to_linear(bad)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_linear_to_db_rejects_non_positive(bad):
    with pytest.raises(InvalidArgumentError):
        linear_to_db(bad)


def test_decibel_power_invariants():
    with pytest.raises(InvalidArgumentError):
        DecibelPower(-27.0, 0.0)
    with pytest.raises(InvalidArgumentError):
        DecibelPower(math.nan, 1e6)


def test_booster_limit_rescales_to_200mhz():
    p = bandwidth_rescale(DecibelPower(-70.0, 10e3), 200e6)
    assert p.dbm == pytest.approx(-26.9897, abs=1e-4)
    assert p.ref_bandwidth_hz == 200e6


def test_rescale_identity_and_doubling():
    assert bandwidth_rescale(DecibelPower(-27.0, 200e6), 200e6).dbm == -27.0
    assert bandwidth_rescale(DecibelPower(0.0, 1e6), 2e6).dbm == pytest.approx(3.0103, abs=5e-5)


@pytest.mark.parametrize("bad", [0.0, -5.0])
def test_rescale_rejects_bad_target(bad):
    with pytest.raises(InvalidArgumentError):
        bandwidth_rescale(DecibelPower(0.0, 1e6), bad)


def test_power_sum_examples():
    bw = 200e6
    assert power_sum([DecibelPower(-150, bw)] * 2).dbm == pytest.approx(-146.9897, abs=5e-5)
    assert power_sum([DecibelPower(-100, bw)]).dbm == pytest.approx(-100.0, abs=1e-12)
    assert power_sum([DecibelPower(-160, bw)] * 10).dbm == pytest.approx(-150.0, abs=1e-9)


def test_power_sum_errors():
    with pytest.raises(InvalidArgumentError):
        power_sum([])
    with pytest.raises(UnitMismatchError):
        power_sum([DecibelPower(0, 1e6), DecibelPower(0, 2e6)])


@given(st.floats(-200, 200))
def test_round_trip(x):
    assert linear_to_db(db_to_linear(x)) == pytest.approx(x, abs=1e-12)


@given(st.floats(-150, 50), st.floats(1e3, 1e10), st.floats(1e3, 1e10))
def test_rescale_invertible(dbm, b1, b2):
    p = DecibelPower(dbm, b1)
    back = bandwidth_rescale(bandwidth_rescale(p, b2), b1)
    assert back.dbm == pytest.approx(dbm, abs=1e-12)


@given(st.floats(-200, 30), st.integers(1, 500))
def test_identical_powers_sum(dbm, n):
    total = power_sum([DecibelPower(dbm, 1e6)] * n)
    assert total.dbm == pytest.approx(dbm + 10 * math.log10(n), abs=1e-9)


@given(st.lists(st.floats(-200, 30), min_size=1, max_size=30), st.randoms())
def test_power_sum_permutation_invariant(values, rnd):
    powers = [DecibelPower(v, 1e6) for v in values]
    shuffled = list(powers)
    rnd.shuffle(shuffled)
    assert power_sum(shuffled).dbm == pytest.approx(power_sum(powers).dbm, abs=1e-9)
