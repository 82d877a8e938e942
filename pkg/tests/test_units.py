import random

import pytest

from snakeforge.units import (
    CONVERSIONS,
    UnitError,
    from_si,
    pa_to_psi,
    parse_quantity,
    psi_to_pa,
    to_si,
)


def test_psi_to_pa_hand_value():
    # 6 x 6894.757... computed by hand
    assert parse_quantity("6 psi", "pressure") == pytest.approx(41368.5, abs=0.1)


def test_parse_accepts_missing_space():
    assert parse_quantity("2.9psi", "pressure") == parse_quantity("2.9 psi", "pressure")
    assert parse_quantity("6.25lbs", "mass") == parse_quantity("6.25 lbs", "mass")
    assert parse_quantity("0.1ms", "time") == pytest.approx(1e-4)


def test_parse_scientific_notation():
    assert parse_quantity("1.2855897e8 Pa.s/m3", "flow_resistance") == pytest.approx(1.2855897e8)


def test_bare_number_rejected():
    with pytest.raises(UnitError):
        parse_quantity("5.386", "mass")


def test_unknown_unit_rejected():
    with pytest.raises(UnitError, match="unknown mass unit"):
        parse_quantity("3 stone", "mass")


def test_unknown_dimension_rejected():
    with pytest.raises(UnitError, match="unknown dimension"):
        to_si(1.0, "m", "charm")


def test_wrong_dimension_unit_rejected():
    with pytest.raises(UnitError):
        parse_quantity("3 psi", "mass")


def test_round_trip_is_bijective_on_all_units():
    # conversion tables must round-trip to 1e-9 relative for any magnitude
    rng = random.Random(42)
    for dimension, table in CONVERSIONS.items():
        for unit in table:
            for _ in range(50):
                value = rng.uniform(1e-6, 1e6) * 10 ** rng.randint(-3, 3)
                back = from_si(to_si(value, unit, dimension), unit, dimension)
                assert back == pytest.approx(value, rel=1e-9), (dimension, unit)


def test_pa_psi_helpers_invert():
    assert pa_to_psi(psi_to_pa(2.9)) == pytest.approx(2.9, rel=1e-12)


def test_angle_conversions():
    import math

    assert parse_quantity("90 deg", "angle") == pytest.approx(math.pi / 2)
    assert from_si(math.pi, "deg", "angle") == pytest.approx(180.0)
