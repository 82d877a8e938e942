"""Unit handling.

Everything inside the package is SI (kg, m, s, N, Pa, rad, W); pressures are
gauge pascals unless a name says otherwise.  Unit-suffixed inputs ("6 psi",
"0.354 deg/lb") are converted exactly once, at the I/O boundary, through the
tables below.
"""

from __future__ import annotations

import math
import re

PSI_TO_PA = 6894.757293168361
LB_TO_KG = 0.45359237
IN_TO_M = 0.0254
DEG_TO_RAD = math.pi / 180.0


class UnitError(ValueError):
    """Unknown unit suffix or malformed quantity string."""


# Factor-to-SI tables, one per physical dimension.  Each table is bijective:
# a unit appears exactly once and has a single scale factor, so to_si/from_si
# round-trip exactly (one multiply, one divide).
CONVERSIONS: dict[str, dict[str, float]] = {
    "mass": {"kg": 1.0, "g": 1e-3, "lb": LB_TO_KG, "lbs": LB_TO_KG},
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "in": IN_TO_M},
    "volume": {"m3": 1.0, "L": 1e-3, "cm3": 1e-6},
    "pressure": {"Pa": 1.0, "kPa": 1e3, "bar": 1e5, "psi": PSI_TO_PA},
    "angle": {"rad": 1.0, "deg": DEG_TO_RAD},
    "force": {"N": 1.0},
    "torque": {"Nm": 1.0},
    "power": {"W": 1.0, "kW": 1e3},
    "time": {"s": 1.0, "ms": 1e-3, "min": 60.0},
    "speed": {"m/s": 1.0},
    "angular_speed": {"rad/s": 1.0, "deg/s": DEG_TO_RAD},
    "acceleration": {"m/s2": 1.0},
    "density": {"kg/m3": 1.0},
    "frequency": {"Hz": 1.0},
    "angle_per_mass": {"deg/lb": DEG_TO_RAD / LB_TO_KG, "rad/kg": 1.0},
    "flow_resistance": {"Pa.s/m3": 1.0},
    "drag": {"N.s2/m2": 1.0},
}

_QUANTITY_RE = re.compile(
    r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([A-Za-z][A-Za-z0-9./]*)\s*$"
)


def to_si(value: float, unit: str, dimension: str) -> float:
    """Convert ``value`` expressed in ``unit`` to the SI base of ``dimension``."""
    return value * _factor(unit, dimension)


def from_si(value: float, unit: str, dimension: str) -> float:
    """Convert an SI ``value`` back to ``unit``."""
    return value / _factor(unit, dimension)


def parse_quantity(text: str, dimension: str) -> float:
    """Parse a unit-suffixed scalar like ``"6 psi"`` or ``"2.9psi"`` to SI.

    The suffix is mandatory: a bare number is rejected so that manifests can
    never silently mix unit systems.
    """
    if not isinstance(text, str):
        raise UnitError(f"expected a unit-suffixed string, got {text!r}")
    m = _QUANTITY_RE.match(text)
    if m is None:
        raise UnitError(f"malformed quantity {text!r} (expected '<number> <unit>')")
    return to_si(float(m.group(1)), m.group(2), dimension)


def _factor(unit: str, dimension: str) -> float:
    try:
        table = CONVERSIONS[dimension]
    except KeyError:
        raise UnitError(f"unknown dimension {dimension!r}") from None
    try:
        return table[unit]
    except KeyError:
        known = ", ".join(sorted(table))
        raise UnitError(f"unknown {dimension} unit {unit!r} (supported: {known})") from None


def pa_to_psi(pa: float) -> float:
    return pa / PSI_TO_PA


def psi_to_pa(psi: float) -> float:
    return psi * PSI_TO_PA
