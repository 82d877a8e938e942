"""Buoyancy budgeting, torus bladder sizing, and flat-pattern generation.

Sign convention: net vertical force is buoyant minus weight, positive up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:
    from .model import RobotAssembly

WATER_DENSITY_KG_M3 = 1000.0
STANDARD_GRAVITY = 9.81
NEUTRAL_BAND_N = 0.05
# System max diameter; the bladder major diameter has to fit inside it.
SYSTEM_MAX_DIAMETER_M = 0.252


class GeometryError(ValueError):
    """Torus or flat-pattern geometry that cannot exist or be manufactured."""


def buoyant_force(
    volume_m3: float,
    fluid_density_kg_m3: float = WATER_DENSITY_KG_M3,
    g_m_s2: float = STANDARD_GRAVITY,
) -> float:
    """Weight of displaced fluid: rho * g * V."""
    if volume_m3 < 0:
        raise ValueError("displaced volume must be >= 0")
    if fluid_density_kg_m3 <= 0:
        raise ValueError("fluid density must be positive")
    return fluid_density_kg_m3 * g_m_s2 * volume_m3


def net_vertical_force(
    mass_kg: float,
    volume_m3: float,
    fluid_density_kg_m3: float = WATER_DENSITY_KG_M3,
    g_m_s2: float = STANDARD_GRAVITY,
) -> float:
    """Buoyant force minus weight; positive means the body floats."""
    if mass_kg <= 0:
        raise ValueError("mass must be positive")
    return buoyant_force(volume_m3, fluid_density_kg_m3, g_m_s2) - mass_kg * g_m_s2


def classify(net_force_n: float, neutral_band_n: float = NEUTRAL_BAND_N) -> str:
    if net_force_n > neutral_band_n:
        return "floats"
    if net_force_n < -neutral_band_n:
        return "sinks"
    return "neutral"


def torus_volume(minor_diameter_m: float, major_diameter_m: float) -> float:
    """Volume of a torus given tube (minor) and centerline-circle (major) diameters.

    V = 2 pi^2 r^2 R with r, R the corresponding radii.  A zero minor
    diameter is the degenerate zero-volume ring.
    """
    if minor_diameter_m < 0 or major_diameter_m <= 0:
        raise GeometryError("diameters must be positive (minor may be zero)")
    if minor_diameter_m >= major_diameter_m and minor_diameter_m > 0:
        raise GeometryError("minor diameter must be smaller than major diameter")
    r = minor_diameter_m / 2.0
    big_r = major_diameter_m / 2.0
    return 2.0 * math.pi**2 * r**2 * big_r


def solve_bladder_geometry(
    target_volume_m3: float,
    major_diameter_m: float,
    max_major_diameter_m: float = SYSTEM_MAX_DIAMETER_M,
) -> float:
    """Minor diameter giving the target torus volume at a chosen major diameter.

    Closed form r = sqrt(V / (2 pi^2 R)); infeasible when the required tube
    would be as wide as the ring it sits on.
    """
    if target_volume_m3 < 0:
        raise GeometryError("target volume must be >= 0")
    if major_diameter_m <= 0:
        raise GeometryError("major diameter must be positive")
    if major_diameter_m > max_major_diameter_m:
        raise GeometryError(
            f"major diameter {major_diameter_m} m exceeds the "
            f"{max_major_diameter_m} m envelope"
        )
    r = math.sqrt(target_volume_m3 / (2.0 * math.pi**2 * (major_diameter_m / 2.0)))
    minor = 2.0 * r
    if minor >= major_diameter_m:
        raise GeometryError(
            f"target volume {target_volume_m3} m3 needs minor diameter "
            f"{minor:.4f} m >= major {major_diameter_m} m; pick a larger major diameter"
        )
    return minor


@dataclass(frozen=True)
class FlatPattern:
    """The 2-D textile ring that inflates into the target torus."""

    outer_textile_diameter_m: float
    inner_textile_diameter_m: float
    seam_allowance_m: float = 0.0

    def __post_init__(self) -> None:
        if not self.outer_textile_diameter_m >= self.inner_textile_diameter_m > 0:
            raise GeometryError("flat pattern needs outer >= inner > 0")


def flat_pattern(
    major_diameter_m: float,
    minor_diameter_m: float,
    seam_allowance_m: float = 0.0,
) -> FlatPattern:
    """Textile ring diameters: D_major +/- (pi/2) D_minor, plus seam allowance.

    Rejected as unmanufacturable when the inner diameter would close up,
    i.e. exactly when (pi/2) * minor >= major.
    """
    if minor_diameter_m < 0 or major_diameter_m <= 0:
        raise GeometryError("diameters must be positive (minor may be zero)")
    if seam_allowance_m < 0:
        raise GeometryError("seam allowance must be >= 0")
    half_arc = math.pi / 2.0 * minor_diameter_m
    inner = major_diameter_m - half_arc
    if inner <= 0 and minor_diameter_m > 0:
        raise GeometryError(
            "unmanufacturable flat pattern: inner diameter closes up when "
            "(pi/2) * minor >= major"
        )
    return FlatPattern(
        major_diameter_m + half_arc + 2.0 * seam_allowance_m,
        inner - 2.0 * seam_allowance_m,
        seam_allowance_m,
    )


def torus_from_flat_pattern(pattern: FlatPattern) -> tuple[float, float]:
    """Recover (major, minor) diameters from a flat pattern (inverse map)."""
    outer = pattern.outer_textile_diameter_m - 2.0 * pattern.seam_allowance_m
    inner = pattern.inner_textile_diameter_m + 2.0 * pattern.seam_allowance_m
    major = (outer + inner) / 2.0
    minor = (outer - inner) / math.pi
    return major, minor


def required_bladder_force(
    segment_rows: Iterable[tuple[float, float]],
    margin_fraction: float = 0.05,
    fluid_density_kg_m3: float = WATER_DENSITY_KG_M3,
    g_m_s2: float = STANDARD_GRAVITY,
) -> float:
    """Bladder force set point for a segment stack (segment plus its shells).

    The deficit is how far below neutral the stack sits; the margin adds the
    requested fraction of the stack's displaced-water weight so the robot
    ends up positively buoyant by that fraction, not merely neutral.
    """
    if margin_fraction < 0:
        raise ValueError("margin fraction must be >= 0")
    rows = list(segment_rows)
    net = sum(net_vertical_force(m, v, fluid_density_kg_m3, g_m_s2) for m, v in rows)
    displaced_weight = buoyant_force(sum(v for _, v in rows), fluid_density_kg_m3, g_m_s2)
    return max(0.0, -net + margin_fraction * displaced_weight)


def buffered_bladder_force(setpoint_n: float, buffer_fraction: float = 0.05) -> float:
    """Sizing buffer on top of the set point (bag never quite reaches ideal)."""
    if buffer_fraction < 0:
        raise ValueError("buffer fraction must be >= 0")
    return setpoint_n * (1.0 + buffer_fraction)


def bladder_volume_for_force(
    force_n: float,
    fluid_density_kg_m3: float = WATER_DENSITY_KG_M3,
    g_m_s2: float = STANDARD_GRAVITY,
) -> float:
    """Displaced volume whose water weight equals the requested force."""
    if force_n < 0:
        raise ValueError("force must be >= 0")
    return force_n / (fluid_density_kg_m3 * g_m_s2)


@dataclass(frozen=True)
class BuoyancyReportRow:
    item: str
    weight_n: float
    buoyant_force_n: float
    net_force_n: float
    buoyancy_fraction: float
    classification: str


@dataclass(frozen=True)
class BuoyancyReport:
    rows: tuple[BuoyancyReportRow, ...]
    total_weight_n: float
    total_buoyant_n: float
    total_net_n: float
    classification: str


def _row(item: str, mass_kg: float, volume_m3: float, rho: float, g: float) -> BuoyancyReportRow:
    weight = mass_kg * g
    buoyant = rho * g * volume_m3
    net = buoyant - weight
    return BuoyancyReportRow(item, weight, buoyant, net, buoyant / weight, classify(net))


def assembly_buoyancy_report(
    assembly: "RobotAssembly",
    bladder_fill_fractions: float | Sequence[float] = 0.0,
) -> BuoyancyReport:
    """Per-item buoyancy rows plus whole-robot totals.

    Bladder displaced volume scales linearly with its fill fraction; a scalar
    fill applies to every bladder, a sequence maps onto the assembly's slot
    order (see ``RobotAssembly.bladder_slot_names``).
    """
    slots = assembly.bladder_slot_names()
    if isinstance(bladder_fill_fractions, (int, float)):
        fills = [float(bladder_fill_fractions)] * len(slots)
    else:
        fills = [float(f) for f in bladder_fill_fractions]
        if len(fills) != len(slots):
            raise ValueError(f"expected {len(slots)} fill fractions, got {len(fills)}")
    if any(not 0.0 <= f <= 1.0 for f in fills):
        raise ValueError("fill fractions must be within [0, 1]")

    rho, g = assembly.fluid_density_kg_m3, assembly.g_m_s2
    rows: list[BuoyancyReportRow] = []
    for seg in assembly.segments:
        rows.append(_row(seg.name, seg.mass_kg + seg.ballast_kg, seg.displaced_volume_m3, rho, g))
        for i, shell in enumerate(seg.shells):
            label = "marine shell" if shell.foam_filled else "shell"
            rows.append(_row(f"{seg.name} {label} {i}", shell.mass_kg, shell.displaced_volume_m3, rho, g))
    for slot, fill in zip(slots, fills):
        rows.append(
            _row(
                f"bladder {slot}",
                assembly.bladder.empty_mass_kg,
                assembly.bladder.full_volume_m3 * fill,
                rho,
                g,
            )
        )
    total_weight = sum(r.weight_n for r in rows)
    total_buoyant = sum(r.buoyant_force_n for r in rows)
    total_net = sum(r.net_force_n for r in rows)
    return BuoyancyReport(tuple(rows), total_weight, total_buoyant, total_net, classify(total_net))


def net_buoyant_force(assembly: "RobotAssembly", bladder_fill_fractions: float | Sequence[float]) -> float:
    """Whole-robot net vertical force (up positive) at the given bladder fills.

    Same physics as the report totals, kept lightweight for the dynamics loop.
    """
    slots = assembly.bladder_slot_names()
    if isinstance(bladder_fill_fractions, (int, float)):
        fills: Sequence[float] = [float(bladder_fill_fractions)] * len(slots)
    else:
        fills = bladder_fill_fractions
    rho, g = assembly.fluid_density_kg_m3, assembly.g_m_s2
    net = 0.0
    for seg in assembly.segments:
        net += rho * g * seg.displaced_volume_m3 - (seg.mass_kg + seg.ballast_kg) * g
        for shell in seg.shells:
            net += rho * g * shell.displaced_volume_m3 - shell.mass_kg * g
    for fill in fills:
        net += rho * g * assembly.bladder.full_volume_m3 * fill - assembly.bladder.empty_mass_kg * g
    return net


def report_csv(report: BuoyancyReport) -> str:
    """CSV rendering: item,weight_n,buoyant_n,net_n,fraction,class."""
    lines = ["item,weight_n,buoyant_n,net_n,fraction,class"]
    for r in report.rows:
        lines.append(
            f"{r.item},{r.weight_n:.6g},{r.buoyant_force_n:.6g},"
            f"{r.net_force_n:.6g},{r.buoyancy_fraction:.6g},{r.classification}"
        )
    lines.append(
        f"TOTAL,{report.total_weight_n:.6g},{report.total_buoyant_n:.6g},"
        f"{report.total_net_n:.6g},{report.total_buoyant_n / report.total_weight_n:.6g},"
        f"{report.classification}"
    )
    return "\n".join(lines) + "\n"


def report_table(report: BuoyancyReport) -> str:
    """Aligned text table of the report."""
    header = ("item", "weight N", "buoyant N", "net N", "fraction", "class")
    body = [
        (r.item, f"{r.weight_n:.2f}", f"{r.buoyant_force_n:.2f}", f"{r.net_force_n:.2f}",
         f"{r.buoyancy_fraction:.3f}", r.classification)
        for r in report.rows
    ]
    body.append(
        ("TOTAL", f"{report.total_weight_n:.2f}", f"{report.total_buoyant_n:.2f}",
         f"{report.total_net_n:.2f}",
         f"{report.total_buoyant_n / report.total_weight_n:.3f}", report.classification)
    )
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    def fmt(row: tuple[str, ...]) -> str:
        return "  ".join(col.ljust(w) for col, w in zip(row, widths)).rstrip()
    rule = "-" * (sum(widths) + 2 * (len(widths) - 1))
    return "\n".join([fmt(header), rule, *map(fmt, body)]) + "\n"
