"""Core domain types and manifest ingestion.

A robot assembly is described by a single TOML manifest in which every
physical quantity carries a unit suffix ("5.386 kg", "0.15 bar").  Values are
converted to SI exactly once, here.  All types are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

try:
    import tomllib  # Python >= 3.11
except ImportError:
    import tomli as tomllib

from .dynamics import HydroParams
from .hydrostatics import net_vertical_force, torus_volume
from .kinematics import DrivetrainSpec, HysteresisModel, JointSpec
from .pneumatics import Branch, PneumaticNetwork, TubeRun
from .units import UnitError, parse_quantity, psi_to_pa

# Platform defaults used when the manifest omits a value.
DEFAULT_SEGMENT_LENGTH_M = 0.441
DEFAULT_POWER_LIMIT_SEGMENT_W = 240.0
DEFAULT_POWER_LIMIT_SYSTEM_W = 960.0
DEFAULT_INTERNAL_PRESSURE_PA = psi_to_pa(6.0)
MAX_SETTLE_PRESSURE_PA = psi_to_pa(5.0)
REPORTED_FORCE_TOLERANCE = 0.02

# Calibrated vertical-dynamics constants (see calibrate.fit_hydro_params).
DEFAULT_QUADRATIC_DRAG = 2.0
DEFAULT_ADDED_MASS_KG = 1202.0
DEFAULT_TANK_DEPTH_M = 1.5


class ManifestError(ValueError):
    """Manifest parse failure or invariant violation, naming the bad field."""


@dataclass(frozen=True)
class ShellSpec:
    """A screw shell contributing displacement (foam-filled ones float)."""

    mass_kg: float
    displaced_volume_m3: float
    foam_filled: bool = False
    reported_net_force_n: float | None = None

    def __post_init__(self) -> None:
        if self.mass_kg <= 0:
            raise ManifestError("shell mass_kg must be > 0")
        if self.displaced_volume_m3 <= 0:
            raise ManifestError("shell displaced_volume_m3 must be > 0")


@dataclass(frozen=True)
class SegmentSpec:
    """One robot segment; ballast is the weight added to make it sink."""

    name: str
    mass_kg: float
    displaced_volume_m3: float
    ballast_kg: float = 0.0
    shells: tuple[ShellSpec, ...] = ()
    bladder_slots: int = 0
    reported_net_force_n: float | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ManifestError("segment name must be non-empty")
        if self.mass_kg <= 0:
            raise ManifestError(f"segment {self.name!r}: mass_kg must be > 0")
        if self.displaced_volume_m3 <= 0:
            raise ManifestError(f"segment {self.name!r}: displaced_volume_m3 must be > 0")
        if self.ballast_kg < 0:
            raise ManifestError(f"segment {self.name!r}: ballast_kg must be >= 0")
        if not 0 <= self.bladder_slots <= 2:
            raise ManifestError(
                f"segment {self.name!r}: bladder_slots must be 0..2 "
                "(at most two bladders fit over each joint)"
            )


@dataclass(frozen=True)
class BladderSpec:
    """Torus swim bladder; full volume is derived from the two diameters."""

    minor_diameter_m: float
    major_diameter_m: float
    empty_mass_kg: float
    settle_pressure_gauge_pa: float
    reported_net_force_n: float | None = None
    full_volume_m3: float = field(init=False)

    def __post_init__(self) -> None:
        if not 0 < self.minor_diameter_m < self.major_diameter_m:
            raise ManifestError("bladder needs 0 < minor_diameter < major_diameter")
        if self.empty_mass_kg <= 0:
            raise ManifestError("bladder empty_mass_kg must be > 0")
        if not 0 < self.settle_pressure_gauge_pa <= MAX_SETTLE_PRESSURE_PA:
            raise ManifestError(
                "bladder settle_pressure must be within (0, 5 psi] gauge"
            )
        object.__setattr__(
            self,
            "full_volume_m3",
            torus_volume(self.minor_diameter_m, self.major_diameter_m),
        )


@dataclass(frozen=True)
class RobotAssembly:
    """Validated whole-robot description; the root object everything else takes."""

    name: str
    segments: tuple[SegmentSpec, ...]
    bladder: BladderSpec
    joints: JointSpec
    drivetrain: DrivetrainSpec
    hysteresis: HysteresisModel
    pneumatics: PneumaticNetwork | None
    hydro: HydroParams
    fluid_density_kg_m3: float = 1000.0
    g_m_s2: float = 9.81
    segment_length_m: float = DEFAULT_SEGMENT_LENGTH_M
    internal_pressure_gauge_pa: float = DEFAULT_INTERNAL_PRESSURE_PA
    power_limit_segment_w: float = DEFAULT_POWER_LIMIT_SEGMENT_W
    power_limit_system_w: float = DEFAULT_POWER_LIMIT_SYSTEM_W
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.segments:
            raise ManifestError("assembly needs at least one segment")
        names = [s.name for s in self.segments]
        if len(set(names)) != len(names):
            raise ManifestError("segment names must be unique")
        if self.fluid_density_kg_m3 <= 0 or self.g_m_s2 <= 0:
            raise ManifestError("fluid_density and g must be positive")
        if self.segment_length_m <= 0:
            raise ManifestError("segment_length must be positive")

    def bladder_slot_names(self) -> list[str]:
        """Canonical bladder order: segment order, then slot index."""
        return [
            f"{seg.name}:{i}" for seg in self.segments for i in range(seg.bladder_slots)
        ]

    @property
    def joint_count(self) -> int:
        return len(self.segments) - 1


def _take(table: Mapping, allowed: set[str], ctx: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ManifestError(f"{ctx}: unknown key(s) {sorted(unknown)}")


def _quantity(table: Mapping, key: str, dimension: str, ctx: str, default=None) -> float:
    if key not in table:
        if default is None:
            raise ManifestError(f"{ctx}: missing required key {key!r}")
        return default
    try:
        return parse_quantity(table[key], dimension)
    except UnitError as exc:
        raise ManifestError(f"{ctx}.{key}: {exc}") from None


def _number(table: Mapping, key: str, ctx: str, default=None) -> float:
    if key not in table:
        if default is None:
            raise ManifestError(f"{ctx}: missing required key {key!r}")
        return default
    value = table[key]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ManifestError(f"{ctx}.{key}: expected a plain number, got {value!r}")
    return float(value)


def load_assembly(config_document: str) -> RobotAssembly:
    """Parse and validate a manifest document into a RobotAssembly.

    Every quantity must carry a unit suffix; defaults fill anything the
    document omits.  Mismatches between computed buoyancy and any
    ``reported_buoyancy`` entries become warnings on the assembly, never
    errors.
    """
    try:
        doc = tomllib.loads(config_document)
    except tomllib.TOMLDecodeError as exc:
        raise ManifestError(f"manifest parse error: {exc}") from None

    _take(
        doc,
        {"robot", "segments", "bladder", "joints", "hysteresis", "drivetrain",
         "hydro", "pneumatics"},
        "manifest",
    )

    robot = doc.get("robot", {})
    _take(
        robot,
        {"name", "fluid_density", "g", "segment_length", "internal_pressure",
         "power_limit_segment", "power_limit_system"},
        "robot",
    )
    fluid_density = _quantity(robot, "fluid_density", "density", "robot", 1000.0)
    g = _quantity(robot, "g", "acceleration", "robot", 9.81)

    segments = _load_segments(doc.get("segments", []))
    if not segments:
        raise ManifestError("assembly needs at least one segment")
    bladder = _load_bladder(doc.get("bladder", {}))
    joints = _load_joints(doc.get("joints", {}))
    hysteresis = _load_hysteresis(doc.get("hysteresis", {}))
    drivetrain = _load_drivetrain(doc.get("drivetrain", {}))
    hydro = _load_hydro(doc.get("hydro", {}))
    pneumatics = _load_pneumatics(doc.get("pneumatics"), segments, bladder)

    warnings = _cross_check_reported_forces(segments, bladder, fluid_density, g)
    return RobotAssembly(
        name=str(robot.get("name", "unnamed")),
        segments=segments,
        bladder=bladder,
        joints=joints,
        drivetrain=drivetrain,
        hysteresis=hysteresis,
        pneumatics=pneumatics,
        hydro=hydro,
        fluid_density_kg_m3=fluid_density,
        g_m_s2=g,
        segment_length_m=_quantity(robot, "segment_length", "length", "robot", DEFAULT_SEGMENT_LENGTH_M),
        internal_pressure_gauge_pa=_quantity(
            robot, "internal_pressure", "pressure", "robot", DEFAULT_INTERNAL_PRESSURE_PA
        ),
        power_limit_segment_w=_quantity(
            robot, "power_limit_segment", "power", "robot", DEFAULT_POWER_LIMIT_SEGMENT_W
        ),
        power_limit_system_w=_quantity(
            robot, "power_limit_system", "power", "robot", DEFAULT_POWER_LIMIT_SYSTEM_W
        ),
        warnings=warnings,
    )


def load_assembly_file(path: str | Path) -> RobotAssembly:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from None
    return load_assembly(text)


def default_assembly() -> RobotAssembly:
    """The manifest shipped with the package (transcribes the design tables)."""
    from importlib.resources import files

    return load_assembly(files("snakeforge.data").joinpath("default_assembly.toml").read_text())


def _load_segments(raw: Sequence[Mapping]) -> tuple[SegmentSpec, ...]:
    segments = []
    for i, seg in enumerate(raw):
        ctx = f"segments[{i}]"
        _take(
            seg,
            {"name", "mass", "ballast", "displaced_volume", "bladder_slots",
             "shells", "reported_buoyancy"},
            ctx,
        )
        shells = []
        for j, sh in enumerate(seg.get("shells", [])):
            sctx = f"{ctx}.shells[{j}]"
            _take(sh, {"mass", "displaced_volume", "foam_filled", "reported_buoyancy"}, sctx)
            shells.append(
                ShellSpec(
                    mass_kg=_quantity(sh, "mass", "mass", sctx),
                    displaced_volume_m3=_quantity(sh, "displaced_volume", "volume", sctx),
                    foam_filled=bool(sh.get("foam_filled", False)),
                    reported_net_force_n=(
                        _quantity(sh, "reported_buoyancy", "force", sctx)
                        if "reported_buoyancy" in sh else None
                    ),
                )
            )
        slots = seg.get("bladder_slots", 0)
        if not isinstance(slots, int) or isinstance(slots, bool):
            raise ManifestError(f"{ctx}.bladder_slots: expected an integer")
        segments.append(
            SegmentSpec(
                name=str(seg.get("name", f"segment{i}")),
                mass_kg=_quantity(seg, "mass", "mass", ctx),
                displaced_volume_m3=_quantity(seg, "displaced_volume", "volume", ctx),
                ballast_kg=_quantity(seg, "ballast", "mass", ctx, 0.0),
                shells=tuple(shells),
                bladder_slots=slots,
                reported_net_force_n=(
                    _quantity(seg, "reported_buoyancy", "force", ctx)
                    if "reported_buoyancy" in seg else None
                ),
            )
        )
    return tuple(segments)


def _load_bladder(raw: Mapping) -> BladderSpec:
    ctx = "bladder"
    _take(
        raw,
        {"minor_diameter", "major_diameter", "empty_mass", "settle_pressure",
         "reported_buoyancy"},
        ctx,
    )
    return BladderSpec(
        minor_diameter_m=_quantity(raw, "minor_diameter", "length", ctx, 0.0601851),
        major_diameter_m=_quantity(raw, "major_diameter", "length", ctx, 0.16),
        empty_mass_kg=_quantity(raw, "empty_mass", "mass", ctx, 0.02),
        settle_pressure_gauge_pa=_quantity(raw, "settle_pressure", "pressure", ctx, 15000.0),
        reported_net_force_n=(
            _quantity(raw, "reported_buoyancy", "force", ctx)
            if "reported_buoyancy" in raw else None
        ),
    )


def _load_joints(raw: Mapping) -> JointSpec:
    _take(raw, {"pitch_limit", "yaw_limit"}, "joints")
    return JointSpec(
        pitch_limit_rad=_quantity(raw, "pitch_limit", "angle", "joints", math.pi / 2),
        yaw_limit_rad=_quantity(raw, "yaw_limit", "angle", "joints", math.pi / 2),
    )


def _load_hysteresis(raw: Mapping) -> HysteresisModel:
    _take(raw, {"width_intercept", "width_slope"}, "hysteresis")
    # widths are handled in degrees/lbs end to end; no SI conversion here
    intercept = raw.get("width_intercept", "1.94 deg")
    slope = raw.get("width_slope", "0.354 deg/lb")
    try:
        i_val, i_unit = intercept.split()
        s_val, s_unit = slope.split()
    except (ValueError, AttributeError):
        raise ManifestError("hysteresis: expected '<number> deg' / '<number> deg/lb'") from None
    if i_unit != "deg" or s_unit != "deg/lb":
        raise ManifestError("hysteresis: width_intercept must be deg, width_slope deg/lb")
    return HysteresisModel(float(i_val), float(s_val))


def _load_drivetrain(raw: Mapping) -> DrivetrainSpec:
    ctx = "drivetrain"
    _take(
        raw,
        {"motor_max_torque", "gear_ratio", "effective_screw_radius",
         "ujoint_internal_ratio", "ujoint_external_ratio"},
        ctx,
    )
    return DrivetrainSpec(
        motor_max_torque_nm=_quantity(raw, "motor_max_torque", "torque", ctx, 1.5),
        gear_ratio=_number(raw, "gear_ratio", ctx, 7.0),
        effective_screw_radius_m=_quantity(raw, "effective_screw_radius", "length", ctx, 0.09),
        ujoint_internal_ratio=_number(raw, "ujoint_internal_ratio", ctx, 5.0),
        ujoint_external_ratio=_number(raw, "ujoint_external_ratio", ctx, 1.8),
    )


def _load_hydro(raw: Mapping) -> HydroParams:
    ctx = "hydro"
    _take(raw, {"quadratic_drag", "added_mass", "tank_depth"}, ctx)
    return HydroParams(
        quadratic_drag_n_s2_m2=_quantity(raw, "quadratic_drag", "drag", ctx, DEFAULT_QUADRATIC_DRAG),
        added_mass_kg=_quantity(raw, "added_mass", "mass", ctx, DEFAULT_ADDED_MASS_KG),
        tank_depth_m=_quantity(raw, "tank_depth", "length", ctx, DEFAULT_TANK_DEPTH_M),
    )


def _load_pneumatics(
    raw: Mapping | None, segments: tuple[SegmentSpec, ...], bladder: BladderSpec
) -> PneumaticNetwork | None:
    ctx = "pneumatics"
    valid_slots = {
        f"{seg.name}:{i}" for seg in segments for i in range(seg.bladder_slots)
    }
    if raw is None:
        if valid_slots:
            raise ManifestError(
                f"{ctx}: segments declare bladder slots but no [pneumatics] section exists"
            )
        return None
    _take(raw, {"regulator_pressure", "air_density", "compressor_limit", "branches"}, ctx)
    compressor = _quantity(raw, "compressor_limit", "pressure", ctx, psi_to_pa(15.0))
    regulator = _quantity(raw, "regulator_pressure", "pressure", ctx, psi_to_pa(2.9))

    branches: dict[str, Branch] = {}
    assigned: set[str] = set()
    if "branches" not in raw:
        raise ManifestError(f"{ctx}.branches: at least one branch must be configured")
    for name, braw in raw["branches"].items():
        bctx = f"{ctx}.branches.{name}"
        _take(braw, {"bladders", "flow_resistance", "valve", "tubes"}, bctx)
        slots = tuple(braw.get("bladders", ()))
        for slot in slots:
            if slot not in valid_slots:
                raise ManifestError(
                    f"{bctx}.bladders: {slot!r} does not name a declared bladder slot"
                )
            if slot in assigned:
                raise ManifestError(f"{bctx}.bladders: slot {slot!r} assigned twice")
            assigned.add(slot)
        tubes = []
        for k, traw in enumerate(braw.get("tubes", [])):
            tctx = f"{bctx}.tubes[{k}]"
            _take(traw, {"length", "inner_diameter", "friction_factor", "loss_coefficients"}, tctx)
            tubes.append(
                TubeRun(
                    length_m=_quantity(traw, "length", "length", tctx),
                    inner_diameter_m=_quantity(traw, "inner_diameter", "length", tctx),
                    darcy_friction_factor=_number(traw, "friction_factor", tctx),
                    minor_loss_coefficients=tuple(traw.get("loss_coefficients", ())),
                )
            )
        valve = braw.get("valve", "closed")
        if valve not in ("open", "closed"):
            raise ManifestError(f"{bctx}.valve: expected 'open' or 'closed'")
        branches[name] = Branch(
            name=name,
            tubes=tuple(tubes),
            bladder_slots=slots,
            bladder_volume_m3=bladder.full_volume_m3,
            settle_gauge_pa=bladder.settle_pressure_gauge_pa,
            flow_resistance_pa_s_m3=_quantity(braw, "flow_resistance", "flow_resistance", bctx),
            valve_open=valve == "open",
        )
    missing = valid_slots - assigned
    if missing:
        raise ManifestError(
            f"{ctx}: bladder slot(s) {sorted(missing)} not assigned to any branch"
        )
    return PneumaticNetwork(
        regulator_gauge_pa=regulator,
        branches=branches,
        air_density_kg_m3=_quantity(raw, "air_density", "density", ctx, 1.2),
        compressor_limit_gauge_pa=compressor,
    )


def _cross_check_reported_forces(
    segments: tuple[SegmentSpec, ...],
    bladder: BladderSpec,
    fluid_density: float,
    g: float,
) -> tuple[str, ...]:
    """Compare computed net forces against any printed values in the manifest."""
    warnings = []

    def check(label: str, mass: float, volume: float, reported: float | None) -> None:
        if reported is None:
            return
        computed = net_vertical_force(mass, volume, fluid_density, g)
        scale = max(abs(reported), 1e-9)
        if abs(computed - reported) / scale > REPORTED_FORCE_TOLERANCE:
            warnings.append(
                f"{label}: reported net force {reported:+.1f} N disagrees with "
                f"mass/volume ({computed:+.2f} N); computing from mass/volume"
            )

    for seg in segments:
        check(f"segment {seg.name!r}", seg.mass_kg + seg.ballast_kg,
              seg.displaced_volume_m3, seg.reported_net_force_n)
        for j, shell in enumerate(seg.shells):
            check(f"segment {seg.name!r} shell {j}", shell.mass_kg,
                  shell.displaced_volume_m3, shell.reported_net_force_n)
    check("bladder", bladder.empty_mass_kg, bladder.full_volume_m3,
          bladder.reported_net_force_n)
    return tuple(warnings)


@dataclass(frozen=True)
class PowerBudgetRow:
    segment: str
    draw_w: float
    limit_w: float
    ok: bool


@dataclass(frozen=True)
class PowerBudgetReport:
    rows: tuple[PowerBudgetRow, ...]
    system_draw_w: float
    system_limit_w: float
    system_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.system_ok and all(r.ok for r in self.rows)


def power_budget_check(
    assembly: RobotAssembly,
    per_actuator_draw_w: float | Sequence | Mapping[str, float | Sequence[float]],
) -> PowerBudgetReport:
    """Flag per-segment and whole-system electrical draw against the rated limits.

    Draw can be a scalar (same total for every segment), a sequence aligned
    with the segment order, or a mapping of segment name to a total or a list
    of per-actuator draws.  Report-only: limits violations never raise.
    """
    def as_total(value, ctx: str) -> float:
        if isinstance(value, (int, float)):
            total = float(value)
        else:
            total = float(sum(value))
        if total < 0 or (not isinstance(value, (int, float)) and any(v < 0 for v in value)):
            raise ValueError(f"{ctx}: actuator draws must be >= 0")
        return total

    names = [s.name for s in assembly.segments]
    if isinstance(per_actuator_draw_w, Mapping):
        unknown = set(per_actuator_draw_w) - set(names)
        if unknown:
            raise ValueError(f"unknown segment name(s) in draws: {sorted(unknown)}")
        totals = [as_total(per_actuator_draw_w.get(n, 0.0), n) for n in names]
    elif isinstance(per_actuator_draw_w, (int, float)):
        totals = [as_total(per_actuator_draw_w, n) for n in names]
    else:
        draws = list(per_actuator_draw_w)
        if len(draws) != len(names):
            raise ValueError(f"expected {len(names)} per-segment draws, got {len(draws)}")
        totals = [as_total(d, n) for n, d in zip(names, draws)]

    rows = tuple(
        PowerBudgetRow(n, t, assembly.power_limit_segment_w, t <= assembly.power_limit_segment_w)
        for n, t in zip(names, totals)
    )
    system = sum(totals)
    return PowerBudgetReport(
        rows, system, assembly.power_limit_system_w, system <= assembly.power_limit_system_w
    )
