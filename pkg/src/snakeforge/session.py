"""Deterministic simulation sessions, scenario files, telemetry, and replay.

One session owns one robot's state and advances only at tick boundaries;
commands queue up and apply at the start of a tick.  Everything downstream
(the live service, the batch `simulate` subcommand, log replay) drives this
same class, which is what makes a recorded command log reproduce the service
telemetry bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

try:
    import tomllib
except ImportError:
    import tomli as tomllib

from . import kinematics
from .dynamics import VerticalState, step
from .kinematics import GaitError, JointState, apply_hysteresis
from .model import RobotAssembly
from .pneumatics import fill_rate
from .units import UnitError, parse_quantity

PROTOCOL_VERSION = 1

TELEMETRY_FIELDS = (
    "tick",
    "t_s",
    "depth_m",
    "velocity_m_s",
    "acceleration_m_s2",
    "fill_front",
    "fill_rear",
    "joint_pitch_rad",
    "joint_yaw_rad",
    "screw_speeds_rad_s",
    "gait",
)


class CommandError(Exception):
    """A rejected operator command; the session state is left untouched."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass(frozen=True)
class ScenarioEvent:
    t_s: float
    command: dict


@dataclass(frozen=True)
class Scenario:
    """Initial state plus time-stamped commands for a headless run."""

    name: str = "default"
    dt_s: float = 0.05
    horizon_s: float = 30.0
    initial_depth_m: float = 0.0
    initial_velocity_m_s: float = 0.0
    initial_fills: Mapping[str, float] = field(default_factory=dict)
    events: tuple[ScenarioEvent, ...] = ()

    def tick_count(self) -> int:
        return max(1, int(round(self.horizon_s / self.dt_s)))

    def events_by_tick(self) -> dict[int, list[dict]]:
        """Commands grouped by the tick at whose boundary they apply."""
        grouped: dict[int, list[dict]] = {}
        for ev in self.events:
            tick = max(0, math.ceil(ev.t_s / self.dt_s - 1e-9))
            grouped.setdefault(tick, []).append(ev.command)
        return grouped


def load_scenario(text: str) -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValueError(f"scenario parse error: {exc}") from None
    meta = doc.get("scenario", {})
    fills = {k: float(v) for k, v in doc.get("initial_fills", {}).items()}
    events = []
    for raw in doc.get("events", []):
        raw = dict(raw)
        try:
            t = parse_quantity(raw.pop("t"), "time")
        except KeyError:
            raise ValueError("scenario event needs a 't' timestamp") from None
        if "upstream" in raw:  # unit-suffixed in the file, SI on the wire
            raw["upstream_gauge_pa"] = parse_quantity(raw.pop("upstream"), "pressure")
        events.append(ScenarioEvent(t, raw))
    try:
        return Scenario(
            name=str(meta.get("name", "scenario")),
            dt_s=parse_quantity(meta.get("dt", "0.05 s"), "time"),
            horizon_s=parse_quantity(meta.get("horizon", "30 s"), "time"),
            initial_depth_m=parse_quantity(meta.get("initial_depth", "0 m"), "length"),
            initial_velocity_m_s=parse_quantity(meta.get("initial_velocity", "0 m/s"), "speed"),
            initial_fills=fills,
            events=tuple(events),
        )
    except UnitError as exc:
        raise ValueError(f"scenario: {exc}") from None


def load_scenario_file(path: str | Path) -> Scenario:
    return load_scenario(Path(path).read_text())


def packaged_scenario(name: str) -> Scenario:
    """One of the scenarios shipped with the package (descent, ascent_6psi, ...)."""
    from importlib.resources import files

    return load_scenario(
        files("snakeforge.data").joinpath(f"scenarios/{name}.toml").read_text()
    )


@dataclass(frozen=True)
class TelemetryRecord:
    tick: int
    t_s: float
    depth_m: float
    velocity_m_s: float
    acceleration_m_s2: float
    fill_front: float
    fill_rear: float
    joint_pitch_rad: tuple[float, ...]
    joint_yaw_rad: tuple[float, ...]
    screw_speeds_rad_s: tuple[float, ...]
    gait: str | None

    def as_vertical_state(self) -> VerticalState:
        return VerticalState(self.depth_m, self.velocity_m_s, self.acceleration_m_s2, self.t_s)


def serialize_telemetry(record: TelemetryRecord) -> str:
    """Canonical wire form; stable field order so replays compare bytewise."""
    payload: dict = {"type": "telemetry"}
    for name in TELEMETRY_FIELDS:
        value = getattr(record, name)
        if isinstance(value, tuple):
            value = list(value)
        payload[name] = value
    return json.dumps(payload, separators=(",", ":"))


class _ValveState:
    __slots__ = ("open", "upstream_gauge_pa")

    def __init__(self) -> None:
        self.open = False
        self.upstream_gauge_pa: float | None = None  # None -> network regulator


class SimSession:
    """One robot instance stepped at a fixed dt; single-writer only."""

    def __init__(self, assembly: RobotAssembly, dt_s: float, scenario: Scenario | None = None):
        if assembly.pneumatics is None or not {"front", "rear"} <= set(
            assembly.pneumatics.branches
        ):
            raise ValueError("a session needs an assembly with front and rear branches")
        if not 0.0 < dt_s <= 1.0:
            raise ValueError("session dt must be in (0, 1] s")
        self.assembly = assembly
        self.dt_s = dt_s
        self.scenario = scenario or Scenario(dt_s=dt_s)
        self.tick = 0
        self._slots = assembly.bladder_slot_names()
        self._slot_branch = {
            slot: name
            for name, branch in assembly.pneumatics.branches.items()
            for slot in branch.bladder_slots
        }
        # physics substeps keep the integrator inside its stable step bound
        self._substeps = max(1, math.ceil(dt_s / 0.05 - 1e-9))
        self._reset_state()

    def _reset_state(self) -> None:
        sc = self.scenario
        self.vertical = VerticalState(
            sc.initial_depth_m, sc.initial_velocity_m_s, 0.0, self.tick * self.dt_s
        )
        self.fills = {name: 0.0 for name in self.assembly.pneumatics.branches}
        for name, value in sc.initial_fills.items():
            if name not in self.fills:
                raise ValueError(f"scenario initial fill for unknown branch {name!r}")
            if not 0.0 <= value <= 1.0:
                raise ValueError("initial fills must be within [0, 1]")
            self.fills[name] = value
        self.valves = {name: _ValveState() for name in self.fills}
        self.joints = [JointState() for _ in range(self.assembly.joint_count)]
        self.gait: dict | None = None
        self._screw_override: float | None = None

    # -- commands ----------------------------------------------------------

    def apply_command(self, command: Mapping) -> None:
        """Validate and apply one command at the current tick boundary."""
        if not isinstance(command, Mapping) or "action" not in command:
            raise CommandError("bad-command", "command must be an object with an 'action'")
        action = command["action"]
        if action == "valve":
            self._apply_valve(command)
        elif action == "gait":
            self._apply_gait(command)
        elif action == "screw":
            self._apply_screw(command)
        elif action == "reset":
            self._reset_state()
        else:
            raise CommandError("unknown-action", f"unknown action {action!r}")

    def _apply_valve(self, command: Mapping) -> None:
        branch = command.get("branch")
        if branch not in self.valves:
            raise CommandError("bad-branch", f"unknown branch {branch!r}")
        if not isinstance(command.get("open"), bool):
            raise CommandError("bad-params", "valve command needs boolean 'open'")
        upstream = command.get("upstream_gauge_pa")
        if upstream is not None:
            limit = self.assembly.pneumatics.compressor_limit_gauge_pa
            if not isinstance(upstream, (int, float)) or not 0.0 <= upstream <= limit:
                raise CommandError(
                    "bad-params", f"upstream pressure must be within [0, {limit:.0f}] Pa"
                )
        valve = self.valves[branch]
        valve.open = command["open"]
        valve.upstream_gauge_pa = None if upstream is None else float(upstream)

    _GAIT_PARAMS = {
        "screwing": {"turn_radius_m", "screw_speed_rad_s"},
        "wheeling": {"ground_speed_m_s", "slip"},
        "sidewinding": {
            "amplitude_pitch_rad",
            "amplitude_yaw_rad",
            "frequency_hz",
            "phase_lag_rad",
        },
    }

    def _apply_gait(self, command: Mapping) -> None:
        mode = command.get("mode")
        if mode not in self._GAIT_PARAMS:
            raise CommandError("bad-params", f"unknown gait mode {mode!r}")
        params = {k: v for k, v in command.items() if k not in ("action", "type", "mode")}
        unknown = set(params) - self._GAIT_PARAMS[mode]
        if unknown:
            raise CommandError(
                "bad-params", f"unknown {mode} parameter(s): {sorted(unknown)}"
            )
        try:  # evaluate once now so limit violations bounce instead of latching
            self._gait_command(mode, params, (self.tick + 1) * self.dt_s)
        except GaitError as exc:
            raise CommandError("limit", str(exc)) from None
        except (KeyError, TypeError, ValueError) as exc:
            raise CommandError("bad-params", f"bad gait parameters: {exc}") from None
        self.gait = {"mode": mode, **params}
        self._screw_override = None

    def _apply_screw(self, command: Mapping) -> None:
        speed = command.get("speed_rad_s")
        if (
            not isinstance(speed, (int, float))
            or not 0.0 <= speed <= kinematics.MAX_SCREW_SPEED_RAD_S
        ):
            raise CommandError(
                "bad-params",
                f"screw speed must be within [0, {kinematics.MAX_SCREW_SPEED_RAD_S:.0f}] rad/s",
            )
        self._screw_override = float(speed)

    def _gait_command(self, mode: str, params: Mapping, t_s: float):
        n = self.assembly.joint_count
        if mode == "screwing":
            radius = params.get("turn_radius_m")
            return kinematics.gait_screwing(
                math.inf if radius is None else float(radius),
                float(params.get("screw_speed_rad_s", 0.0)),
                self.assembly,
                t_s,
            )
        if mode == "wheeling":
            return kinematics.gait_wheeling(
                float(params["ground_speed_m_s"]),
                self.assembly.drivetrain,
                n,
                float(params.get("slip", 0.0)),
                t_s,
            )
        return kinematics.gait_sidewinding(
            float(params.get("amplitude_pitch_rad", 0.0)),
            float(params.get("amplitude_yaw_rad", 0.0)),
            float(params.get("frequency_hz", 0.0)),
            float(params.get("phase_lag_rad", math.pi / 3)),
            t_s,
            n,
            self.assembly.joints,
        )

    # -- stepping ----------------------------------------------------------

    def initial_record(self) -> TelemetryRecord:
        return self._record()

    def advance(self, commands: Iterable[Mapping] = ()) -> TelemetryRecord:
        """Apply queued commands at the boundary, then advance one tick."""
        for command in commands:
            self.apply_command(command)
        t_next = (self.tick + 1) * self.dt_s
        self._advance_fills()
        self._advance_joints(t_next)
        fills = [self.fills[self._slot_branch[slot]] for slot in self._slots]
        state = self.vertical
        sub_dt = self.dt_s / self._substeps
        for _ in range(self._substeps):
            state = step(self.assembly, self.assembly.hydro, fills, state, sub_dt)
        # keep the published clock exactly tick * dt (no accumulated rounding)
        self.vertical = VerticalState(
            state.depth_m, state.velocity_m_s, state.acceleration_m_s2, t_next
        )
        self.tick += 1
        return self._record()

    def _advance_fills(self) -> None:
        for name, branch in self.assembly.pneumatics.branches.items():
            valve = self.valves[name]
            if not valve.open:
                continue
            upstream = (
                self.assembly.pneumatics.regulator_gauge_pa
                if valve.upstream_gauge_pa is None
                else valve.upstream_gauge_pa
            )
            f = self.fills[name] + self.dt_s * fill_rate(branch, self.fills[name], upstream)
            self.fills[name] = min(1.0, max(0.0, f))

    def _advance_joints(self, t_s: float) -> None:
        if self.gait is None:
            return
        params = {k: v for k, v in self.gait.items() if k != "mode"}
        command = self._gait_command(self.gait["mode"], params, t_s)
        for joint, pitch, yaw in zip(self.joints, command.pitch_rad, command.yaw_rad):
            joint.pitch_rad = math.radians(
                apply_hysteresis(
                    math.degrees(pitch), 0.0, self.assembly.hysteresis, joint.pitch_play
                )
            )
            joint.yaw_rad = math.radians(
                apply_hysteresis(
                    math.degrees(yaw), 0.0, self.assembly.hysteresis, joint.yaw_play
                )
            )

    def _screw_speeds(self) -> tuple[float, ...]:
        n = len(self.assembly.segments)
        if self._screw_override is not None:
            return (self._screw_override,) * n
        if self.gait is not None:
            params = {k: v for k, v in self.gait.items() if k != "mode"}
            return self._gait_command(self.gait["mode"], params, self.tick * self.dt_s).screw_speeds_rad_s
        return (0.0,) * n

    def _record(self) -> TelemetryRecord:
        return TelemetryRecord(
            tick=self.tick,
            t_s=self.tick * self.dt_s,
            depth_m=self.vertical.depth_m,
            velocity_m_s=self.vertical.velocity_m_s,
            acceleration_m_s2=self.vertical.acceleration_m_s2,
            fill_front=self.fills["front"],
            fill_rear=self.fills["rear"],
            joint_pitch_rad=tuple(j.pitch_rad for j in self.joints),
            joint_yaw_rad=tuple(j.yaw_rad for j in self.joints),
            screw_speeds_rad_s=self._screw_speeds(),
            gait=None if self.gait is None else self.gait["mode"],
        )


def run_scenario(assembly: RobotAssembly, scenario: Scenario) -> list[TelemetryRecord]:
    """Headless batch run: the exact per-tick sequence a live session produces."""
    session = SimSession(assembly, scenario.dt_s, scenario)
    events = scenario.events_by_tick()
    records = [session.initial_record()]
    for tick in range(scenario.tick_count()):
        records.append(session.advance(events.get(tick, ())))
    return records


def telemetry_csv(records: Sequence[TelemetryRecord]) -> str:
    """Trace CSV: t_s,depth_m,velocity_m_s,acceleration_m_s2,fill_front,fill_rear."""
    lines = ["t_s,depth_m,velocity_m_s,acceleration_m_s2,fill_front,fill_rear"]
    for r in records:
        lines.append(
            f"{r.t_s:.6g},{r.depth_m:.9g},{r.velocity_m_s:.9g},"
            f"{r.acceleration_m_s2:.9g},{r.fill_front:.9g},{r.fill_rear:.9g}"
        )
    return "\n".join(lines) + "\n"


# -- recording and replay ---------------------------------------------------


def meta_line(assembly: RobotAssembly, dt_s: float) -> str:
    return json.dumps(
        {
            "type": "meta",
            "protocol": PROTOCOL_VERSION,
            "assembly": assembly.name,
            "dt_s": dt_s,
        },
        separators=(",", ":"),
    )


def command_line(tick: int, command: Mapping) -> str:
    return json.dumps(
        {"type": "command", "tick": tick, "command": dict(command)},
        separators=(",", ":"),
    )


def replay_command_log(assembly: RobotAssembly, log_text: str) -> list[str]:
    """Re-run a recorded session headless; returns serialized telemetry lines.

    The output is bytewise identical to what the live service streamed when
    the log was recorded.
    """
    dt_s: float | None = None
    commands: dict[int, list[dict]] = {}
    last_tick = 0
    for line in log_text.splitlines():
        if not line.strip():
            continue
        entry = json.loads(line)
        kind = entry.get("type")
        if kind == "meta":
            dt_s = float(entry["dt_s"])
        elif kind == "command":
            commands.setdefault(int(entry["tick"]), []).append(entry["command"])
        elif kind == "telemetry":
            last_tick = max(last_tick, int(entry["tick"]))
    if dt_s is None:
        raise ValueError("log has no meta line")
    session = SimSession(assembly, dt_s)
    lines = [serialize_telemetry(session.initial_record())]
    for tick in range(last_tick):
        lines.append(serialize_telemetry(session.advance(commands.get(tick, ()))))
    return lines
