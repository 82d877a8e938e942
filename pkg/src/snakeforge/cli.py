"""Command-line entry points for every subsystem plus the live service."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__, calibrate, comms, hydrostatics, kinematics, pneumatics
from .dynamics import summarize_run
from .model import (
    ManifestError,
    RobotAssembly,
    default_assembly,
    load_assembly_file,
    power_budget_check,
)
from .pneumatics import PneumaticsError
from .service import ServiceConfig, SnakeService
from .session import (
    load_scenario_file,
    packaged_scenario,
    replay_command_log,
    run_scenario,
    telemetry_csv,
)
from .units import UnitError, from_si, pa_to_psi, parse_quantity


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def _assembly(args) -> RobotAssembly:
    try:
        assembly = (
            load_assembly_file(args.assembly) if args.assembly else default_assembly()
        )
    except ManifestError as exc:
        raise CliError("manifest", str(exc)) from None
    for warning in assembly.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return assembly


def _quantity_arg(dimension: str):
    def parse(text: str) -> float:
        try:
            return parse_quantity(text, dimension)
        except UnitError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    return parse


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_buoyancy_report(args) -> int:
    assembly = _assembly(args)
    report = hydrostatics.assembly_buoyancy_report(assembly, args.fill)
    text = hydrostatics.report_csv(report) if args.csv else hydrostatics.report_table(report)
    _write_or_print(text, args.out)
    return 0


def cmd_bladder_design(args) -> int:
    try:
        minor = hydrostatics.solve_bladder_geometry(args.target_volume, args.major)
        pattern = hydrostatics.flat_pattern(args.major, minor, args.seam)
    except hydrostatics.GeometryError as exc:
        raise CliError("geometry", str(exc)) from None
    print(f"minor_diameter_m {minor:.6f}")
    print(f"major_diameter_m {args.major:.6f}")
    print(f"torus_volume_m3 {hydrostatics.torus_volume(minor, args.major):.8f}")
    print(f"flat_outer_diameter_m {pattern.outer_textile_diameter_m:.6f}")
    print(f"flat_inner_diameter_m {pattern.inner_textile_diameter_m:.6f}")
    if args.seam:
        print(f"seam_allowance_m {pattern.seam_allowance_m:.6f}")
    return 0


def cmd_pneumatic_fill(args) -> int:
    assembly = _assembly(args)
    network = assembly.pneumatics.with_valves(**{args.branch: True})
    try:
        trace = pneumatics.simulate_fill(
            network, args.branch, args.dt, upstream_gauge_pa=args.upstream
        )
    except PneumaticsError as exc:
        raise CliError("pneumatics", str(exc)) from None
    lines = ["t_s,volume_m3,pressure_pa,flow_m3_s"]
    for s in trace.samples:
        lines.append(f"{s.t_s:.6g},{s.volume_m3:.9g},{s.gauge_pa:.9g},{s.flow_m3_s:.9g}")
    _write_or_print("\n".join(lines) + "\n", args.out)
    if trace.completed:
        print(f"fill_time_s {trace.fill_time_s:.2f}", file=sys.stderr)
    return 0


def cmd_min_upstream(args) -> int:
    assembly = _assembly(args)
    try:
        pa = pneumatics.min_upstream_pressure(
            assembly.pneumatics, args.settle, args.deadline
        )
    except PneumaticsError as exc:
        raise CliError("pneumatics", str(exc)) from None
    print(f"min_upstream_pa {pa:.1f}")
    print(f"min_upstream_psi {pa_to_psi(pa):.3f}")
    return 0


def cmd_gait(args) -> int:
    assembly = _assembly(args)
    n = assembly.joint_count
    try:
        if args.mode == "screwing":
            command = kinematics.gait_screwing(
                math.inf if args.turn_radius is None else args.turn_radius,
                args.screw_speed,
                assembly,
                args.t,
            )
        elif args.mode == "wheeling":
            command = kinematics.gait_wheeling(
                args.ground_speed, assembly.drivetrain, n, args.slip, args.t
            )
        else:
            command = kinematics.gait_sidewinding(
                args.amplitude_pitch,
                args.amplitude_yaw,
                args.frequency,
                args.phase_lag,
                args.t,
                n,
                assembly.joints,
            )
    except kinematics.GaitError as exc:
        raise CliError("gait", str(exc)) from None
    print(
        json.dumps(
            {
                "mode": args.mode,
                "t_s": command.t_s,
                "pitch_rad": list(command.pitch_rad),
                "yaw_rad": list(command.yaw_rad),
                "screw_speeds_rad_s": list(command.screw_speeds_rad_s),
            }
        )
    )
    return 0


def cmd_hysteresis_sweep(args) -> int:
    assembly = _assembly(args)
    # the width model lives in the measurement domain: degrees and lbs
    sweep = kinematics.hysteresis_sweep(
        assembly.hysteresis,
        from_si(args.load, "lbs", "mass"),
        math.degrees(args.amplitude),
        math.degrees(args.step),
    )
    lines = ["command_deg,actual_deg"]
    lines += [f"{cmd:.6g},{actual:.6g}" for cmd, actual in sweep]
    _write_or_print("\n".join(lines) + "\n", args.out)
    width = kinematics.loop_width_deg(sweep)
    print(f"loop_width_deg {width:.4f}", file=sys.stderr)
    return 0


def cmd_comms(args) -> int:
    topology = comms.BusTopology(
        node_count=args.nodes,
        jitter_bound_s=args.jitter,
    )
    schedule = [comms.CommandStream(n, args.rate) for n in range(1, args.nodes + 1)]
    run = comms.run_event_simulation(
        topology, schedule, args.duration, args.seed, loop_rate_hz=args.rate
    )
    sys.stdout.write(comms.stats_table(run))
    print(f"max_control_rate_hz {comms.max_control_rate(topology):.1f}")
    if args.csv:
        Path(args.csv).write_text(comms.frames_csv(run.frames))
    return 0


def cmd_simulate(args) -> int:
    assembly = _assembly(args)
    try:
        if args.scenario and Path(args.scenario).exists():
            scenario = load_scenario_file(args.scenario)
        else:
            scenario = packaged_scenario(args.scenario)
    except (ValueError, FileNotFoundError) as exc:
        raise CliError("scenario", str(exc)) from None
    if args.dt is not None:
        from dataclasses import replace

        scenario = replace(scenario, dt_s=args.dt)
    records = run_scenario(assembly, scenario)
    if args.out:
        Path(args.out).write_text(telemetry_csv(records))
    states = [r.as_vertical_state() for r in records]
    direction = "descent" if records[-1].depth_m >= records[0].depth_m else "ascent"
    summary = summarize_run(states, assembly.hydro.tank_depth_m, direction)
    out = {
        "scenario": scenario.name,
        "direction": direction,
        "ticks": len(records) - 1,
        "duration_s": summary.duration_s,
        "mean_window_accel_m_s2": summary.mean_accel_m_s2,
        "peak_velocity_m_s": summary.peak_velocity_m_s,
        "terminated": summary.terminated,
        "diagnosis": summary.diagnosis,
        "final_depth_m": records[-1].depth_m,
        "final_fill_front": records[-1].fill_front,
        "final_fill_rear": records[-1].fill_rear,
    }
    print(json.dumps(out))
    return 0


def cmd_serve(args) -> int:
    assembly = _assembly(args)
    if args.replay:
        try:
            lines = replay_command_log(assembly, Path(args.replay).read_text())
        except (OSError, ValueError) as exc:
            raise CliError("replay", str(exc)) from None
        _write_or_print("\n".join(lines) + "\n", args.out)
        return 0
    host, _, port = args.bind.rpartition(":")
    try:
        config = ServiceConfig(
            host=host or "127.0.0.1",
            port=int(port),
            tick_rate_hz=args.tick_rate,
            speed=args.speed,
            record_path=args.record,
        )
        service = SnakeService(assembly, config)
        service.bind()  # resolve port 0 before announcing the address
    except (ValueError, OSError) as exc:
        raise CliError("serve", str(exc)) from None
    print(f"serving on ws://{config.host}:{config.port} at {config.tick_rate_hz:g} Hz",
          file=sys.stderr, flush=True)
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def cmd_power_budget(args) -> int:
    assembly = _assembly(args)
    if "=" in args.draw:
        draws: dict[str, float] = {}
        for part in args.draw.split(","):
            name, _, value = part.partition("=")
            draws[name.strip()] = float(value)
        report = power_budget_check(assembly, draws)
    else:
        report = power_budget_check(assembly, float(args.draw))
    for row in report.rows:
        flag = "ok" if row.ok else "OVER"
        print(f"{row.segment}: {row.draw_w:.1f} W / {row.limit_w:.0f} W  {flag}")
    flag = "ok" if report.system_ok else "OVER"
    print(f"system: {report.system_draw_w:.1f} W / {report.system_limit_w:.0f} W  {flag}")
    return 0 if report.all_ok else 3


def cmd_calibrate(args) -> int:
    assembly = _assembly(args)
    sys.stdout.write(calibrate.calibration_report(assembly))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snakeforge",
        description="Design checks and an operational simulator for a screw-propelled amphibious snake robot.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--assembly", help="assembly manifest path (default: packaged manifest)")
        p.set_defaults(fn=fn)
        return p

    p = add("buoyancy-report", cmd_buoyancy_report, "per-item buoyancy budget")
    p.add_argument("--fill", type=float, default=0.0, help="bladder fill fraction 0..1")
    p.add_argument("--csv", action="store_true", help="emit CSV instead of a table")
    p.add_argument("--out", help="write to a file instead of stdout")

    p = add("bladder-design", cmd_bladder_design, "size a torus bladder and its flat pattern")
    p.add_argument("--target-volume", type=_quantity_arg("volume"), required=True)
    p.add_argument("--major", type=_quantity_arg("length"), required=True)
    p.add_argument("--seam", type=_quantity_arg("length"), default=0.0)

    p = add("pneumatic-fill", cmd_pneumatic_fill, "integrate one branch filling")
    p.add_argument("--branch", default="rear")
    p.add_argument("--upstream", type=_quantity_arg("pressure"), default=None)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--out", help="write the CSV trace to a file")

    p = add("min-upstream", cmd_min_upstream, "minimum regulator pressure for a fill deadline")
    p.add_argument("--deadline", type=float, default=60.0, help="fill deadline in seconds")
    p.add_argument("--settle", type=_quantity_arg("pressure"), default=None,
                   help="override the bladder settle pressure")

    p = add("gait", cmd_gait, "evaluate one gait command")
    p.add_argument("--mode", choices=("screwing", "wheeling", "sidewinding"), required=True)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--turn-radius", type=_quantity_arg("length"), default=None)
    p.add_argument("--screw-speed", type=_quantity_arg("angular_speed"), default=0.0)
    p.add_argument("--ground-speed", type=_quantity_arg("speed"), default=0.0)
    p.add_argument("--slip", type=float, default=0.0)
    p.add_argument("--amplitude-pitch", type=_quantity_arg("angle"), default=0.0)
    p.add_argument("--amplitude-yaw", type=_quantity_arg("angle"), default=0.0)
    p.add_argument("--frequency", type=_quantity_arg("frequency"), default=0.5)
    p.add_argument("--phase-lag", type=_quantity_arg("angle"), default=math.pi / 3)

    p = add("hysteresis-sweep", cmd_hysteresis_sweep, "joint play sweep (command vs actual)")
    p.add_argument("--load", type=_quantity_arg("mass"), default=0.0,
                   help="tip load; lbs suffix supported")
    p.add_argument("--amplitude", type=_quantity_arg("angle"), default=math.pi / 2)
    p.add_argument("--step", type=_quantity_arg("angle"), default=math.radians(0.5))
    p.add_argument("--out", help="write the CSV sweep to a file")

    p = add("comms", cmd_comms, "bus latency statistics")
    p.add_argument("--nodes", type=int, default=10)
    p.add_argument("--jitter", type=_quantity_arg("time"), default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rate", type=float, default=100.0, help="per-node command rate, Hz")
    p.add_argument("--duration", type=float, default=1.0, help="seconds of traffic")
    p.add_argument("--csv", help="write the per-frame log to a file")

    p = add("simulate", cmd_simulate, "run a scenario headless")
    p.add_argument("--scenario", default="descent",
                   help="scenario file path or packaged name (descent, ascent_6psi, ascent_3psi)")
    p.add_argument("--dt", type=float, default=None, help="override the scenario dt")
    p.add_argument("--out", help="write the telemetry trace CSV")

    p = add("serve", cmd_serve, "run the live teleoperation service")
    p.add_argument("--bind", default="127.0.0.1:8765")
    p.add_argument("--tick-rate", type=float, default=20.0)
    p.add_argument("--speed", type=float, default=1.0,
                   help="wall-clock pacing factor; 0 runs as fast as possible")
    p.add_argument("--record", help="record the first session's command/telemetry log")
    p.add_argument("--replay", help="replay a recorded log headless and exit")
    p.add_argument("--out", help="with --replay, write telemetry lines here")

    p = add("power-budget", cmd_power_budget, "check actuator draw against rated limits")
    p.add_argument("--draw", required=True,
                   help="watts per segment (scalar) or name=W,name=W list")

    add("calibrate", cmd_calibrate, "rederive every shipped calibration constant")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(json.dumps({"error": {"code": exc.code, "message": exc.message}}), file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
