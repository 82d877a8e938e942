import json
import math

import pytest

from snakeforge.model import default_assembly
from snakeforge.pneumatics import simulate_fill
from snakeforge.session import (
    CommandError,
    Scenario,
    ScenarioEvent,
    SimSession,
    command_line,
    load_scenario,
    meta_line,
    packaged_scenario,
    replay_command_log,
    run_scenario,
    serialize_telemetry,
    telemetry_csv,
)
from snakeforge.units import psi_to_pa


@pytest.fixture(scope="module")
def assembly():
    return default_assembly()


def test_telemetry_cadence(assembly):
    session = SimSession(assembly, 0.05)
    records = [session.initial_record()] + [session.advance() for _ in range(20)]
    for k, record in enumerate(records):
        assert record.tick == k
        assert record.t_s == k * 0.05  # same expression the session uses


def test_default_session_sinks(assembly):
    session = SimSession(assembly, 0.05)
    for _ in range(100):
        record = session.advance()
    assert record.depth_m > 0
    assert record.fill_front == 0.0 and record.fill_rear == 0.0


def test_valve_command_fills_along_pneumatic_trace(assembly):
    dt = 0.05
    upstream = psi_to_pa(2.9)
    session = SimSession(assembly, dt)
    session.apply_command(
        {"action": "valve", "branch": "rear", "open": True, "upstream_gauge_pa": upstream}
    )
    net = assembly.pneumatics.with_valves(rear=True)
    trace = simulate_fill(net, "rear", dt, upstream_gauge_pa=upstream)
    # same Euler recurrence: session fills match the trace tick for tick
    for k in range(1, 200):
        record = session.advance()
        expected = trace.samples[k].volume_m3 / trace.total_volume_m3
        assert record.fill_rear == pytest.approx(expected, rel=1e-12), k


def test_valve_vent_deflates(assembly):
    session = SimSession(
        assembly, 0.05, Scenario(dt_s=0.05, initial_fills={"front": 1.0, "rear": 1.0})
    )
    session.apply_command(
        {"action": "valve", "branch": "rear", "open": True, "upstream_gauge_pa": 0.0}
    )
    for _ in range(50):
        record = session.advance()
    assert record.fill_rear < 1.0
    assert record.fill_front == 1.0  # closed valve holds pressure


class TestCommandValidation:
    def test_unknown_action(self, assembly):
        session = SimSession(assembly, 0.05)
        with pytest.raises(CommandError) as err:
            session.apply_command({"action": "warp"})
        assert err.value.code == "unknown-action"

    def test_bad_branch(self, assembly):
        session = SimSession(assembly, 0.05)
        with pytest.raises(CommandError) as err:
            session.apply_command({"action": "valve", "branch": "dorsal", "open": True})
        assert err.value.code == "bad-branch"

    def test_gait_limit_bounces_without_latching(self, assembly):
        session = SimSession(assembly, 0.05)
        with pytest.raises(CommandError) as err:
            session.apply_command(
                {
                    "action": "gait",
                    "mode": "sidewinding",
                    "amplitude_pitch_rad": math.radians(120),
                }
            )
        assert err.value.code == "limit"
        assert session.gait is None

    def test_unknown_gait_param(self, assembly):
        session = SimSession(assembly, 0.05)
        with pytest.raises(CommandError) as err:
            session.apply_command(
                {"action": "gait", "mode": "sidewinding", "amplitude": 0.1}
            )
        assert err.value.code == "bad-params"

    def test_screw_range(self, assembly):
        session = SimSession(assembly, 0.05)
        with pytest.raises(CommandError):
            session.apply_command({"action": "screw", "speed_rad_s": 60.0})

    def test_upstream_bound(self, assembly):
        session = SimSession(assembly, 0.05)
        with pytest.raises(CommandError):
            session.apply_command(
                {
                    "action": "valve",
                    "branch": "rear",
                    "open": True,
                    "upstream_gauge_pa": psi_to_pa(20.0),
                }
            )


def test_gait_telemetry_follows_waveform_with_play(assembly):
    session = SimSession(assembly, 0.05)
    amp = math.radians(30)
    session.apply_command(
        {
            "action": "gait",
            "mode": "sidewinding",
            "amplitude_pitch_rad": amp,
            "amplitude_yaw_rad": amp,
            "frequency_hz": 0.5,
            "phase_lag_rad": math.pi / 3,
        }
    )
    record = None
    for _ in range(40):
        record = session.advance()
    assert record.gait == "sidewinding"
    half_width = math.radians(assembly.hysteresis.width_deg(0.0) / 2)
    from snakeforge.kinematics import gait_sidewinding

    target = gait_sidewinding(amp, amp, 0.5, math.pi / 3, record.t_s, 3, assembly.joints)
    for actual, commanded in zip(record.joint_pitch_rad, target.pitch_rad):
        assert abs(actual - commanded) <= half_width + 1e-12


def test_screw_override(assembly):
    session = SimSession(assembly, 0.05)
    session.apply_command({"action": "screw", "speed_rad_s": 12.5})
    record = session.advance()
    assert record.screw_speeds_rad_s == (12.5,) * 4


def test_reset_restores_initial_state_keeps_clock(assembly):
    session = SimSession(assembly, 0.05)
    session.apply_command({"action": "valve", "branch": "rear", "open": True})
    for _ in range(40):
        session.advance()
    before = session.tick
    session.apply_command({"action": "reset"})
    record = session.advance()
    assert record.tick == before + 1  # sim clock is monotone across resets
    assert record.depth_m == pytest.approx(0.0, abs=1e-3)
    assert record.fill_rear == 0.0
    assert record.gait is None


def test_scenario_descent_summary(assembly):
    records = run_scenario(assembly, packaged_scenario("descent"))
    from snakeforge.dynamics import summarize_run

    states = [r.as_vertical_state() for r in records]
    summary = summarize_run(states, assembly.hydro.tank_depth_m, "descent")
    assert summary.terminated
    assert 8.0 <= summary.duration_s <= 11.0


def test_scenario_events_apply_at_boundaries(assembly):
    scenario = Scenario(
        dt_s=0.05,
        horizon_s=1.0,
        events=(
            ScenarioEvent(0.20, {"action": "valve", "branch": "rear", "open": True}),
        ),
    )
    by_tick = scenario.events_by_tick()
    assert list(by_tick) == [4]  # 0.20 / 0.05
    records = run_scenario(assembly, scenario)
    assert records[4].fill_rear == 0.0  # applied at the boundary of tick 4
    assert records[5].fill_rear > 0.0


def test_load_scenario_round_trip():
    text = """
[scenario]
name = "t"
dt = "0.1 s"
horizon = "2 s"
initial_depth = "0.5 m"

[initial_fills]
front = 0.25

[[events]]
t = "0.5 s"
action = "valve"
branch = "front"
open = true
upstream = "3 psi"
"""
    scenario = load_scenario(text)
    assert scenario.dt_s == pytest.approx(0.1)
    assert scenario.initial_fills["front"] == 0.25
    assert scenario.events[0].command["upstream_gauge_pa"] == pytest.approx(psi_to_pa(3.0))


def test_replay_reproduces_headless_run_bitwise(assembly):
    dt = 0.05
    commands = {
        3: [{"action": "valve", "branch": "rear", "open": True}],
        10: [{"action": "screw", "speed_rad_s": 5.0}],
    }
    session = SimSession(assembly, dt)
    log = [meta_line(assembly, dt)]
    telemetry = [serialize_telemetry(session.initial_record())]
    for tick in range(40):
        for command in commands.get(tick, []):
            session.apply_command(command)
            log.append(command_line(tick, command))
        telemetry.append(serialize_telemetry(session.advance()))
    log += telemetry
    replayed = replay_command_log(assembly, "\n".join(log))
    assert replayed == telemetry


def test_two_sessions_are_independent(assembly):
    a = SimSession(assembly, 0.05)
    b = SimSession(assembly, 0.05)
    a.apply_command({"action": "valve", "branch": "rear", "open": True})
    for _ in range(20):
        ra = a.advance()
        rb = b.advance()
    assert ra.fill_rear > 0.0
    assert rb.fill_rear == 0.0


def test_telemetry_csv_header(assembly):
    session = SimSession(assembly, 0.05)
    text = telemetry_csv([session.initial_record(), session.advance()])
    assert text.splitlines()[0] == (
        "t_s,depth_m,velocity_m_s,acceleration_m_s2,fill_front,fill_rear"
    )


def test_serialized_telemetry_is_json_with_stable_keys(assembly):
    session = SimSession(assembly, 0.05)
    payload = json.loads(serialize_telemetry(session.initial_record()))
    assert payload["type"] == "telemetry"
    assert list(payload)[:3] == ["type", "tick", "t_s"]
