import json

import pytest

from snakeforge.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_buoyancy_report_table(capsys):
    code, out, err = run(capsys, "buoyancy-report")
    assert code == 0
    assert "TOTAL" in out
    assert "sinks" in out
    assert "warning" in err  # front-row inconsistency surfaces on stderr


def test_buoyancy_report_csv_matches_design_values(capsys):
    code, out, _ = run(capsys, "buoyancy-report", "--csv", "--fill", "1.0")
    rows = {}
    for line in out.splitlines()[1:]:
        cols = line.split(",")
        rows[cols[0]] = [float(c) for c in cols[1:5]]
    assert rows["mid1"][2] == pytest.approx(-19.4, rel=0.02)
    assert rows["tail"][2] == pytest.approx(-20.6, rel=0.02)
    assert rows["bladder front:0"][2] == pytest.approx(13.8, rel=0.02)


def test_bladder_design(capsys):
    code, out, _ = run(
        capsys, "bladder-design", "--target-volume", "0.00143 m3", "--major", "0.16 m"
    )
    assert code == 0
    values = dict(line.split() for line in out.splitlines())
    assert float(values["minor_diameter_m"]) == pytest.approx(0.060185, abs=1e-5)
    assert float(values["flat_outer_diameter_m"]) == pytest.approx(0.2546, abs=2e-4)
    assert float(values["flat_inner_diameter_m"]) == pytest.approx(0.0654, abs=2e-4)


def test_bladder_design_infeasible(capsys):
    code, _, err = run(
        capsys, "bladder-design", "--target-volume", "0.01 m3", "--major", "0.1 m"
    )
    assert code == 1
    assert json.loads(err.splitlines()[-1])["error"]["code"] == "geometry"


def test_pneumatic_fill_csv(capsys):
    code, out, err = run(
        capsys, "pneumatic-fill", "--branch", "rear", "--upstream", "2.9psi", "--dt", "0.05"
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "t_s,volume_m3,pressure_pa,flow_m3_s"
    assert "fill_time_s" in err
    assert float(err.split()[-1]) == pytest.approx(68.0, abs=2.0)


def test_min_upstream(capsys):
    code, out, _ = run(capsys, "min-upstream", "--deadline", "70")
    values = dict(line.split() for line in out.splitlines())
    assert float(values["min_upstream_psi"]) == pytest.approx(2.9, abs=0.2)


def test_gait_screwing_json(capsys):
    code, out, _ = run(
        capsys, "gait", "--mode", "screwing", "--turn-radius", "0.823 m",
        "--screw-speed", "10 rad/s",
    )
    payload = json.loads(out)
    assert payload["mode"] == "screwing"
    assert payload["yaw_rad"][0] == pytest.approx(0.5236, abs=1e-3)
    assert payload["screw_speeds_rad_s"] == [10.0] * 4


def test_gait_infeasible_radius(capsys):
    code, _, err = run(capsys, "gait", "--mode", "screwing", "--turn-radius", "0.1 m")
    assert code == 1
    assert json.loads(err.splitlines()[-1])["error"]["code"] == "gait"


def test_hysteresis_sweep_csv(capsys):
    code, out, err = run(capsys, "hysteresis-sweep", "--load", "6.25lbs")
    lines = out.splitlines()
    assert lines[0] == "command_deg,actual_deg"
    assert float(err.split()[-1]) == pytest.approx(4.15, abs=0.01)


def test_comms_table(capsys):
    code, out, _ = run(capsys, "comms", "--nodes", "10", "--rate", "50", "--duration", "0.5")
    assert code == 0
    assert "mean_rtt_ms" in out
    assert "max_control_rate_hz 112.1" in out


def test_simulate_descent_summary(capsys, tmp_path):
    trace = tmp_path / "trace.csv"
    code, out, _ = run(capsys, "simulate", "--scenario", "descent", "--out", str(trace))
    summary = json.loads(out)
    assert summary["terminated"]
    assert 8.0 <= summary["duration_s"] <= 11.0
    header = trace.read_text().splitlines()[0]
    assert header == "t_s,depth_m,velocity_m_s,acceleration_m_s2,fill_front,fill_rear"


def test_simulate_unknown_scenario(capsys):
    code, _, err = run(capsys, "simulate", "--scenario", "warp-drive")
    assert code == 1
    assert json.loads(err.splitlines()[-1])["error"]["code"] == "scenario"


def test_power_budget_exit_code(capsys):
    code, out, _ = run(capsys, "power-budget", "--draw", "240")
    assert code == 0
    assert "system: 960.0 W / 960 W  ok" in out
    code, out, _ = run(capsys, "power-budget", "--draw", "mid1=250")
    assert code == 3
    assert "OVER" in out


def test_serve_replay_roundtrip(capsys, tmp_path):
    from snakeforge.model import default_assembly
    from snakeforge.session import SimSession, command_line, meta_line, serialize_telemetry

    assembly = default_assembly()
    session = SimSession(assembly, 0.05)
    lines = [meta_line(assembly, 0.05), serialize_telemetry(session.initial_record())]
    session.apply_command({"action": "valve", "branch": "rear", "open": True})
    lines.insert(1, command_line(0, {"action": "valve", "branch": "rear", "open": True}))
    for _ in range(10):
        lines.append(serialize_telemetry(session.advance()))
    log = tmp_path / "log.jsonl"
    log.write_text("\n".join(lines) + "\n")
    code, out, err = run(capsys, "serve", "--replay", str(log))
    assert code == 0
    expected = [line for line in lines if '"type":"telemetry"' in line]
    assert out.splitlines()[: len(expected)] == expected


def test_unknown_subcommand_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["does-not-exist"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_assembly_flag_accepts_path(capsys, tmp_path):
    manifest = tmp_path / "tiny.toml"
    manifest.write_text(
        '[robot]\nname = "tiny"\n\n[[segments]]\nname = "s"\n'
        'mass = "2 kg"\ndisplaced_volume = "0.001 m3"\n'
    )
    code, out, _ = run(capsys, "buoyancy-report", "--assembly", str(manifest))
    assert code == 0
    assert "s" in out


def test_bad_manifest_structured_error(capsys, tmp_path):
    manifest = tmp_path / "bad.toml"
    manifest.write_text("[robot\n")
    code, _, err = run(capsys, "buoyancy-report", "--assembly", str(manifest))
    assert code == 1
    assert json.loads(err.splitlines()[-1])["error"]["code"] == "manifest"
