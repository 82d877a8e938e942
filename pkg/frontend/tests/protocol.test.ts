import { describe, expect, it } from "vitest";

import {
  ProtocolError,
  encodeCommand,
  parseServerMessage,
  psiToPa,
  resetCommand,
  screwCommand,
  screwingCommand,
  sidewindingCommand,
  valveCommand,
} from "../src/protocol.js";

const TELEMETRY = JSON.stringify({
  type: "telemetry",
  tick: 3,
  t_s: 0.15,
  depth_m: 0.01,
  velocity_m_s: 0.002,
  acceleration_m_s2: 0.045,
  fill_front: 0,
  fill_rear: 0.25,
  joint_pitch_rad: [0, 0, 0],
  joint_yaw_rad: [0, 0, 0],
  screw_speeds_rad_s: [0, 0, 0, 0],
  gait: null,
});

describe("parseServerMessage", () => {
  it("parses hello", () => {
    expect(parseServerMessage('{"type":"hello","version":1}')).toEqual({
      type: "hello",
      version: 1,
    });
  });

  it("parses telemetry", () => {
    const msg = parseServerMessage(TELEMETRY);
    expect(msg.type).toBe("telemetry");
    if (msg.type === "telemetry") {
      expect(msg.fill_rear).toBe(0.25);
      expect(msg.joint_pitch_rad).toHaveLength(3);
    }
  });

  it("parses error frames", () => {
    const msg = parseServerMessage('{"type":"error","code":"bad-branch","message":"nope"}');
    expect(msg).toEqual({ type: "error", code: "bad-branch", message: "nope" });
  });

  it("rejects garbage", () => {
    expect(() => parseServerMessage("not json")).toThrow(ProtocolError);
    expect(() => parseServerMessage('{"type":"mystery"}')).toThrow(ProtocolError);
    expect(() => parseServerMessage('{"type":"telemetry","tick":"x"}')).toThrow(ProtocolError);
  });
});

describe("command builders", () => {
  it("valve with optional upstream", () => {
    expect(JSON.parse(encodeCommand(valveCommand("rear", true)))).toEqual({
      type: "command",
      action: "valve",
      branch: "rear",
      open: true,
    });
    const vent = JSON.parse(encodeCommand(valveCommand("front", true, 0)));
    expect(vent.upstream_gauge_pa).toBe(0);
  });

  it("gait commands carry SI parameters", () => {
    const side = JSON.parse(encodeCommand(sidewindingCommand(0.5, 0.4, 0.5, 1.0)));
    expect(side.mode).toBe("sidewinding");
    expect(side.amplitude_pitch_rad).toBe(0.5);
    const screwing = JSON.parse(encodeCommand(screwingCommand(null, 10)));
    expect(screwing.turn_radius_m).toBeUndefined();
    expect(screwing.screw_speed_rad_s).toBe(10);
  });

  it("screw and reset", () => {
    expect(JSON.parse(encodeCommand(screwCommand(12))).speed_rad_s).toBe(12);
    expect(JSON.parse(encodeCommand(resetCommand())).action).toBe("reset");
  });
});

it("psi conversion matches the service constant", () => {
  expect(psiToPa(2.9)).toBeCloseTo(19994.796, 2);
});
