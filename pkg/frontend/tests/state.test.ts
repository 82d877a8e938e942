import { describe, expect, it } from "vitest";

import { TelemetryRecord } from "../src/protocol.js";
import { ConsoleState, TelemetryRing } from "../src/state.js";

function record(tick: number, dt = 0.05, depth = tick * 0.001): TelemetryRecord {
  return {
    tick,
    t_s: tick * dt,
    depth_m: depth,
    velocity_m_s: 0,
    acceleration_m_s2: 0,
    fill_front: 0,
    fill_rear: 0,
    joint_pitch_rad: [0, 0, 0],
    joint_yaw_rad: [0, 0, 0],
    screw_speeds_rad_s: [0, 0, 0, 0],
    gait: null,
  };
}

describe("TelemetryRing", () => {
  it("is bounded", () => {
    const ring = new TelemetryRing(5);
    for (let i = 0; i < 20; i++) ring.push(record(i));
    expect(ring.length).toBe(5);
    expect(ring.latest()?.tick).toBe(19);
    expect(ring.window(1e9).map((r) => r.tick)).toEqual([15, 16, 17, 18, 19]);
  });

  it("window slices by trailing time", () => {
    const ring = new TelemetryRing(100);
    for (let i = 0; i <= 40; i++) ring.push(record(i, 0.05));
    const windowed = ring.window(0.5); // last 0.5 s at 20 Hz -> 11 records
    expect(windowed[0].tick).toBe(30);
    expect(windowed[windowed.length - 1].tick).toBe(40);
  });

  it("empty ring yields nothing", () => {
    const ring = new TelemetryRing(4);
    expect(ring.latest()).toBeUndefined();
    expect(ring.window(60)).toEqual([]);
  });
});

describe("ConsoleState", () => {
  it("displayed depth always equals the newest record's depth", () => {
    const state = new ConsoleState(8);
    for (let i = 0; i < 30; i++) {
      state.onTelemetry(record(i));
      expect(state.displayedDepth()).toBe(record(i).depth_m);
    }
  });

  it("pending clears only when a later record arrives", () => {
    const state = new ConsoleState();
    state.onTelemetry(record(5));
    state.onCommandSent();
    expect(state.pending).toBe(true);
    state.onTelemetry(record(5)); // same tick: server state not advanced yet
    expect(state.pending).toBe(true);
    state.onTelemetry(record(6));
    expect(state.pending).toBe(false);
  });

  it("server errors clear pending and are remembered", () => {
    const state = new ConsoleState();
    state.onTelemetry(record(1));
    state.onCommandSent();
    state.onError({ type: "error", code: "limit", message: "too far" });
    expect(state.pending).toBe(false);
    expect(state.lastError?.code).toBe("limit");
  });
});
