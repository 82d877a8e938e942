import { describe, expect, it } from "vitest";

import { ConsoleClient, SocketLike } from "../src/client.js";
import { TelemetryRecord } from "../src/protocol.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onopen: (() => void) | null = null;
  onmessage: ((event: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.onclose?.();
  }

  // test-side helpers
  open(): void {
    this.onopen?.();
  }

  receive(payload: unknown): void {
    this.onmessage?.({ data: typeof payload === "string" ? payload : JSON.stringify(payload) });
  }

  drop(): void {
    this.onclose?.();
  }
}

function telemetry(tick: number): TelemetryRecord & { type: string } {
  return {
    type: "telemetry",
    tick,
    t_s: tick * 0.05,
    depth_m: 0,
    velocity_m_s: 0,
    acceleration_m_s2: 0,
    fill_front: 0,
    fill_rear: 0,
    joint_pitch_rad: [],
    joint_yaw_rad: [],
    screw_speeds_rad_s: [],
    gait: null,
  };
}

function harness(options: { version?: number } = {}) {
  const sockets: FakeSocket[] = [];
  const statuses: string[] = [];
  const records: TelemetryRecord[] = [];
  const errors: string[] = [];
  const timers: Array<{ fn: () => void; ms: number }> = [];
  const client = new ConsoleClient(
    "ws://test",
    () => {
      const socket = new FakeSocket();
      sockets.push(socket);
      return socket;
    },
    {
      onStatus: (status) => statuses.push(status),
      onTelemetry: (record) => records.push(record),
      onServerError: (error) => errors.push(error.code),
    },
    { setTimeoutFn: (fn, ms) => timers.push({ fn, ms }) },
  );
  client.connect();
  const socket = sockets[0];
  socket.open();
  if (options.version !== undefined) {
    socket.receive({ type: "hello", version: options.version });
  }
  return { client, sockets, statuses, records, errors, timers };
}

describe("ConsoleClient handshake", () => {
  it("connects after a matching hello", () => {
    const h = harness({ version: 1 });
    expect(h.client.connected).toBe(true);
    expect(h.statuses).toEqual(["connecting", "connected"]);
  });

  it("does not trust the session before hello", () => {
    const h = harness();
    expect(h.client.connected).toBe(false);
    expect(h.client.send({ type: "command", action: "reset" })).toBe(false);
  });

  it("blocks on a version mismatch and never reconnects", () => {
    const h = harness({ version: 2 });
    expect(h.statuses).toContain("version-mismatch");
    expect(h.client.connected).toBe(false);
    expect(h.sockets[0].closed).toBe(true);
    expect(h.timers).toHaveLength(0); // no retry scheduled
  });
});

describe("ConsoleClient traffic", () => {
  it("dispatches telemetry and error frames", () => {
    const h = harness({ version: 1 });
    h.sockets[0].receive(telemetry(0));
    h.sockets[0].receive(telemetry(1));
    h.sockets[0].receive({ type: "error", code: "bad-branch", message: "no" });
    expect(h.records.map((r) => r.tick)).toEqual([0, 1]);
    expect(h.errors).toEqual(["bad-branch"]);
  });

  it("serializes commands onto the socket", () => {
    const h = harness({ version: 1 });
    expect(
      h.client.send({ type: "command", action: "valve", branch: "rear", open: true }),
    ).toBe(true);
    expect(JSON.parse(h.sockets[0].sent[0])).toEqual({
      type: "command",
      action: "valve",
      branch: "rear",
      open: true,
    });
  });

  it("ignores unparseable frames without dying", () => {
    const h = harness({ version: 1 });
    h.sockets[0].receive("garbage");
    h.sockets[0].receive(telemetry(2));
    expect(h.records.map((r) => r.tick)).toEqual([2]);
  });
});

describe("ConsoleClient reconnect", () => {
  it("retries with exponential backoff after a drop", () => {
    const h = harness({ version: 1 });
    h.sockets[0].drop();
    expect(h.statuses).toContain("reconnecting");
    expect(h.timers.map((t) => t.ms)).toEqual([500]);
    h.timers[0].fn(); // fire the retry -> a second socket appears
    expect(h.sockets).toHaveLength(2);
    h.sockets[1].drop(); // still failing -> delay doubles
    expect(h.timers.map((t) => t.ms)).toEqual([500, 1000]);
  });

  it("a deliberate close does not reconnect", () => {
    const h = harness({ version: 1 });
    h.client.close();
    expect(h.timers).toHaveLength(0);
    expect(h.client.connected).toBe(false);
  });

  it("resets the backoff after a successful handshake", () => {
    const h = harness({ version: 1 });
    h.sockets[0].drop();
    h.timers[0].fn();
    h.sockets[1].open();
    h.sockets[1].receive({ type: "hello", version: 1 });
    expect(h.client.connected).toBe(true);
    h.sockets[1].drop();
    // attempts were reset, so the delay starts at the base again
    expect(h.timers.map((t) => t.ms)).toEqual([500, 500]);
  });
});
