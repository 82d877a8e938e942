// Console state: a bounded telemetry ring plus connection/pending bookkeeping.
// Rendering only ever reads received telemetry; there is no client-side
// physics and no optimistic mutation.

import { ErrorMessage, TelemetryRecord } from "./protocol.js";

export type ConnectionStatus =
  | "idle"
  | "connecting"
  | "connected"
  | "version-mismatch"
  | "reconnecting";

export class TelemetryRing {
  private buffer: (TelemetryRecord | undefined)[];
  private next = 0;
  private count = 0;

  constructor(readonly capacity: number) {
    if (capacity < 1) throw new Error("ring capacity must be >= 1");
    this.buffer = new Array(capacity);
  }

  push(record: TelemetryRecord): void {
    this.buffer[this.next] = record;
    this.next = (this.next + 1) % this.capacity;
    if (this.count < this.capacity) this.count += 1;
  }

  get length(): number {
    return this.count;
  }

  latest(): TelemetryRecord | undefined {
    if (this.count === 0) return undefined;
    return this.buffer[(this.next - 1 + this.capacity) % this.capacity];
  }

  /** Oldest-to-newest records whose t_s falls within the trailing window. */
  window(seconds: number): TelemetryRecord[] {
    const newest = this.latest();
    if (newest === undefined) return [];
    const cutoff = newest.t_s - seconds;
    const out: TelemetryRecord[] = [];
    for (let i = 0; i < this.count; i++) {
      const record = this.buffer[(this.next - this.count + i + this.capacity) % this.capacity];
      if (record !== undefined && record.t_s >= cutoff) out.push(record);
    }
    return out;
  }
}

export class ConsoleState {
  status: ConnectionStatus = "idle";
  lastError: ErrorMessage | null = null;
  records: TelemetryRing;
  /** tick of the newest record when the last command went out; cleared once
   *  a later record arrives (the UI shows state only after the server did) */
  pendingSinceTick: number | null = null;

  constructor(ringCapacity = 2400) {
    this.records = new TelemetryRing(ringCapacity);
  }

  onTelemetry(record: TelemetryRecord): void {
    this.records.push(record);
    if (this.pendingSinceTick !== null && record.tick > this.pendingSinceTick) {
      this.pendingSinceTick = null;
    }
  }

  onCommandSent(): void {
    this.pendingSinceTick = this.records.latest()?.tick ?? 0;
  }

  onError(error: ErrorMessage): void {
    this.lastError = error;
    this.pendingSinceTick = null;
  }

  get pending(): boolean {
    return this.pendingSinceTick !== null;
  }

  /** The one depth the console may display: the newest record's. */
  displayedDepth(): number | undefined {
    return this.records.latest()?.depth_m;
  }
}
