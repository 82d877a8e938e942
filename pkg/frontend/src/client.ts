// WebSocket client with the version handshake, reconnect-with-backoff, and
// command sending.  The socket constructor is injectable so tests (and the
// node e2e harness) can supply their own implementation.

import {
  Command,
  ErrorMessage,
  PROTOCOL_VERSION,
  ProtocolError,
  TelemetryRecord,
  encodeCommand,
  parseServerMessage,
} from "./protocol.js";
import { ConnectionStatus } from "./state.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientHandlers {
  onStatus?: (status: ConnectionStatus, detail?: string) => void;
  onTelemetry?: (record: TelemetryRecord) => void;
  onServerError?: (error: ErrorMessage) => void;
}

export interface ClientOptions {
  reconnectBaseMs?: number;
  reconnectMaxMs?: number;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
}

export class ConsoleClient {
  private socket: SocketLike | null = null;
  private handshaken = false;
  private closedByUs = false;
  private versionMismatch = false;
  private attempts = 0;
  private readonly reconnectBaseMs: number;
  private readonly reconnectMaxMs: number;
  private readonly setTimeoutFn: (fn: () => void, ms: number) => unknown;

  constructor(
    readonly url: string,
    private readonly factory: SocketFactory,
    private readonly handlers: ClientHandlers = {},
    options: ClientOptions = {},
  ) {
    this.reconnectBaseMs = options.reconnectBaseMs ?? 500;
    this.reconnectMaxMs = options.reconnectMaxMs ?? 8000;
    this.setTimeoutFn = options.setTimeoutFn ?? ((fn, ms) => setTimeout(fn, ms));
  }

  get connected(): boolean {
    return this.handshaken;
  }

  connect(): void {
    this.closedByUs = false;
    this.openSocket("connecting");
  }

  close(): void {
    this.closedByUs = true;
    this.socket?.close();
    this.socket = null;
    this.handshaken = false;
    this.status("idle");
  }

  /** Serialize and send one command; false when there is no live session. */
  send(command: Command): boolean {
    if (!this.handshaken || this.socket === null) return false;
    this.socket.send(encodeCommand(command));
    return true;
  }

  private status(status: ConnectionStatus, detail?: string): void {
    this.handlers.onStatus?.(status, detail);
  }

  private openSocket(phase: ConnectionStatus): void {
    this.status(phase, phase === "reconnecting" ? `attempt ${this.attempts}` : undefined);
    this.handshaken = false;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      // connected at the transport level; wait for hello before trusting it
    };
    socket.onmessage = (event) => this.onMessage(String(event.data));
    socket.onerror = () => {
      // the close handler owns the retry path
    };
    socket.onclose = () => {
      this.handshaken = false;
      if (this.closedByUs || this.versionMismatch) return;
      this.scheduleReconnect();
    };
  }

  private onMessage(raw: string): void {
    let message;
    try {
      message = parseServerMessage(raw);
    } catch (err) {
      if (err instanceof ProtocolError) return; // tolerate unknown frames
      throw err;
    }
    if (message.type === "hello") {
      if (message.version !== PROTOCOL_VERSION) {
        // hard stop: controls stay disabled until the operator fixes versions
        this.versionMismatch = true;
        this.status(
          "version-mismatch",
          `service speaks v${message.version}, console v${PROTOCOL_VERSION}`,
        );
        this.socket?.close();
        return;
      }
      this.handshaken = true;
      this.attempts = 0;
      this.status("connected");
      return;
    }
    if (message.type === "telemetry") {
      this.handlers.onTelemetry?.(message);
      return;
    }
    this.handlers.onServerError?.(message);
  }

  private scheduleReconnect(): void {
    this.attempts += 1;
    const delay = Math.min(
      this.reconnectBaseMs * 2 ** (this.attempts - 1),
      this.reconnectMaxMs,
    );
    this.status("reconnecting", `retry in ${delay} ms`);
    this.setTimeoutFn(() => {
      if (!this.closedByUs && !this.versionMismatch) this.openSocket("reconnecting");
    }, delay);
  }
}
