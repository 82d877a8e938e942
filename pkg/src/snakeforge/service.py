"""Live teleoperation service: one simulation session per console connection.

Wire protocol (text frames over a WebSocket, JSON per frame):
  server -> client   {"type":"hello","version":1}
                     {"type":"telemetry", ...}      every tick
                     {"type":"error","code","message"}
  client -> server   {"type":"command","action":"valve"|"gait"|"screw"|"reset", ...}

Commands apply at tick boundaries only, so a recorded command log replays
deterministically (see session.replay_command_log).
"""

from __future__ import annotations

import json
import queue
import threading
import time
from dataclasses import dataclass

from websockets.exceptions import ConnectionClosed
from websockets.sync.server import serve as ws_serve

from .model import RobotAssembly
from .session import (
    PROTOCOL_VERSION,
    CommandError,
    Scenario,
    SimSession,
    command_line,
    meta_line,
    serialize_telemetry,
)

MIN_TICK_RATE_HZ = 1.0
# Ceiling justified by the comms model: a 10-node chain still round-trips
# ~112 times per second, so 100 Hz control traffic fits on the bus.
MAX_TICK_RATE_HZ = 100.0


class _Recorder:
    """Append-only command/telemetry log; claimed by the first session."""

    def __init__(self, path: str):
        self._file = open(path, "w")
        self._lock = threading.Lock()
        self.claimed = False

    def try_claim(self) -> bool:
        with self._lock:
            if self.claimed:
                return False
            self.claimed = True
            return True

    def write(self, line: str) -> None:
        with self._lock:
            self._file.write(line + "\n")
            self._file.flush()

    def close(self) -> None:
        with self._lock:
            self._file.close()


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    tick_rate_hz: float = 20.0
    speed: float = 1.0  # wall-clock pacing factor; 0 = free-run
    record_path: str | None = None
    scenario: Scenario | None = None


class SnakeService:
    """WebSocket server wrapping independent SimSessions, one per connection."""

    def __init__(self, assembly: RobotAssembly, config: ServiceConfig | None = None):
        self.assembly = assembly
        self.config = config or ServiceConfig()
        if not MIN_TICK_RATE_HZ <= self.config.tick_rate_hz <= MAX_TICK_RATE_HZ:
            raise ValueError(
                f"tick rate must be within [{MIN_TICK_RATE_HZ:.0f}, {MAX_TICK_RATE_HZ:.0f}] Hz"
            )
        if self.config.speed < 0:
            raise ValueError("speed must be >= 0")
        self._recorder = _Recorder(self.config.record_path) if self.config.record_path else None
        self._server = None
        self._thread: threading.Thread | None = None

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        """Bind and serve in a background thread (port 0 picks a free port)."""
        self._server = ws_serve(self._handle, self.config.host, self.config.port)
        self.config.port = self._server.socket.getsockname()[1]
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def bind(self) -> None:
        """Bind the listening socket without serving yet (resolves port 0)."""
        self._server = ws_serve(self._handle, self.config.host, self.config.port)
        self.config.port = self._server.socket.getsockname()[1]

    def serve_forever(self) -> None:
        """Bind (if start() has not already) and block until shutdown."""
        if self._server is None:
            self._server = ws_serve(self._handle, self.config.host, self.config.port)
            self.config.port = self._server.socket.getsockname()[1]
        try:
            self._server.serve_forever()
        finally:
            self._server = None

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server = None
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None
        if self._recorder is not None:
            self._recorder.close()

    @property
    def url(self) -> str:
        return f"ws://{self.config.host}:{self.config.port}"

    # -- per-connection session ----------------------------------------------

    def _handle(self, ws) -> None:
        dt = 1.0 / self.config.tick_rate_hz
        session = SimSession(self.assembly, dt, self.config.scenario)
        send_lock = threading.Lock()

        def send(text: str) -> None:
            with send_lock:
                ws.send(text)

        recorder = None
        if self._recorder is not None and self._recorder.try_claim():
            recorder = self._recorder
            recorder.write(meta_line(self.assembly, dt))

        commands: queue.Queue = queue.Queue()
        reader = threading.Thread(
            target=self._read_loop, args=(ws, commands, send), daemon=True
        )
        reader.start()

        try:
            send(json.dumps({"type": "hello", "version": PROTOCOL_VERSION}, separators=(",", ":")))
            first = serialize_telemetry(session.initial_record())
            send(first)
            if recorder:
                recorder.write(first)
            start_wall = time.monotonic()
            while True:
                while True:  # drain everything that arrived before this boundary
                    try:
                        command = commands.get_nowait()
                    except queue.Empty:
                        break
                    if command is None:
                        return  # client went away
                    try:
                        session.apply_command(command)
                        if recorder:
                            recorder.write(command_line(session.tick, command))
                    except CommandError as exc:
                        send(
                            json.dumps(
                                {"type": "error", "code": exc.code, "message": exc.message},
                                separators=(",", ":"),
                            )
                        )
                record = session.advance()
                line = serialize_telemetry(record)
                send(line)
                if recorder:
                    recorder.write(line)
                if self.config.speed > 0:
                    target = start_wall + record.tick * dt / self.config.speed
                    delay = target - time.monotonic()
                    if delay > 0:
                        time.sleep(delay)
        except ConnectionClosed:
            pass

    @staticmethod
    def _read_loop(ws, commands: queue.Queue, send) -> None:
        while True:
            try:
                raw = ws.recv()
            except (ConnectionClosed, OSError):
                commands.put(None)
                return
            try:
                message = json.loads(raw)
                if not isinstance(message, dict) or message.get("type") != "command":
                    raise ValueError("expected {'type': 'command', ...}")
            except ValueError as exc:
                try:
                    send(
                        json.dumps(
                            {"type": "error", "code": "bad-json", "message": str(exc)},
                            separators=(",", ":"),
                        )
                    )
                except ConnectionClosed:
                    commands.put(None)
                    return
                continue
            commands.put(message)
