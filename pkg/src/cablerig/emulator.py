"""Motor-box emulator: the true plant behind the wire protocol.

Executes MOVE commands against the full drum model (whatever pile-up factor
the rig is configured with), so a controller that plans on the constant-radius
model accumulates exactly the position error a real rig would show. Commands
are atomic: a rejected MOVE (UNSPOOL, GEOM, BADID, NOHOME) leaves drum state
and clock untouched. Time is virtual; the clock advances only by MOVE
durations unless real-time mode is enabled, in which case the emulator also
sleeps them out.

The plant is deterministic: one command sequence always produces bit-identical
reply lines and final state. A read-only telemetry side channel publishes a
snapshot after HOME and every committed MOVE for tests and the UI bridge.

Transports: in-process (LocalSession), TCP (EmulatorServer / TcpSession), or
stdio via the CLI. All of them move the same encoded bytes, one line per
command, one reply line per command, one command in flight at a time.
"""

from __future__ import annotations

import logging
import socket
import threading
import time
from collections import deque
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

from . import protocol
from .geometry import GeometryError, Point3, forward_kinematics, wire_lengths
from .protocol import Ack, Command, Config, Err, Home, Move, Ping, Reply, State, Status
from .rig import RigConfig
from .spool import SpoolState, UnspoolError, length_for_steps

logger = logging.getLogger(__name__)

RADIUS_CENTI_UM_PER_CM = 10**6


@dataclass(frozen=True)
class TelemetrySnapshot:
    """Read-only plant truth published after HOME and each committed MOVE."""

    clock_ms: float
    move_id: Optional[int]
    cumulative_steps: Tuple[int, ...]
    wound: Tuple[float, ...]
    wire_out: Tuple[float, ...]
    position: Optional[Point3]


class MotorEmulator:
    """Single-rig plant; handle() maps one command to one reply."""

    def __init__(
        self,
        rig: RigConfig,
        *,
        pileup_override: Optional[float] = None,
        initial_wound: Optional[Sequence[float]] = None,
        real_time: bool = False,
    ):
        self.rig = rig
        params = [
            replace(p, pileup_factor=pileup_override) if pileup_override is not None else p
            for p in rig.motors
        ]
        home_lengths = wire_lengths(rig.layout, rig.home)
        if initial_wound is None:
            initial_wound = [l + rig.slack_reserve for l in home_lengths]
        if len(initial_wound) != len(params):
            raise ValueError("need one initial wound length per motor")
        self.spools: List[SpoolState] = [
            SpoolState(p, w) for p, w in zip(params, initial_wound)
        ]
        # Total wire per motor is conserved: wound + paid out.
        self.wire_totals = [w + l for w, l in zip(initial_wound, home_lengths)]
        self.clock_ms = 0.0
        self.homed = False
        self.configured = False
        self.last_move_id = 0
        self.real_time = real_time
        self._telemetry: deque = deque(maxlen=4096)
        self._subscribers: List[Callable[[TelemetrySnapshot], None]] = []
        self._lock = threading.Lock()

    # -- plant truth -------------------------------------------------------

    @property
    def motor_count(self) -> int:
        return len(self.spools)

    def wire_out(self) -> Tuple[float, ...]:
        return tuple(t - s.wound_length for t, s in zip(self.wire_totals, self.spools))

    def position(self) -> Optional[Point3]:
        if self.motor_count < 3:
            return None
        return forward_kinematics(self.rig.layout, self.wire_out())

    def subscribe(self, callback: Callable[[TelemetrySnapshot], None]) -> None:
        self._subscribers.append(callback)

    def telemetry(self) -> Tuple[TelemetrySnapshot, ...]:
        return tuple(self._telemetry)

    def _publish(self, move_id: Optional[int]) -> None:
        snap = TelemetrySnapshot(
            clock_ms=self.clock_ms,
            move_id=move_id,
            cumulative_steps=tuple(s.cumulative_steps for s in self.spools),
            wound=tuple(s.wound_length for s in self.spools),
            wire_out=self.wire_out(),
            position=self._safe_position(),
        )
        self._telemetry.append(snap)
        for cb in self._subscribers:
            cb(snap)

    def _safe_position(self) -> Optional[Point3]:
        try:
            return self.position()
        except GeometryError:
            return None

    # -- command handling ----------------------------------------------------

    def handle(self, cmd: Command) -> Reply:
        with self._lock:
            return self._dispatch(cmd)

    def handle_line(self, line) -> str:
        """Byte path used by every transport: decode, dispatch, encode."""
        try:
            cmd = protocol.decode_command(line)
        except protocol.ProtocolError as e:
            reply: Reply = Err(0, "BADCMD", _squeeze(str(e)))
            return protocol.encode_reply(reply)
        return protocol.encode_reply(self.handle(cmd))

    def _dispatch(self, cmd: Command) -> Reply:
        if isinstance(cmd, Ping):
            return Ack(0)
        if isinstance(cmd, Config):
            return self._do_config(cmd)
        if isinstance(cmd, Home):
            self.spools = [replace(s, cumulative_steps=0) for s in self.spools]
            self.homed = True
            self._publish(None)
            return Ack(0)
        if isinstance(cmd, Status):
            return State(cmd.id, tuple(s.cumulative_steps for s in self.spools))
        if isinstance(cmd, Move):
            return self._do_move(cmd)
        return Err(0, "BADCMD", "unhandled_command")

    def _do_config(self, cmd: Config) -> Reply:
        if cmd.motors != self.motor_count:
            return Err(0, "BADCFG", f"rig_has_{self.motor_count}_motors")
        for i, s in enumerate(self.spools):
            if cmd.steps_per_rev != s.params.steps_per_rev:
                return Err(0, "BADCFG", f"motor_{i}_steps_per_rev_{s.params.steps_per_rev}")
            expect = round(s.params.base_radius * RADIUS_CENTI_UM_PER_CM)
            if cmd.radii_centi_um[i] != expect:
                return Err(0, "BADCFG", f"motor_{i}_radius_{expect}_centi_um")
        self.configured = True
        return Ack(0)

    def _do_move(self, cmd: Move) -> Reply:
        if not self.homed:
            return Err(cmd.id, "NOHOME", "home_before_moving")
        if cmd.id <= self.last_move_id:
            return Err(cmd.id, "BADID", f"move_id_must_exceed_{self.last_move_id}")
        if len(cmd.steps) != self.motor_count:
            return Err(cmd.id, "BADCMD", f"rig_has_{self.motor_count}_motors")

        # Validate the whole move on candidate state before committing any of it.
        candidate: List[SpoolState] = []
        for i, (s, n) in enumerate(zip(self.spools, cmd.steps)):
            try:
                _, new_state = length_for_steps(s, n)
            except UnspoolError:
                return Err(cmd.id, "UNSPOOL", f"motor_{i}_would_unspool_past_empty_drum")
            candidate.append(new_state)

        new_out = [t - s.wound_length for t, s in zip(self.wire_totals, candidate)]
        for i, out in enumerate(new_out):
            if out < -1e-9:
                return Err(cmd.id, "GEOM", f"motor_{i}_wire_fully_reeled_in")
        if self.motor_count >= 3:
            try:
                forward_kinematics(self.rig.layout, [max(o, 1e-12) for o in new_out])
            except GeometryError:
                return Err(cmd.id, "GEOM", "wire_lengths_admit_no_carriage_position")

        self.spools = candidate
        self.clock_ms += cmd.duration_ms
        self.last_move_id = cmd.id
        if self.real_time and cmd.duration_ms > 0:
            time.sleep(cmd.duration_ms / 1000.0)
        self._publish(cmd.id)
        return Ack(cmd.id)


def _squeeze(message: str) -> str:
    """ERR messages carry no spaces; fold anything unprintable to underscores."""
    cleaned = "".join(c if "\x21" <= c <= "\x7e" else "_" for c in message)
    return cleaned[:120] or "malformed_line"


# -- transports --------------------------------------------------------------


class SessionClosed(ConnectionError):
    pass


class LocalSession:
    """In-process transport; still round-trips every command through bytes."""

    def __init__(self, emulator: MotorEmulator):
        self.emulator = emulator
        self.closed = False

    def send(self, cmd: Command) -> Reply:
        if self.closed:
            raise SessionClosed("session closed")
        reply_line = self.emulator.handle_line(protocol.encode_command(cmd))
        return protocol.decode_reply(reply_line)

    def close(self) -> None:
        self.closed = True


class TcpSession:
    """Client side of the TCP transport."""

    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.reader = self.sock.makefile("rb")

    def send(self, cmd: Command) -> Reply:
        self.sock.sendall(protocol.encode_command(cmd).encode("ascii"))
        line = self.reader.readline()
        if not line:
            raise SessionClosed("emulator closed the connection")
        return protocol.decode_reply(line)

    def close(self) -> None:
        try:
            self.reader.close()
        finally:
            self.sock.close()


class EmulatorServer:
    """Serves one controller connection at a time over TCP.

    The plant persists across reconnects for the lifetime of the server, so a
    controller can drop and resume a session against the same rig state.
    """

    def __init__(self, emulator: MotorEmulator, host: str = "127.0.0.1", port: int = 0):
        self.emulator = emulator
        self._listener = socket.create_server((host, port))
        self.host, self.port = self._listener.getsockname()[:2]
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def serve_forever(self) -> None:
        self._listener.settimeout(0.2)
        while not self._stop.is_set():
            try:
                conn, peer = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            logger.info("controller connected from %s", peer)
            try:
                self._serve_connection(conn)
            finally:
                conn.close()
        self._listener.close()

    def _serve_connection(self, conn: socket.socket) -> None:
        conn.settimeout(0.2)
        buf = b""
        while not self._stop.is_set():
            try:
                chunk = conn.recv(4096)
            except socket.timeout:
                continue
            except OSError:
                return
            if not chunk:
                return
            buf += chunk
            while b"\n" in buf:
                line, _, buf = buf.partition(b"\n")
                reply = self.emulator.handle_line(line + b"\n")
                conn.sendall(reply.encode("ascii"))

    def start(self) -> "EmulatorServer":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)


def serve_stdio(emulator: MotorEmulator, stdin, stdout) -> None:
    """Pipe transport: one reply line per stdin line until EOF."""
    for line in stdin:
        stdout.write(emulator.handle_line(line))
        stdout.flush()
