"""Experiment controller: compiles traces into wire commands and logs events.

The controller is deliberately open-loop. It dead-reckons a "believed"
carriage pose from the step schedules it has sent (planning on the
constant-radius drum model) and never reads the plant's true pose; the gap
between believed and true is exactly what the evaluation module measures.

Timestamps are a virtual clock in milliseconds: moves advance it by their
planned duration, DWELL by its argument, AWAIT by the time until the matching
device line or the timeout. One trace runs at a time; device lines are merged
into the log in emission order while an AWAIT is consuming them.
"""

from __future__ import annotations

import csv
import io
import threading
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Protocol, Sequence, Tuple, Union

from .geometry import GeometryError, Point3, forward_kinematics, wire_lengths
from .planner import MoveRequest, PlanningError, plan_move
from .protocol import Ack, Command, Config, Err, Home, Move, Reply
from .rig import RigConfig
from .spool import SpoolError, SpoolState, UnspoolError, length_for_steps
from .traces import Await, Dwell, Goto, HomeCmd, LogMark, Trace

RADIUS_CENTI_UM_PER_CM = 10**6

LOG_COLUMNS = ("t_ms", "kind", "payload", "cmd_x", "cmd_y", "cmd_z", "bel_x", "bel_y", "bel_z")


class ControllerError(RuntimeError):
    """Setup failure (configuration handshake rejected, session unusable)."""


class TraceAborted(RuntimeError):
    """A trace stopped early; the terminal record is already in the log."""


@dataclass(frozen=True)
class LogRecord:
    t_ms: float
    kind: str  # move-start | ack | event | timeout | device-line | error
    payload: str
    commanded: Optional[Point3]
    believed: Optional[Point3]


class Session(Protocol):
    def send(self, cmd: Command) -> Reply: ...


class LineDevice(Protocol):
    """Any source of timestamped text lines (the rig-side sensor node)."""

    def next_line(self, deadline_ms: float) -> Optional[Tuple[float, str]]: ...


class ScriptedDevice:
    """Deterministic device stub: emits pre-scripted lines at fixed times."""

    def __init__(self, lines: Iterable[Tuple[float, str]]):
        entries = [(float(t), str(text)) for t, text in lines]
        entries.sort(key=lambda e: e[0])
        self._lines = deque(entries)

    def next_line(self, deadline_ms: float) -> Optional[Tuple[float, str]]:
        if self._lines and self._lines[0][0] <= deadline_ms:
            return self._lines.popleft()
        return None

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ScriptedDevice":
        """Each line: `<at_ms> <text>`; `#` comments and blanks ignored."""
        entries = []
        for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            at, _, text = line.partition(" ")
            try:
                t = float(at)
            except ValueError:
                raise ValueError(f"device script line {line_no}: bad timestamp {at!r}") from None
            entries.append((t, text.strip()))
        return cls(entries)


class SilentDevice:
    def next_line(self, deadline_ms: float) -> Optional[Tuple[float, str]]:
        return None


class RigController:
    def __init__(self, rig: RigConfig, session: Session, device: Optional[LineDevice] = None):
        self.rig = rig
        self.session = session
        self.device: LineDevice = device if device is not None else SilentDevice()
        self.records: List[LogRecord] = []
        self.clock_ms = 0.0
        self._next_move_id = 1
        self._commanded: Optional[Point3] = None
        self._believed: Optional[Point3] = None
        self._believed_lengths: Optional[List[float]] = None
        self._states: List[SpoolState] = []
        self._lock = threading.Lock()

    @property
    def believed_position(self) -> Optional[Point3]:
        return self._believed

    # -- setup ---------------------------------------------------------------

    def configure_and_home(self) -> None:
        spr = {p.steps_per_rev for p in self.rig.motors}
        if len(spr) == 1:
            cfg = Config(
                motors=len(self.rig.motors),
                steps_per_rev=spr.pop(),
                radii_centi_um=tuple(
                    round(p.base_radius * RADIUS_CENTI_UM_PER_CM) for p in self.rig.motors
                ),
            )
            reply = self.session.send(cfg)
            if isinstance(reply, Err):
                raise ControllerError(f"configuration rejected: {reply.code} {reply.message}")
        self.home()

    # -- instruction primitives ------------------------------------------------

    def home(self) -> None:
        reply = self.session.send(Home())
        if isinstance(reply, Err):
            self._abort(f"code={reply.code} msg={reply.message}")
        lengths = wire_lengths(self.rig.layout, self.rig.home)
        self._believed = self.rig.home
        self._believed_lengths = list(lengths)
        self._states = [
            SpoolState(p, l + self.rig.slack_reserve)
            for p, l in zip(self.rig.motors, lengths)
        ]
        self._record("ack", "home")

    def goto(self, x: float, y: float, z: float, speed: Optional[float] = None) -> None:
        if self._believed is None:
            raise ControllerError("home the rig before moving")
        target = Point3(float(x), float(y), float(z))
        request_speed = speed if speed is not None else self.rig.planner.speed
        self._commanded = target
        try:
            request = MoveRequest(
                frm=self._believed,
                to=target,
                speed=request_speed,
                max_chord=self.rig.planner.max_chord,
            )
            schedule = plan_move(
                self.rig.layout,
                self._states,
                request,
                mass=self.rig.carriage_mass,
                max_step_rate=self.rig.planner.max_step_rate,
            )
        except (PlanningError, SpoolError, GeometryError, ValueError) as e:
            self._abort(f"rejected={type(e).__name__} msg={e}")

        self._record(
            "move-start",
            f"goto x={target.x:g} y={target.y:g} z={target.z:g} speed={request_speed:g}"
            f" segments={len(schedule.segments)} duration_ms={schedule.duration_ms:g}",
        )
        first_id = self._next_move_id
        for segment in schedule.segments:
            move = Move(self._next_move_id, segment.steps, segment.duration_ms)
            self._next_move_id += 1
            reply = self.session.send(move)
            if isinstance(reply, Err):
                self._abort(f"code={reply.code} msg={reply.message}")
            if not isinstance(reply, Ack) or reply.id != move.id:
                self._abort(f"rejected=BadReply msg=expected_ack_for_{move.id}")
            self.clock_ms += segment.duration_ms

        # Dead-reckon: a leftover positive wind-in residual means that much
        # wire is still paid out beyond the target length.
        target_lengths = wire_lengths(self.rig.layout, target)
        self._believed_lengths = [
            l + r for l, r in zip(target_lengths, schedule.residuals)
        ]
        self._states = [
            length_for_steps(s, n)[1] for s, n in zip(self._states, schedule.net_steps)
        ]
        if len(self.rig.layout) >= 3:
            try:
                self._believed = forward_kinematics(self.rig.layout, self._believed_lengths)
            except GeometryError:
                self._believed = target
        else:
            self._believed = target
        if schedule.segments:
            ids = f"{first_id}-{self._next_move_id - 1}"
        else:
            ids = "none"
        self._record("ack", f"goto-complete ids={ids}")

    def dwell(self, ms: float) -> None:
        self.clock_ms += ms

    def log_mark(self, text: str) -> None:
        self._record("event", text)

    def await_pattern(self, pattern_ins: Await) -> None:
        t0 = self.clock_ms
        deadline = t0 + pattern_ins.timeout_ms
        matcher = pattern_ins.matcher()
        while True:
            item = self.device.next_line(deadline)
            if item is None:
                break
            emitted, text = item
            stamp = max(emitted, t0)
            if matcher.search(text):
                self.clock_ms = max(self.clock_ms, stamp)
                self._record("event", f"await-match pattern={pattern_ins.pattern} line={text}")
                return
            self._record("device-line", text, t_ms=stamp)
        self.clock_ms = deadline
        self._record(
            "timeout",
            f"await-timeout pattern={pattern_ins.pattern} timeout_ms={pattern_ins.timeout_ms:g}",
        )

    # -- trace execution -----------------------------------------------------

    def run(self, trace: Trace, abort_event: Optional[threading.Event] = None) -> List[LogRecord]:
        with self._lock:
            for instruction in trace:
                if abort_event is not None and abort_event.is_set():
                    self._record("event", "trace-aborted")
                    break
                try:
                    if isinstance(instruction, Goto):
                        self.goto(instruction.x, instruction.y, instruction.z, instruction.speed)
                    elif isinstance(instruction, Dwell):
                        self.dwell(instruction.ms)
                    elif isinstance(instruction, Await):
                        self.await_pattern(instruction)
                    elif isinstance(instruction, LogMark):
                        self.log_mark(instruction.text)
                    elif isinstance(instruction, HomeCmd):
                        self.home()
                    else:
                        raise ControllerError(f"unknown instruction {instruction!r}")
                except TraceAborted:
                    break
            return self.records

    # -- internals -------------------------------------------------------------

    def _record(self, kind: str, payload: str, t_ms: Optional[float] = None) -> None:
        self.records.append(
            LogRecord(
                t_ms=self.clock_ms if t_ms is None else t_ms,
                kind=kind,
                payload=payload,
                commanded=self._commanded,
                believed=self._believed,
            )
        )

    def _abort(self, payload: str) -> None:
        self._record("error", payload)
        raise TraceAborted(payload)


def run_trace(
    rig: RigConfig,
    trace: Trace,
    session: Session,
    device: Optional[LineDevice] = None,
    abort_event: Optional[threading.Event] = None,
) -> List[LogRecord]:
    """Configure, home, run the trace, and return the full ordered log."""
    controller = RigController(rig, session, device)
    controller.configure_and_home()
    return controller.run(trace, abort_event=abort_event)


# -- log serialization ---------------------------------------------------------


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def log_to_csv(records: Sequence[LogRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LOG_COLUMNS)
    for r in records:
        c, b = r.commanded, r.believed
        writer.writerow(
            [
                repr(float(r.t_ms)),
                r.kind,
                r.payload,
                _fmt(c.x if c else None),
                _fmt(c.y if c else None),
                _fmt(c.z if c else None),
                _fmt(b.x if b else None),
                _fmt(b.y if b else None),
                _fmt(b.z if b else None),
            ]
        )
    return buf.getvalue()


def write_log_csv(records: Sequence[LogRecord], path: Union[str, Path]) -> None:
    Path(path).write_text(log_to_csv(records), encoding="utf-8")
