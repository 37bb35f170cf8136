"""Bridge between one live rig session and any number of UI clients.

The bridge owns an in-process emulator plus controller pair and serializes
every mutating command through them, so the one-command-in-flight discipline
of the wire protocol is preserved no matter how many panels are connected.

Endpoints:

- `GET  /state`        current snapshot (geometry, poses, clock, busy flag)
- `GET  /events`       server-sent events: `state` snapshots and `log` records
- `POST /command`      text/plain, first line `GOTO x y z [speed]` or `HOME`
                       or `TRACE-ABORT`, or `TRACE-START` followed by a trace
                       body on the remaining lines; replies in-band, never 5xx
- `POST /feasibility`  advisory check of a target point
- `GET  /log.csv`      the full experiment log as CSV

Invalid or currently impossible commands (unparseable text, jog while a trace
runs) are answered with `accepted: false` and a reason; they never kill the
session.
"""

from __future__ import annotations

import asyncio
import threading
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse, StreamingResponse

from ..controller import RigController, TraceAborted, log_to_csv
from ..emulator import LocalSession, MotorEmulator
from ..evaluation import DEFAULT_PILEUP_FACTOR
from ..geometry import GeometryError, tension_feasibility
from ..geometry import Point3
from ..rig import RigConfig
from ..traces import Goto, TraceParseError, parse_trace
from .models import (
    CommandResult,
    FeasibilityRequest,
    FeasibilityResponse,
    LogRecordModel,
    StateSnapshot,
    Vec3,
)

_EVENT_POLL_S = 0.05


class BridgeSession:
    """The single mutable session behind the HTTP surface."""

    def __init__(self, rig: RigConfig, pileup_factor: float, real_time: bool = False):
        self.rig = rig
        self.pileup_factor = pileup_factor
        self.emulator = MotorEmulator(rig, pileup_override=pileup_factor, real_time=real_time)
        self.controller = RigController(rig, LocalSession(self.emulator))
        self.controller.configure_and_home()
        self._mutate = threading.Lock()
        self._trace_thread: Optional[threading.Thread] = None
        self._trace_abort = threading.Event()
        self.last_error: Optional[str] = None

    # -- state ----------------------------------------------------------------

    @property
    def trace_active(self) -> bool:
        return self._trace_thread is not None and self._trace_thread.is_alive()

    def snapshot(self) -> StateSnapshot:
        try:
            true_pos = self.emulator.position()
        except GeometryError:
            true_pos = None
        return StateSnapshot(
            clock_ms=self.controller.clock_ms,
            busy=self.trace_active or self._mutate.locked(),
            trace_active=self.trace_active,
            anchors=[Vec3.of(a) for a in self.rig.layout.anchors],
            room=Vec3(x=self.rig.room[0], y=self.rig.room[1], z=self.rig.room[2])
            if self.rig.room
            else None,
            home=Vec3.of(self.rig.home),
            believed=Vec3.of(self.controller.believed_position),
            true_position=Vec3.of(true_pos),
            wire_out_cm=[round(w, 9) for w in self.emulator.wire_out()],
            pileup_factor=self.pileup_factor,
            record_count=len(self.controller.records),
            last_error=self.last_error,
        )

    # -- commands ----------------------------------------------------------------

    def execute(self, text: str) -> CommandResult:
        lines = text.splitlines()
        first = lines[0].strip() if lines else ""
        verb = first.split(" ", 1)[0].upper() if first else ""
        if verb == "TRACE-ABORT":
            return self._trace_abort_cmd()
        if verb == "TRACE-START":
            return self._trace_start(lines[1:])
        if verb in ("GOTO", "HOME"):
            return self._jog(first)
        return self._reject(f"unknown command {verb or '(empty)'}")

    def _reject(self, message: str) -> CommandResult:
        self.last_error = message
        return CommandResult(
            accepted=False, message=message, record_count=len(self.controller.records)
        )

    def _jog(self, line: str) -> CommandResult:
        if self.trace_active:
            return self._reject("trace in progress; abort it before jogging")
        try:
            (instruction,) = parse_trace(line)
        except (TraceParseError, ValueError) as e:
            return self._reject(str(e))
        if not self._mutate.acquire(blocking=False):
            return self._reject("another command is in flight")
        try:
            if isinstance(instruction, Goto):
                self.controller.goto(
                    instruction.x, instruction.y, instruction.z, instruction.speed
                )
            else:
                self.controller.home()
            self.last_error = None
            return CommandResult(
                accepted=True, message="ok", record_count=len(self.controller.records)
            )
        except TraceAborted as e:
            return self._reject(str(e))
        finally:
            self._mutate.release()

    def _trace_start(self, body_lines) -> CommandResult:
        if self.trace_active:
            return self._reject("a trace is already running")
        try:
            trace = parse_trace("\n".join(body_lines))
        except TraceParseError as e:
            return self._reject(str(e))
        if not trace:
            return self._reject("trace body is empty")
        self._trace_abort.clear()

        def work():
            with self._mutate:
                try:
                    self.controller.run(trace, abort_event=self._trace_abort)
                except TraceAborted:
                    pass

        self._trace_thread = threading.Thread(target=work, daemon=True)
        self._trace_thread.start()
        self.last_error = None
        return CommandResult(
            accepted=True,
            message=f"trace started ({len(trace)} instructions)",
            record_count=len(self.controller.records),
        )

    def _trace_abort_cmd(self) -> CommandResult:
        if not self.trace_active:
            return self._reject("no trace is running")
        self._trace_abort.set()
        self._trace_thread.join(timeout=10.0)
        return CommandResult(
            accepted=True, message="trace aborted", record_count=len(self.controller.records)
        )


def create_app(
    rig: RigConfig,
    *,
    pileup_factor: float = DEFAULT_PILEUP_FACTOR,
    real_time: bool = False,
) -> FastAPI:
    app = FastAPI(title="cablerig bridge", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    session = BridgeSession(rig, pileup_factor, real_time=real_time)
    app.state.session = session

    @app.get("/state", response_model=StateSnapshot)
    def state() -> StateSnapshot:
        return session.snapshot()

    @app.post("/command", response_model=CommandResult)
    async def command(request: Request) -> CommandResult:
        text = (await request.body()).decode("utf-8", errors="replace")
        return await asyncio.to_thread(session.execute, text)

    @app.post("/feasibility", response_model=FeasibilityResponse)
    def feasibility(body: FeasibilityRequest) -> FeasibilityResponse:
        point = Point3(body.x, body.y, body.z)
        inside = None
        if session.rig.room is not None:
            rx, ry, rz = session.rig.room
            inside = 0 <= body.x <= rx and 0 <= body.y <= ry and 0 <= body.z <= rz
        solution = tension_feasibility(session.rig.layout, point, session.rig.carriage_mass)
        return FeasibilityResponse(
            feasible=solution.feasible,
            inside_room=inside,
            tensions_g=solution.tensions,
            warnings=solution.warnings,
        )

    @app.get("/log.csv")
    def log_csv() -> Response:
        return PlainTextResponse(
            log_to_csv(session.controller.records), media_type="text/csv"
        )

    @app.get("/events")
    async def events(request: Request) -> StreamingResponse:
        async def stream():
            sent_records = 0
            last_state = ""
            while True:
                if await request.is_disconnected():
                    return
                records = session.controller.records
                while sent_records < len(records):
                    r = records[sent_records]
                    sent_records += 1
                    model = LogRecordModel(
                        t_ms=r.t_ms,
                        kind=r.kind,
                        payload=r.payload,
                        commanded=Vec3.of(r.commanded),
                        believed=Vec3.of(r.believed),
                    )
                    yield f"event: log\ndata: {model.model_dump_json()}\n\n"
                state_json = session.snapshot().model_dump_json()
                if state_json != last_state:
                    last_state = state_json
                    yield f"event: state\ndata: {state_json}\n\n"
                await asyncio.sleep(_EVENT_POLL_S)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/", response_class=PlainTextResponse)
    def index() -> str:
        return (
            "cablerig bridge\n"
            "GET /state | GET /events (SSE) | POST /command | "
            "POST /feasibility | GET /log.csv\n"
        )

    return app
