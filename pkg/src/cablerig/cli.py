"""Command-line interface.

Batch commands (`run`, `plan`, `calibrate`, `eval`, `emulator`) work on the
core package directly; interactive commands (`goto`, `home`, `status`) are
thin HTTP clients for a running bridge (`cablerig bridge`).
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Optional, Tuple

import click

from . import evaluation
from .calibration import CalibrationError, estimate_anchors
from .controller import RigController, ScriptedDevice, TraceAborted, write_log_csv
from .emulator import EmulatorServer, LocalSession, MotorEmulator, TcpSession, serve_stdio
from .geometry import GeometryError, Point3, wire_lengths
from .planner import MoveRequest, PlanningError, plan_move
from .rig import RigConfigError, load_rig
from .spool import SpoolError, SpoolState
from .traces import Goto, Await, Dwell, HomeCmd, LogMark, TraceParseError, load_trace

DEFAULT_BRIDGE = "http://127.0.0.1:8787"


def _load_rig_or_die(path: str):
    try:
        return load_rig(path)
    except (RigConfigError, OSError) as e:
        raise click.ClickException(f"rig config: {e}")


def _load_trace_or_die(path: str):
    try:
        return load_trace(path)
    except (TraceParseError, OSError) as e:
        raise click.ClickException(f"trace: {e}")


@click.group()
@click.version_option(package_name="cablerig")
def main() -> None:
    """Plan, emulate, drive, and evaluate a wire-positioning rig."""


# -- batch commands ------------------------------------------------------------


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--trace", "trace_path", required=True, type=click.Path(exists=True))
@click.option("--connect", metavar="HOST:PORT", help="Drive an already-running emulator.")
@click.option(
    "--spawn-emulator/--no-spawn-emulator",
    default=True,
    show_default=True,
    help="Run an in-process emulator when --connect is not given.",
)
@click.option("--phi", type=float, default=None, help="Plant drum build-up factor override.")
@click.option("--device", "device_path", type=click.Path(exists=True), help="Scripted device lines: `<at_ms> <text>`.")
@click.option("--out", "out_path", type=click.Path(), default="log.csv", show_default=True)
def run(config_path, trace_path, connect, spawn_emulator, phi, device_path, out_path):
    """Execute a trace against an emulator and write the experiment log."""
    rig = _load_rig_or_die(config_path)
    trace = _load_trace_or_die(trace_path)
    if connect:
        host, _, port = connect.rpartition(":")
        try:
            session = TcpSession(host or "127.0.0.1", int(port))
        except (OSError, ValueError) as e:
            raise click.ClickException(f"cannot connect to emulator at {connect}: {e}")
    elif spawn_emulator:
        session = LocalSession(MotorEmulator(rig, pileup_override=phi))
    else:
        raise click.ClickException("give --connect HOST:PORT or allow --spawn-emulator")
    device = ScriptedDevice.from_file(device_path) if device_path else None

    controller = RigController(rig, session, device)
    controller.configure_and_home()
    aborted = False
    try:
        controller.run(trace)
    except TraceAborted:
        aborted = True
    records = controller.records
    write_log_csv(records, out_path)
    click.echo(f"{len(records)} log records -> {out_path}")
    errors = [r for r in records if r.kind == "error"]
    for r in errors:
        click.echo(f"error at t={r.t_ms:g} ms: {r.payload}", err=True)
    if errors or aborted:
        sys.exit(1)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--trace", "trace_path", required=True, type=click.Path(exists=True))
def plan(config_path, trace_path):
    """Dry-run a trace: print every step schedule without sending anything."""
    rig = _load_rig_or_die(config_path)
    trace = _load_trace_or_die(trace_path)
    from .spool import length_for_steps

    believed = rig.home
    states = [
        SpoolState(p, l + rig.slack_reserve)
        for p, l in zip(rig.motors, wire_lengths(rig.layout, rig.home))
    ]
    clock = 0.0
    for ins in trace:
        if isinstance(ins, Goto):
            target = Point3(ins.x, ins.y, ins.z)
            speed = ins.speed or rig.planner.speed
            try:
                schedule = plan_move(
                    rig.layout,
                    states,
                    MoveRequest(frm=believed, to=target, speed=speed, max_chord=rig.planner.max_chord),
                    mass=rig.carriage_mass,
                    max_step_rate=rig.planner.max_step_rate,
                )
            except (PlanningError, SpoolError, GeometryError, ValueError) as e:
                raise click.ClickException(f"line {ins.line_no}: GOTO rejected: {e}")
            click.echo(
                f"GOTO ({target.x:g}, {target.y:g}, {target.z:g}) @ {speed:g} cm/s: "
                f"{len(schedule.segments)} segments, {schedule.duration_ms:g} ms, "
                f"net steps {list(schedule.net_steps)}, residuals "
                f"{[round(r, 6) for r in schedule.residuals]}"
            )
            for w in schedule.warnings:
                click.echo(f"  warning: {w}")
            states = [length_for_steps(s, n)[1] for s, n in zip(states, schedule.net_steps)]
            believed = target
            clock += schedule.duration_ms
        elif isinstance(ins, Dwell):
            clock += ins.ms
            click.echo(f"DWELL {ins.ms:g} ms")
        elif isinstance(ins, Await):
            click.echo(f"AWAIT up to {ins.timeout_ms:g} ms for /{ins.pattern}/")
        elif isinstance(ins, LogMark):
            click.echo(f"LOG {ins.text}")
        elif isinstance(ins, HomeCmd):
            believed = rig.home
            click.echo("HOME")
    click.echo(f"total scheduled move time: {clock:g} ms")


@main.command()
@click.argument("observations", type=click.Path(exists=True))
def calibrate(observations):
    """Estimate anchor positions from `x y z l0 l1 ...` observation lines."""
    rows = []
    for line_no, raw in enumerate(Path(observations).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 4:
            raise click.ClickException(
                f"line {line_no}: need x y z plus at least one wire length"
            )
        try:
            values = [float(v) for v in parts]
        except ValueError:
            raise click.ClickException(f"line {line_no}: non-numeric value")
        rows.append((Point3(*values[:3]), values[3:]))
    try:
        layout, rms = estimate_anchors(rows)
    except CalibrationError as e:
        raise click.ClickException(str(e))
    for i, (anchor, r) in enumerate(zip(layout.anchors, rms)):
        click.echo(
            f"motor {i}: anchor ({anchor.x:.4f}, {anchor.y:.4f}, {anchor.z:.4f})"
            f"  rms residual {r:.6f} cm"
        )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--listen", metavar="HOST:PORT", default=None, help="Serve the wire protocol over TCP.")
@click.option("--stdio", is_flag=True, help="Serve the wire protocol on stdin/stdout.")
@click.option("--phi", type=float, default=None, help="Drum build-up factor override.")
@click.option("--real-time", is_flag=True, help="Sleep move durations out in wall time.")
@click.option("--seed", type=int, default=None, help="Reserved; the plant is deterministic.")
def emulator(config_path, listen, stdio, phi, real_time, seed):
    """Run the motor-box emulator."""
    del seed  # reserved for future noise models; the plant is deterministic
    rig = _load_rig_or_die(config_path)
    emu = MotorEmulator(rig, pileup_override=phi, real_time=real_time)
    if stdio:
        serve_stdio(emu, sys.stdin, sys.stdout)
        return
    host, _, port = (listen or "127.0.0.1:9753").rpartition(":")
    server = EmulatorServer(emu, host or "127.0.0.1", int(port))
    click.echo(f"emulator listening on {server.host}:{server.port}", err=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8787, show_default=True)
@click.option(
    "--phi",
    type=float,
    default=None,
    help="Plant drum build-up factor (default: the recorded fitted value).",
)
@click.option("--real-time", is_flag=True, help="Honor move durations in wall time.")
def bridge(config_path, host, port, phi, real_time):
    """Serve the UI bridge (HTTP + SSE) around an in-process emulator."""
    import uvicorn

    from .service import create_app

    rig = _load_rig_or_die(config_path)
    app = create_app(
        rig,
        pileup_factor=evaluation.DEFAULT_PILEUP_FACTOR if phi is None else phi,
        real_time=real_time,
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.group(name="eval")
def eval_group():
    """Positioning-error experiments."""


@eval_group.command(name="linear")
@click.option("--phi", type=float, default=evaluation.DEFAULT_PILEUP_FACTOR, show_default=True)
@click.option("--repetitions", type=int, default=1, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def eval_linear(phi, repetitions, out_path):
    """Single-drum 25 cm wind-in errors across 13 start positions."""
    spec = evaluation.ExperimentSpec(repetitions=repetitions)
    records = evaluation.run_linear(spec, phi)
    report = evaluation.emit_report(records, path=out_path)
    click.echo(report, nl=False)


@eval_group.command(name="spatial")
@click.option("--phi", type=float, default=evaluation.DEFAULT_PILEUP_FACTOR, show_default=True)
@click.option("--repetitions", type=int, default=1, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def eval_spatial(phi, repetitions, out_path):
    """Three-anchor 30 cm moves toward the room center."""
    spec = evaluation.ExperimentSpec(repetitions=repetitions)
    records = evaluation.run_spatial(spec, phi)
    report = evaluation.emit_report(
        records, notes=evaluation.SPATIAL_START_NOTES, path=out_path
    )
    click.echo(report, nl=False)


@eval_group.command(name="fit")
@click.option("--out", "out_path", type=click.Path(), default=None)
def eval_fit(out_path):
    """Fit the drum build-up factor to the default error envelope."""
    spec = evaluation.ExperimentSpec()
    result = evaluation.fit_pileup(spec)
    click.echo(f"fitted pileup_factor: {result.pileup_factor!r}")
    click.echo(f"objective (sum sq rel-err deviation): {result.objective:.6e}")
    for w in result.warnings:
        click.echo(f"warning: {w}")
    if out_path:
        lines = ["position_id,target_rel,simulated_rel"]
        for i, (t, s) in enumerate(zip(result.target_rel, result.simulated_rel), 1):
            lines.append(f"{i},{t!r},{s!r}")
        Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        click.echo(f"fit table -> {out_path}")


# -- thin HTTP clients -----------------------------------------------------------


def _bridge_post_command(bridge_url: str, text: str) -> None:
    import httpx

    try:
        response = httpx.post(
            f"{bridge_url.rstrip('/')}/command",
            content=text.encode("utf-8"),
            headers={"content-type": "text/plain"},
            timeout=60.0,
        )
        response.raise_for_status()
    except httpx.HTTPError as e:
        raise click.ClickException(f"bridge unreachable: {e}")
    body = response.json()
    click.echo(body.get("message", ""))
    if not body.get("accepted", False):
        sys.exit(1)


@main.command()
@click.argument("x", type=float)
@click.argument("y", type=float)
@click.argument("z", type=float)
@click.option("--speed", type=float, default=None, help="cm/s")
@click.option("--bridge", "bridge_url", default=DEFAULT_BRIDGE, show_default=True)
def goto(x, y, z, speed, bridge_url):
    """Jog the carriage to (X, Y, Z) through a running bridge."""
    line = f"GOTO {x:g} {y:g} {z:g}" + (f" {speed:g}" if speed is not None else "")
    _bridge_post_command(bridge_url, line)


@main.command()
@click.option("--bridge", "bridge_url", default=DEFAULT_BRIDGE, show_default=True)
def home(bridge_url):
    """Re-home the rig through a running bridge."""
    _bridge_post_command(bridge_url, "HOME")


@main.command()
@click.option("--bridge", "bridge_url", default=DEFAULT_BRIDGE, show_default=True)
def status(bridge_url):
    """Print a running bridge's state snapshot."""
    import httpx

    try:
        response = httpx.get(f"{bridge_url.rstrip('/')}/state", timeout=10.0)
        response.raise_for_status()
    except httpx.HTTPError as e:
        raise click.ClickException(f"bridge unreachable: {e}")
    snap = response.json()

    def fmt(p):
        return "-" if not p else f"({p['x']:.2f}, {p['y']:.2f}, {p['z']:.2f})"

    click.echo(f"clock_ms      {snap['clock_ms']:g}")
    click.echo(f"busy          {snap['busy']} (trace={snap['trace_active']})")
    click.echo(f"believed      {fmt(snap.get('believed'))}")
    click.echo(f"true          {fmt(snap.get('true_position'))}")
    click.echo(f"wire_out_cm   {[round(w, 2) for w in snap.get('wire_out_cm', [])]}")
    click.echo(f"records       {snap.get('record_count')}")
    if snap.get("last_error"):
        click.echo(f"last_error    {snap['last_error']}")


if __name__ == "__main__":
    main()
