"""Command-line interface: batch commands and bridge clients."""

from __future__ import annotations

import pytest
from click.testing import CliRunner

from cablerig.cli import main
from cablerig.evaluation import DEFAULT_PILEUP_FACTOR

from conftest import CONFIG_DIR

ROOM = str(CONFIG_DIR / "room.yaml")
DEMO_TRACE = str(CONFIG_DIR / "demo.trace")
DEMO_DEVICE = str(CONFIG_DIR / "demo-device.txt")


@pytest.fixture()
def runner():
    return CliRunner()


def test_version(runner):
    result = runner.invoke(main, ["--version"], prog_name="cablerig")
    assert result.exit_code == 0
    assert "cablerig, version" in result.output


def test_help_lists_commands(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for command in ("run", "plan", "calibrate", "emulator", "bridge", "eval", "goto"):
        assert command in result.output


# -- run -------------------------------------------------------------------------


def test_run_demo_trace_writes_log(runner, tmp_path):
    out = tmp_path / "log.csv"
    result = runner.invoke(
        main,
        ["run", "--config", ROOM, "--trace", DEMO_TRACE,
         "--device", DEMO_DEVICE, "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    assert "log records ->" in result.output
    text = out.read_text(encoding="utf-8")
    assert text.startswith("t_ms,kind,payload,")
    assert "demo-start" in text
    assert "demo-end" in text
    assert "await-match pattern=READY line=READY run 42" in text


def test_run_without_device_times_out_await(runner, tmp_path):
    out = tmp_path / "log.csv"
    result = runner.invoke(
        main, ["run", "--config", ROOM, "--trace", DEMO_TRACE, "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    assert "await-timeout pattern=READY" in out.read_text(encoding="utf-8")


def test_run_failing_trace_exits_nonzero(runner, tmp_path):
    trace = tmp_path / "bad.trace"
    trace.write_text("GOTO 100 350 130\n", encoding="utf-8")  # outside footprint
    out = tmp_path / "log.csv"
    result = runner.invoke(
        main, ["run", "--config", ROOM, "--trace", str(trace), "--out", str(out)]
    )
    assert result.exit_code == 1
    assert "error at t=" in result.output
    assert "InfeasibleMoveError" in out.read_text(encoding="utf-8")


def test_run_rejects_malformed_trace_file(runner, tmp_path):
    trace = tmp_path / "nonsense.trace"
    trace.write_text("FLY 1 2 3\n", encoding="utf-8")
    result = runner.invoke(main, ["run", "--config", ROOM, "--trace", str(trace)])
    assert result.exit_code != 0
    assert "line 1" in result.output


def test_run_requires_some_session(runner):
    result = runner.invoke(
        main,
        ["run", "--config", ROOM, "--trace", DEMO_TRACE, "--no-spawn-emulator"],
    )
    assert result.exit_code != 0
    assert "--connect" in result.output


# -- plan ------------------------------------------------------------------------


def test_plan_prints_schedules_without_side_effects(runner, tmp_path):
    result = runner.invoke(main, ["plan", "--config", ROOM, "--trace", DEMO_TRACE])
    assert result.exit_code == 0, result.output
    assert "GOTO (450, 150, 130) @ 10 cm/s:" in result.output
    assert "GOTO (450, 200, 160) @ 5 cm/s:" in result.output
    assert "net steps [" in result.output
    assert "AWAIT up to 2000 ms for /READY/" in result.output
    assert "DWELL 500 ms" in result.output
    assert "LOG demo-start" in result.output
    assert "total scheduled move time:" in result.output
    assert not (tmp_path / "log.csv").exists()


def test_plan_rejects_infeasible_goto(runner, tmp_path):
    trace = tmp_path / "bad.trace"
    trace.write_text("GOTO 100 350 130\n", encoding="utf-8")
    result = runner.invoke(main, ["plan", "--config", ROOM, "--trace", str(trace)])
    assert result.exit_code != 0
    assert "line 1: GOTO rejected" in result.output


# -- calibrate --------------------------------------------------------------------


def test_calibrate_recovers_anchors(runner, tmp_path):
    from cablerig.geometry import AnchorLayout, wire_lengths
    from conftest import CEILING_ANCHORS

    layout = AnchorLayout(CEILING_ANCHORS)
    lines = ["# x y z l0 l1 l2"]
    for p in [
        (125, 45, 30), (525, 45, 30), (525, 345, 30), (125, 345, 270),
        (325, 195, 295), (525, 195, 150),
    ]:
        from cablerig.geometry import Point3

        lengths = wire_lengths(layout, Point3(*map(float, p)))
        lines.append(" ".join(map(str, p)) + " " + " ".join(repr(l) for l in lengths))
    obs = tmp_path / "survey.txt"
    obs.write_text("\n".join(lines) + "\n", encoding="utf-8")

    result = runner.invoke(main, ["calibrate", str(obs)])
    assert result.exit_code == 0, result.output
    # Allow the solver's -0.0000 for coordinates that are exactly zero.
    import re

    assert re.search(r"motor 0: anchor \(-?0\.0000, -?0\.0000, 310\.0000\)", result.output)
    assert "motor 2: anchor (650.0000, 390.0000, 310.0000)" in result.output
    assert result.output.count("rms residual") == 3


def test_calibrate_reports_bad_lines(runner, tmp_path):
    obs = tmp_path / "short.txt"
    obs.write_text("1 2 3\n", encoding="utf-8")
    result = runner.invoke(main, ["calibrate", str(obs)])
    assert result.exit_code != 0
    assert "line 1" in result.output


def test_calibrate_underdetermined(runner, tmp_path):
    obs = tmp_path / "flat.txt"
    obs.write_text(
        "\n".join(f"{x} {y} 100 400 400 400" for x, y in
                  [(100, 100), (500, 100), (500, 300), (100, 300)]) + "\n",
        encoding="utf-8",
    )
    result = runner.invoke(main, ["calibrate", str(obs)])
    assert result.exit_code != 0
    assert "coplanar" in result.output


# -- emulator over stdio ------------------------------------------------------------


def test_emulator_stdio_session(runner):
    commands = (
        "PING\n"
        "HOME\n"
        "MOVE id=1 m0=+100 m1=-50 m2=+25 t=500\n"
        "STATUS id=2\n"
        "garbage\n"
        "PING\n"
    )
    result = runner.invoke(
        main, ["emulator", "--config", ROOM, "--stdio"], input=commands
    )
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == "ACK id=0"
    assert lines[1] == "ACK id=0"
    assert lines[2] == "ACK id=1"
    assert lines[3] == "STATE id=2 m0=+100 m1=-50 m2=+25"
    assert lines[4].startswith("ERR id=0 code=BADCMD")
    assert lines[5] == "ACK id=0"


# -- experiments ------------------------------------------------------------------


def test_eval_linear_ideal_drum(runner):
    result = runner.invoke(main, ["eval", "linear", "--phi", "0"])
    assert result.exit_code == 0
    assert "# linear_max_abs_err_cm=" in result.output
    header_at = result.output.splitlines().index(
        "experiment,position_id,commanded_cm,abs_err_cm,rel_err"
    )
    assert len(result.output.splitlines()) == header_at + 1 + 13


def test_eval_spatial_writes_report(runner, tmp_path):
    out = tmp_path / "spatial.csv"
    result = runner.invoke(main, ["eval", "spatial", "--out", str(out)])
    assert result.exit_code == 0
    text = out.read_text(encoding="utf-8")
    assert result.output == text
    assert "# spatial_max_abs_err_cm=" in text
    assert text.count("\nspatial,") == 3


def test_eval_fit_reproduces_recorded_factor(runner, tmp_path):
    out = tmp_path / "fit.csv"
    result = runner.invoke(main, ["eval", "fit", "--out", str(out)])
    assert result.exit_code == 0
    assert f"fitted pileup_factor: {DEFAULT_PILEUP_FACTOR!r}" in result.output
    table = out.read_text(encoding="utf-8").splitlines()
    assert table[0] == "position_id,target_rel,simulated_rel"
    assert len(table) == 14


# -- bridge clients ---------------------------------------------------------------


@pytest.mark.parametrize(
    "argv",
    [
        ["goto", "400", "150", "130", "--bridge", "http://127.0.0.1:1"],
        ["home", "--bridge", "http://127.0.0.1:1"],
        ["status", "--bridge", "http://127.0.0.1:1"],
    ],
)
def test_bridge_clients_error_when_unreachable(runner, argv):
    result = runner.invoke(main, argv)
    assert result.exit_code != 0
    assert "bridge unreachable" in result.output
