"""Motion-script parser: grammar, comments, line numbers, error reporting."""

from __future__ import annotations

import pytest

from cablerig.traces import (
    Await,
    Dwell,
    Goto,
    HomeCmd,
    LogMark,
    TraceParseError,
    load_trace,
    parse_trace,
)


def test_full_script_parses_in_order():
    text = """\
# warm-up routine
HOME
GOTO 355 196 300
GOTO 338.7 195.4 272.8 0.5   # slow approach
DWELL 250
AWAIT 5000 READY
LOG segment one done
"""
    trace = parse_trace(text)
    assert trace == (
        HomeCmd(2),
        Goto(355.0, 196.0, 300.0, None, 3),
        Goto(338.7, 195.4, 272.8, 0.5, 4),
        Dwell(250.0, 5),
        Await(5000.0, "READY", 6),
        LogMark("segment one done", 7),
    )


def test_blank_lines_and_full_line_comments_skipped():
    assert parse_trace("\n\n# nothing here\n   \n") == ()


def test_inline_comment_stripped_from_log_too():
    (mark,) = parse_trace("LOG before # after\n")
    assert mark.text == "before"


def test_unknown_instruction_reports_line_number():
    with pytest.raises(TraceParseError, match=r"line 1: unknown instruction 'FLY'"):
        parse_trace("FLY 1 2 3\n")
    try:
        parse_trace("HOME\n\nFLY 1 2 3\n")
    except TraceParseError as e:
        assert e.line_no == 3


@pytest.mark.parametrize(
    "line,complaint",
    [
        ("GOTO 1 2", "GOTO takes x y z"),
        ("GOTO 1 2 3 4 5", "GOTO takes x y z"),
        ("GOTO a 2 3", "x must be a number"),
        ("GOTO 1 2 inf", "must be finite"),
        ("GOTO 1 2 3 0", "speed must be positive"),
        ("GOTO 1 2 3 -1", "speed must be positive"),
        ("GOTO 1 2 3 nan", "speed must be finite"),
        ("DWELL", "exactly one duration"),
        ("DWELL 10 20", "exactly one duration"),
        ("DWELL -5", "nonnegative"),
        ("DWELL soon", "duration must be a number"),
        ("AWAIT", "timeout in ms and a pattern"),
        ("AWAIT 100", "needs a pattern"),
        ("AWAIT 0 READY", "timeout must be positive"),
        ("AWAIT -3 READY", "timeout must be positive"),
        ("AWAIT never READY", "timeout must be a number"),
        ("LOG", "needs a message"),
        ("LOG    # only a comment", "needs a message"),
        ("HOME now", "HOME takes no arguments"),
        ("goto 1 2 3", "unknown instruction"),
    ],
)
def test_malformed_lines_rejected(line, complaint):
    with pytest.raises(TraceParseError, match=complaint):
        parse_trace(line + "\n")


def test_dwell_zero_allowed():
    assert parse_trace("DWELL 0\n") == (Dwell(0.0, 1),)


def test_await_pattern_is_rest_of_line():
    (a,) = parse_trace("AWAIT 2500 ARM (ok|ready)$\n")
    assert a.timeout_ms == 2500.0
    assert a.pattern == "ARM (ok|ready)$"
    assert a.matcher().search("pre ARM ok")


def test_await_bad_regex_falls_back_to_literal():
    (a,) = parse_trace("AWAIT 100 READY[\n")
    matcher = a.matcher()
    assert matcher.search("status READY[ now")
    assert not matcher.search("status READY now")


def test_goto_scientific_notation_coordinates():
    (g,) = parse_trace("GOTO 1e2 2.5e1 3E1\n")
    assert (g.x, g.y, g.z) == (100.0, 25.0, 30.0)


def test_load_trace_reads_files(tmp_path):
    path = tmp_path / "demo.trace"
    path.write_text("HOME\nGOTO 400 150 130\n", encoding="utf-8")
    assert load_trace(path) == (HomeCmd(1), Goto(400.0, 150.0, 130.0, None, 2))


def test_shipped_demo_trace_parses():
    from conftest import CONFIG_DIR

    trace = load_trace(CONFIG_DIR / "demo.trace")
    assert trace, "demo trace must contain instructions"
    assert any(isinstance(i, Goto) for i in trace)
