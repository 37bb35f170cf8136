"""Trace files: line-oriented motion scripts.

Grammar (one instruction per line, `#` starts a comment, blank lines ignored):

    GOTO <x> <y> <z> [speed_cm_s]   move the carriage to (x, y, z)
    DWELL <ms>                      let virtual time pass
    AWAIT <timeout_ms> <pattern>    wait for a device line matching pattern
    LOG <text>                      put a marker into the experiment log
    HOME                            re-declare the current pose as home

Coordinates are centimeters, times milliseconds. The AWAIT pattern is the
rest of the line, interpreted as a regular expression searched anywhere in
each device line; if it does not compile as a regex it is matched literally.
Files are UTF-8 and conventionally use the `.trace` extension.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Pattern, Tuple, Union


class TraceParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Goto:
    x: float
    y: float
    z: float
    speed: Optional[float] = None
    line_no: int = 0


@dataclass(frozen=True)
class Dwell:
    ms: float
    line_no: int = 0


@dataclass(frozen=True)
class Await:
    timeout_ms: float
    pattern: str
    line_no: int = 0

    def matcher(self) -> Pattern[str]:
        try:
            return re.compile(self.pattern)
        except re.error:
            return re.compile(re.escape(self.pattern))


@dataclass(frozen=True)
class LogMark:
    text: str
    line_no: int = 0


@dataclass(frozen=True)
class HomeCmd:
    line_no: int = 0


Instruction = Union[Goto, Dwell, Await, LogMark, HomeCmd]
Trace = Tuple[Instruction, ...]


def _number(token: str, line_no: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise TraceParseError(line_no, f"{what} must be a number, got {token!r}") from None
    if not math.isfinite(value):
        raise TraceParseError(line_no, f"{what} must be finite")
    return value


def parse_trace(text: str) -> Trace:
    instructions: List[Instruction] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        verb, _, rest = line.partition(" ")
        rest = rest.strip()
        args = rest.split()
        if verb == "GOTO":
            if len(args) not in (3, 4):
                raise TraceParseError(line_no, f"GOTO takes x y z [speed], got {len(args)} values")
            x, y, z = (_number(a, line_no, c) for a, c in zip(args, "xyz"))
            speed = None
            if len(args) == 4:
                speed = _number(args[3], line_no, "speed")
                if speed <= 0:
                    raise TraceParseError(line_no, "speed must be positive")
            instructions.append(Goto(x, y, z, speed, line_no))
        elif verb == "DWELL":
            if len(args) != 1:
                raise TraceParseError(line_no, "DWELL takes exactly one duration in ms")
            ms = _number(args[0], line_no, "duration")
            if ms < 0:
                raise TraceParseError(line_no, "duration must be nonnegative")
            instructions.append(Dwell(ms, line_no))
        elif verb == "AWAIT":
            if not args:
                raise TraceParseError(line_no, "AWAIT takes a timeout in ms and a pattern")
            timeout = _number(args[0], line_no, "timeout")
            if timeout <= 0:
                raise TraceParseError(line_no, "timeout must be positive")
            pattern = rest.partition(" ")[2].strip()
            if not pattern:
                raise TraceParseError(line_no, "AWAIT needs a pattern after the timeout")
            instructions.append(Await(timeout, pattern, line_no))
        elif verb == "LOG":
            if not rest:
                raise TraceParseError(line_no, "LOG needs a message")
            instructions.append(LogMark(rest, line_no))
        elif verb == "HOME":
            if args:
                raise TraceParseError(line_no, "HOME takes no arguments")
            instructions.append(HomeCmd(line_no))
        else:
            raise TraceParseError(line_no, f"unknown instruction {verb!r}")
    return tuple(instructions)


def load_trace(path: Union[str, Path]) -> Trace:
    return parse_trace(Path(path).read_text(encoding="utf-8"))
