"""Controller <-> motor-box wire protocol: ASCII lines, strict codec.

One command or reply per newline-terminated line, fields as space-separated
key=value pairs in a fixed order. The codec is strict by design: unknown
verbs, unknown or out-of-order keys, duplicate keys, malformed numbers, and
non-ASCII bytes all decode to a BADCMD error instead of being guessed at.
Replies carry the id they answer; commands that have no id of their own
(CONFIG, HOME, PING) are acknowledged with id=0, and MOVE ids must be
positive and strictly increasing within a connection.

Step fields (m0, m1, ...) are signed with an explicit + on positive counts
and a bare 0; durations are milliseconds with the shortest exact decimal
representation. Drum radii in CONFIG ride as integers in centi-micrometers
(1e-6 cm) so the grammar stays integer-only there.

ERR messages never contain spaces (generators use underscores), keeping the
grammar trivially splittable. See PROTOCOL.md for the full grammar and a
worked transcript.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Tuple, Union

MAX_MOTORS = 4
MAX_STEP_MAGNITUDE = 2**31 - 1

ERROR_CODES = frozenset({"BADCMD", "UNSPOOL", "NOHOME", "GEOM", "BADID", "BADCFG"})

_INT_RE = re.compile(r"^[+-]?\d+$")
_DURATION_RE = re.compile(r"^\d+(\.\d+)?$")
_MSG_RE = re.compile(r"^[\x21-\x7e]+$")  # printable ASCII, no spaces


class ProtocolError(ValueError):
    """A line that does not parse or a structurally invalid command."""

    def __init__(self, message: str):
        super().__init__(message)
        self.code = "BADCMD"


def _check_steps(steps: Tuple[int, ...], what: str) -> None:
    if not 1 <= len(steps) <= MAX_MOTORS:
        raise ProtocolError(f"{what} supports 1..{MAX_MOTORS} motors, got {len(steps)}")
    for i, s in enumerate(steps):
        if not isinstance(s, int) or abs(s) > MAX_STEP_MAGNITUDE:
            raise ProtocolError(f"{what} step count m{i}={s!r} out of range")


def _check_id(id_value: int, what: str, minimum: int = 0) -> None:
    if not minimum <= id_value <= MAX_STEP_MAGNITUDE:
        raise ProtocolError(f"{what} id {id_value} out of range")


@dataclass(frozen=True)
class Config:
    motors: int
    steps_per_rev: int
    radii_centi_um: Tuple[int, ...]

    def __post_init__(self):
        if not 1 <= self.motors <= MAX_MOTORS:
            raise ProtocolError(f"CONFIG motors must be 1..{MAX_MOTORS}, got {self.motors}")
        if self.steps_per_rev <= 0:
            raise ProtocolError("CONFIG steps_per_rev must be positive")
        if len(self.radii_centi_um) != self.motors:
            raise ProtocolError("CONFIG needs one radius per motor")
        if any(r <= 0 for r in self.radii_centi_um):
            raise ProtocolError("CONFIG radii must be positive")


@dataclass(frozen=True)
class Home:
    pass


@dataclass(frozen=True)
class Move:
    id: int
    steps: Tuple[int, ...]
    duration_ms: float

    def __post_init__(self):
        _check_id(self.id, "MOVE", minimum=1)
        _check_steps(self.steps, "MOVE")
        if not (math.isfinite(self.duration_ms) and self.duration_ms >= 0):
            raise ProtocolError(f"MOVE duration must be >= 0, got {self.duration_ms}")
        # Keep durations in the range whose shortest float repr is positional,
        # so every encodable command re-decodes to itself.
        if not (self.duration_ms == 0 or 1e-3 <= self.duration_ms < 1e15):
            raise ProtocolError(f"MOVE duration {self.duration_ms} not representable")


@dataclass(frozen=True)
class Status:
    id: int

    def __post_init__(self):
        _check_id(self.id, "STATUS")


@dataclass(frozen=True)
class Ping:
    pass


@dataclass(frozen=True)
class Ack:
    id: int

    def __post_init__(self):
        _check_id(self.id, "ACK")


@dataclass(frozen=True)
class Err:
    id: int
    code: str
    message: str

    def __post_init__(self):
        _check_id(self.id, "ERR")
        if self.code not in ERROR_CODES:
            raise ProtocolError(f"unknown error code {self.code!r}")
        if not _MSG_RE.match(self.message):
            raise ProtocolError("ERR message must be non-empty printable ASCII without spaces")


@dataclass(frozen=True)
class State:
    id: int
    steps: Tuple[int, ...]

    def __post_init__(self):
        _check_id(self.id, "STATE")
        _check_steps(self.steps, "STATE")


Command = Union[Config, Home, Move, Status, Ping]
Reply = Union[Ack, Err, State]


def _fmt_step(n: int) -> str:
    if n > 0:
        return f"+{n}"
    return str(n)


def _fmt_duration(t: float) -> str:
    if t == int(t):
        return str(int(t))
    return repr(t)


def encode_command(cmd: Command) -> str:
    if isinstance(cmd, Config):
        radii = " ".join(f"r{i}={r}" for i, r in enumerate(cmd.radii_centi_um))
        return f"CONFIG motors={cmd.motors} spr={cmd.steps_per_rev} {radii}\n"
    if isinstance(cmd, Home):
        return "HOME\n"
    if isinstance(cmd, Move):
        motors = " ".join(f"m{i}={_fmt_step(s)}" for i, s in enumerate(cmd.steps))
        return f"MOVE id={cmd.id} {motors} t={_fmt_duration(cmd.duration_ms)}\n"
    if isinstance(cmd, Status):
        return f"STATUS id={cmd.id}\n"
    if isinstance(cmd, Ping):
        return "PING\n"
    raise ProtocolError(f"not a command: {cmd!r}")


def encode_reply(reply: Reply) -> str:
    if isinstance(reply, Ack):
        return f"ACK id={reply.id}\n"
    if isinstance(reply, Err):
        return f"ERR id={reply.id} code={reply.code} msg={reply.message}\n"
    if isinstance(reply, State):
        motors = " ".join(f"m{i}={_fmt_step(s)}" for i, s in enumerate(reply.steps))
        return f"STATE id={reply.id} {motors}\n"
    raise ProtocolError(f"not a reply: {reply!r}")


def _split_line(line: Union[str, bytes]) -> list:
    if isinstance(line, bytes):
        try:
            line = line.decode("ascii")
        except UnicodeDecodeError as e:
            raise ProtocolError(f"non-ASCII byte in line: {e}") from None
    elif not line.isascii():
        raise ProtocolError("non-ASCII character in line")
    if line.endswith("\n"):
        line = line[:-1]
    if not line:
        raise ProtocolError("empty line")
    if any(c in line for c in "\r\n\t\x00"):
        raise ProtocolError("control characters are not part of the grammar")
    tokens = line.split(" ")
    if any(t == "" for t in tokens):
        raise ProtocolError("stray spaces in line")
    return tokens


def _parse_fields(tokens: list, expected_keys: list, what: str) -> dict:
    """Key=value fields must appear exactly once each, in canonical order."""
    if len(tokens) != len(expected_keys):
        raise ProtocolError(
            f"{what} expects fields {expected_keys}, got {len(tokens)} tokens"
        )
    out = {}
    for tok, key in zip(tokens, expected_keys):
        if "=" not in tok:
            raise ProtocolError(f"{what}: field {tok!r} is not key=value")
        k, _, v = tok.partition("=")
        if k != key:
            raise ProtocolError(f"{what}: expected key {key!r}, got {k!r}")
        if v == "":
            raise ProtocolError(f"{what}: empty value for {key!r}")
        out[k] = v
    return out


def _parse_int(value: str, what: str) -> int:
    if not _INT_RE.match(value):
        raise ProtocolError(f"{what}: bad integer {value!r}")
    n = int(value)
    if abs(n) > MAX_STEP_MAGNITUDE:
        raise ProtocolError(f"{what}: integer {value} out of range")
    return n


def _motor_keys(tokens: list, what: str) -> int:
    count = sum(1 for t in tokens if t.split("=", 1)[0].startswith("m"))
    if not 1 <= count <= MAX_MOTORS:
        raise ProtocolError(f"{what} needs 1..{MAX_MOTORS} motor fields, got {count}")
    return count


def decode_command(line: Union[str, bytes]) -> Command:
    """Parse one command line; raises ProtocolError (code BADCMD) on anything off."""
    tokens = _split_line(line)
    verb, rest = tokens[0], tokens[1:]

    if verb == "PING":
        if rest:
            raise ProtocolError("PING takes no fields")
        return Ping()
    if verb == "HOME":
        if rest:
            raise ProtocolError("HOME takes no fields")
        return Home()
    if verb == "STATUS":
        fields = _parse_fields(rest, ["id"], "STATUS")
        return Status(id=_parse_int(fields["id"], "STATUS id"))
    if verb == "CONFIG":
        if len(rest) < 3:
            raise ProtocolError("CONFIG expects motors, spr and per-motor radii")
        n_radii = len(rest) - 2
        keys = ["motors", "spr"] + [f"r{i}" for i in range(n_radii)]
        fields = _parse_fields(rest, keys, "CONFIG")
        motors = _parse_int(fields["motors"], "CONFIG motors")
        if motors != n_radii:
            raise ProtocolError(f"CONFIG motors={motors} but {n_radii} radius fields")
        return Config(
            motors=motors,
            steps_per_rev=_parse_int(fields["spr"], "CONFIG spr"),
            radii_centi_um=tuple(_parse_int(fields[f"r{i}"], "CONFIG radius") for i in range(n_radii)),
        )
    if verb == "MOVE":
        if len(rest) < 3:
            raise ProtocolError("MOVE expects id, motor steps and t")
        n_motors = _motor_keys(rest, "MOVE")
        keys = ["id"] + [f"m{i}" for i in range(n_motors)] + ["t"]
        fields = _parse_fields(rest, keys, "MOVE")
        t_raw = fields["t"]
        if not _DURATION_RE.match(t_raw):
            raise ProtocolError(f"MOVE t: bad duration {t_raw!r}")
        return Move(
            id=_parse_int(fields["id"], "MOVE id"),
            steps=tuple(_parse_int(fields[f"m{i}"], "MOVE steps") for i in range(n_motors)),
            duration_ms=float(t_raw),
        )
    raise ProtocolError(f"unknown verb {verb!r}")


def decode_reply(line: Union[str, bytes]) -> Reply:
    """Parse one reply line; raises ProtocolError on anything off."""
    tokens = _split_line(line)
    verb, rest = tokens[0], tokens[1:]

    if verb == "ACK":
        fields = _parse_fields(rest, ["id"], "ACK")
        return Ack(id=_parse_int(fields["id"], "ACK id"))
    if verb == "ERR":
        fields = _parse_fields(rest, ["id", "code", "msg"], "ERR")
        return Err(
            id=_parse_int(fields["id"], "ERR id"),
            code=fields["code"],
            message=fields["msg"],
        )
    if verb == "STATE":
        if len(rest) < 2:
            raise ProtocolError("STATE expects id and motor fields")
        n_motors = _motor_keys(rest, "STATE")
        keys = ["id"] + [f"m{i}" for i in range(n_motors)]
        fields = _parse_fields(rest, keys, "STATE")
        return State(
            id=_parse_int(fields["id"], "STATE id"),
            steps=tuple(_parse_int(fields[f"m{i}"], "STATE steps") for i in range(n_motors)),
        )
    raise ProtocolError(f"unknown reply verb {verb!r}")
