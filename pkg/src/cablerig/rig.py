"""Rig configuration: the single source of geometric truth.

A rig file is YAML with a `format_version` field. Lengths are centimeters,
masses gram-force, angles degrees. Example:

    format_version: 1
    anchors:
      - [0.0, 0.0, 310.0]
      - [650.0, 0.0, 310.0]
      - [325.0, 390.0, 310.0]
    home: [325.0, 195.0, 130.0]
    carriage_mass: 500.0
    slack_reserve: 50.0
    motors:                  # one mapping per anchor, or one mapping for all
      step_angle_deg: 1.8
      base_radius: 2.0
      wire_diameter: 0.01
      pileup_factor: 0.0
      spool_width: 1.0
      holding_torque: 4800.0
      wire_rating: 7000.0
    planner:
      speed: 10.0
      max_chord: 0.5
      max_step_rate: 1000
    room: [650.0, 390.0, 310.0]   # optional, display only

Every field except `format_version`, `anchors`, and `home` has a default.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple, Union

import yaml

from .geometry import AnchorLayout, Point3, tension_feasibility
from .planner import DEFAULT_MAX_CHORD, DEFAULT_MAX_STEP_RATE, DEFAULT_SPEED
from .protocol import MAX_MOTORS
from .spool import SpoolParams

FORMAT_VERSION = 1


class RigConfigError(ValueError):
    """Raised for an unreadable, unversioned, or inconsistent rig file."""


@dataclass(frozen=True)
class PlannerDefaults:
    speed: float = DEFAULT_SPEED
    max_chord: float = DEFAULT_MAX_CHORD
    max_step_rate: int = DEFAULT_MAX_STEP_RATE

    def __post_init__(self):
        if not (self.speed > 0 and self.max_chord > 0 and self.max_step_rate > 0):
            raise RigConfigError("planner defaults must be positive")


@dataclass(frozen=True)
class RigConfig:
    layout: AnchorLayout
    home: Point3
    motors: Tuple[SpoolParams, ...]
    carriage_mass: float = 500.0
    slack_reserve: float = 50.0
    planner: PlannerDefaults = field(default_factory=PlannerDefaults)
    room: Optional[Tuple[float, float, float]] = None

    def __post_init__(self):
        n = len(self.layout)
        if len(self.motors) != n:
            raise RigConfigError(f"{n} anchors need {n} motor entries, got {len(self.motors)}")
        if n > MAX_MOTORS:
            raise RigConfigError(f"at most {MAX_MOTORS} motors are supported")
        if not (self.carriage_mass > 0):
            raise RigConfigError("carriage_mass must be positive")
        if self.slack_reserve < 0:
            raise RigConfigError("slack_reserve must be nonnegative")
        if not self.home.is_finite():
            raise RigConfigError("home position must be finite")
        sol = tension_feasibility(self.layout, self.home, self.carriage_mass)
        if not sol.feasible:
            raise RigConfigError("home position is not tension-feasible under this layout")
        if self.room is not None and any(d <= 0 for d in self.room):
            raise RigConfigError("room dimensions must be positive")


def default_rig(
    anchors: Sequence[Sequence[float]],
    home: Sequence[float],
    **overrides,
) -> RigConfig:
    """Convenience constructor with default motors/planner for each anchor."""
    layout = AnchorLayout(tuple(Point3(*a) for a in anchors))
    motors = overrides.pop("motors", tuple(SpoolParams() for _ in anchors))
    return RigConfig(layout=layout, home=Point3(*home), motors=tuple(motors), **overrides)


# -- serialization -----------------------------------------------------------

_MOTOR_FIELDS = {f.name for f in dataclasses.fields(SpoolParams)}
_PLANNER_FIELDS = {f.name for f in dataclasses.fields(PlannerDefaults)}


def _point(value, what: str) -> Point3:
    if not (isinstance(value, (list, tuple)) and len(value) == 3):
        raise RigConfigError(f"{what} must be a list of three numbers")
    try:
        return Point3(*(float(v) for v in value))
    except (TypeError, ValueError) as e:
        raise RigConfigError(f"{what} must be numeric: {e}") from e


def _motor_params(entry, what: str) -> SpoolParams:
    if not isinstance(entry, Mapping):
        raise RigConfigError(f"{what} must be a mapping of spool parameters")
    unknown = set(entry) - _MOTOR_FIELDS
    if unknown:
        raise RigConfigError(f"{what} has unknown fields: {sorted(unknown)}")
    try:
        return SpoolParams(**{k: float(v) for k, v in entry.items()})
    except (TypeError, ValueError) as e:
        raise RigConfigError(f"{what}: {e}") from e


def rig_from_dict(data: Mapping) -> RigConfig:
    if not isinstance(data, Mapping):
        raise RigConfigError("rig config must be a mapping")
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise RigConfigError(
            f"unsupported format_version {version!r}; this build reads version {FORMAT_VERSION}"
        )
    known = {
        "format_version", "anchors", "home", "motors", "carriage_mass",
        "slack_reserve", "planner", "room",
    }
    unknown = set(data) - known
    if unknown:
        raise RigConfigError(f"unknown top-level fields: {sorted(unknown)}")
    if "anchors" not in data or "home" not in data:
        raise RigConfigError("rig config needs `anchors` and `home`")
    anchors_raw = data["anchors"]
    if not isinstance(anchors_raw, Sequence) or isinstance(anchors_raw, (str, bytes)):
        raise RigConfigError("`anchors` must be a list of [x, y, z] triples")
    anchors = [_point(a, f"anchors[{i}]") for i, a in enumerate(anchors_raw)]

    motors_raw = data.get("motors")
    if motors_raw is None:
        motors = [SpoolParams() for _ in anchors]
    elif isinstance(motors_raw, Mapping):
        shared = _motor_params(motors_raw, "motors")
        motors = [shared for _ in anchors]
    elif isinstance(motors_raw, Sequence):
        if len(motors_raw) != len(anchors):
            raise RigConfigError(
                f"`motors` lists {len(motors_raw)} entries for {len(anchors)} anchors"
            )
        motors = [_motor_params(m, f"motors[{i}]") for i, m in enumerate(motors_raw)]
    else:
        raise RigConfigError("`motors` must be a mapping or a list of mappings")

    planner_raw = data.get("planner") or {}
    if not isinstance(planner_raw, Mapping):
        raise RigConfigError("`planner` must be a mapping")
    unknown = set(planner_raw) - _PLANNER_FIELDS
    if unknown:
        raise RigConfigError(f"`planner` has unknown fields: {sorted(unknown)}")
    planner_kwargs = {
        k: (int(v) if k == "max_step_rate" else float(v)) for k, v in planner_raw.items()
    }

    room = data.get("room")
    if room is not None:
        pt = _point(room, "room")
        room = (pt.x, pt.y, pt.z)

    try:
        layout = AnchorLayout(tuple(anchors))
        return RigConfig(
            layout=layout,
            home=_point(data["home"], "home"),
            motors=tuple(motors),
            carriage_mass=float(data.get("carriage_mass", 500.0)),
            slack_reserve=float(data.get("slack_reserve", 50.0)),
            planner=PlannerDefaults(**planner_kwargs),
            room=room,
        )
    except RigConfigError:
        raise
    except ValueError as e:
        raise RigConfigError(str(e)) from e


def rig_to_dict(rig: RigConfig) -> dict:
    default_motor = SpoolParams()
    motors = [
        {
            k: v
            for k, v in dataclasses.asdict(m).items()
            if getattr(default_motor, k) != v
        }
        for m in rig.motors
    ]
    data: dict = {
        "format_version": FORMAT_VERSION,
        "anchors": [[a.x, a.y, a.z] for a in rig.layout.anchors],
        "home": [rig.home.x, rig.home.y, rig.home.z],
        "carriage_mass": rig.carriage_mass,
        "slack_reserve": rig.slack_reserve,
        "motors": motors,
        "planner": dataclasses.asdict(rig.planner),
    }
    if rig.room is not None:
        data["room"] = list(rig.room)
    return data


def load_rig(path: Union[str, Path]) -> RigConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise RigConfigError(f"unreadable rig file {path}: {e}") from e
    return rig_from_dict(data)


def save_rig(rig: RigConfig, path: Union[str, Path]) -> None:
    Path(path).write_text(
        yaml.safe_dump(rig_to_dict(rig), sort_keys=False), encoding="utf-8"
    )
