"""Straight-line move planning: chord segmentation and step scheduling.

A commanded move is cut into evenly spaced waypoints no further apart than
max_chord, each motor's wire-length change per chord is quantized to whole
steps against the controller's constant-radius drum model (pile-up factor 0
regardless of what the true plant does), and sub-step residuals carry over
into the next chord so quantization error never accumulates. Steps are spread
uniformly over each chord's time window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Sequence, Tuple

import numpy as np

from .geometry import AnchorLayout, Point3, distance, forward_kinematics, lerp, spool_deltas, tension_feasibility, wire_lengths
from .spool import SpoolState, length_for_steps, steps_for_length

DEFAULT_SPEED = 10.0          # cm/s
DEFAULT_MAX_CHORD = 0.5       # cm
DEFAULT_MAX_STEP_RATE = 1000  # steps/s per motor

_ZERO_MOVE_TOL = 1e-12


class PlanningError(ValueError):
    """Base for planning failures."""


class InfeasibleMoveError(PlanningError):
    """An endpoint cannot be held by non-negative wire tensions."""


class StepRateError(PlanningError):
    """A motor's schedule would exceed the step-rate limit."""


@dataclass(frozen=True)
class MoveRequest:
    frm: Point3
    to: Point3
    speed: float = DEFAULT_SPEED
    max_chord: float = DEFAULT_MAX_CHORD

    def __post_init__(self):
        if not (self.frm.is_finite() and self.to.is_finite()):
            raise PlanningError("move endpoints must be finite")
        if self.speed <= 0 or not math.isfinite(self.speed):
            raise PlanningError(f"speed must be positive, got {self.speed}")
        if self.max_chord <= 0 or not math.isfinite(self.max_chord):
            raise PlanningError(f"max chord must be positive, got {self.max_chord}")


@dataclass(frozen=True)
class SegmentPlan:
    """Net steps per motor for one chord, executed over one time window."""

    start_ms: float
    duration_ms: float
    steps: Tuple[int, ...]


@dataclass(frozen=True)
class StepSchedule:
    """Timestamped step stream plus the per-chord summary the wire protocol uses."""

    motor_events: Tuple[Tuple[Tuple[float, int], ...], ...]
    segments: Tuple[SegmentPlan, ...]
    duration_ms: float
    residuals: Tuple[float, ...]
    warnings: Tuple[str, ...] = ()

    @property
    def net_steps(self) -> Tuple[int, ...]:
        return tuple(sum(s.steps[i] for s in self.segments) for i in range(len(self.residuals)))


def segmentize(frm: Point3, to: Point3, max_chord: float = DEFAULT_MAX_CHORD) -> List[Point3]:
    """Evenly spaced waypoints from frm to to, spacing <= max_chord."""
    if max_chord <= 0:
        raise PlanningError(f"max chord must be positive, got {max_chord}")
    dist = distance(frm, to)
    if dist <= _ZERO_MOVE_TOL:
        return [frm]
    n_seg = max(1, math.ceil(dist / max_chord - 1e-12))
    return [lerp(frm, to, i / n_seg) for i in range(n_seg + 1)]


def plan_move(
    layout: AnchorLayout,
    states: Sequence[SpoolState],
    request: MoveRequest,
    *,
    mass: float | None = None,
    max_step_rate: float = DEFAULT_MAX_STEP_RATE,
    feasibility: str = "strict",
) -> StepSchedule:
    """Quantize a straight move into a per-motor step schedule.

    `states` are the controller's drum states; planning always runs against
    the constant-radius model (pile-up 0), which is the whole controller-side
    story: any true pile-up shows up as unmodeled position error, not here.

    feasibility: "strict" rejects tension-infeasible endpoints (needs mass),
    "warn" records them as warnings, "skip" does not check.
    """
    n = len(layout)
    if len(states) != n:
        raise PlanningError(f"need one spool state per anchor ({n}), got {len(states)}")
    if feasibility not in ("strict", "warn", "skip"):
        raise PlanningError(f"unknown feasibility mode {feasibility!r}")

    warnings: List[str] = []
    if feasibility != "skip":
        if mass is None:
            raise PlanningError("feasibility check needs the carriage mass")
        for label, point in (("start", request.frm), ("target", request.to)):
            sol = tension_feasibility(layout, point, mass)
            warnings.extend(sol.warnings)
            if not sol.feasible:
                msg = f"{label} point ({point.x:.4g}, {point.y:.4g}, {point.z:.4g}) is not tension-feasible"
                if feasibility == "strict":
                    raise InfeasibleMoveError(msg)
                warnings.append(msg)

    dist = distance(request.frm, request.to)
    if dist <= _ZERO_MOVE_TOL:
        return StepSchedule((), (), 0.0, tuple(0.0 for _ in range(n)), tuple(warnings))

    waypoints = segmentize(request.frm, request.to, request.max_chord)
    seg_ms = (dist / len(waypoints[1:])) / request.speed * 1000.0

    ctrl = [replace(s, params=replace(s.params, pileup_factor=0.0)) for s in states]
    carry = [0.0] * n
    events: List[List[Tuple[float, int]]] = [[] for _ in range(n)]
    segments: List[SegmentPlan] = []
    t0 = 0.0

    for seg_idx, (a, b) in enumerate(zip(waypoints, waypoints[1:])):
        deltas = spool_deltas(layout, a, b)
        seg_steps = []
        for i in range(n):
            want = deltas[i] + carry[i]
            ni, carry[i] = steps_for_length(ctrl[i], want)
            _, ctrl[i] = length_for_steps(ctrl[i], ni)
            seg_steps.append(ni)
            if abs(ni) / (seg_ms / 1000.0) > max_step_rate:
                raise StepRateError(
                    f"motor {i} needs {abs(ni)} steps in {seg_ms:.3g} ms on segment "
                    f"{seg_idx} (> {max_step_rate} steps/s)"
                )
            sign = 1 if ni > 0 else -1
            for j in range(abs(ni)):
                events[i].append((t0 + (j + 0.5) * seg_ms / abs(ni), sign))
        segments.append(SegmentPlan(t0, seg_ms, tuple(seg_steps)))
        t0 += seg_ms

    return StepSchedule(
        motor_events=tuple(tuple(e) for e in events),
        segments=tuple(segments),
        duration_ms=t0,
        residuals=tuple(carry),
        warnings=tuple(warnings),
    )


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(np.dot(ab, ab))
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    t = float(np.clip(np.dot(p - a, ab) / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def path_deviation_bound(
    layout: AnchorLayout,
    frm: Point3,
    to: Point3,
    max_chord: float = DEFAULT_MAX_CHORD,
    samples_per_chord: int = 10,
) -> float:
    """Worst distance between the wire-interpolated path and the straight line.

    Between chord endpoints the motors interpolate wire lengths linearly, so
    the carriage really travels on a curved surface; this samples that curve
    (>= 10 points per chord) and reports the maximum miss. Rigs with fewer
    than three anchors move along wire coordinates themselves: deviation 0.
    """
    if len(layout) < 3:
        return 0.0
    samples = max(10, samples_per_chord)
    a_vec = frm.as_array()
    b_vec = to.as_array()
    worst = 0.0
    waypoints = segmentize(frm, to, max_chord)
    for wa, wb in zip(waypoints, waypoints[1:]):
        la = np.array(wire_lengths(layout, wa))
        lb = np.array(wire_lengths(layout, wb))
        for t in np.linspace(0.0, 1.0, samples):
            lengths = (1.0 - t) * la + t * lb
            p = forward_kinematics(layout, lengths)
            worst = max(worst, _point_segment_distance(p.as_array(), a_vec, b_vec))
    return worst
