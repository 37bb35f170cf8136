"""Stepper-driven spool: step geometry, wind-up radius growth, quantization.

The drum has a bare radius; wire winding onto it builds the working radius up.
Wrap k (counting from the bare drum) is modeled at circumference
2*pi*(base_radius + pileup_factor*wire_diameter*k): pileup_factor 0 is a
perfect single-layer helix (radius never grows), 1 stacks every wrap radially.
Each motor step winds or pays out an arc of wire at the current effective
radius, so step length itself drifts as the drum fills.

Within one wrap the per-step recurrence L' = L + dtheta*r(L) is affine and is
evaluated in closed form (geometric series); results match literal per-step
summation to float tolerance while keeping long runs O(wraps), not O(steps).

Units: centimeters, degrees, gram-force, gram-force-cm for torque.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple


class SpoolError(ValueError):
    """Base for spool model failures."""


class UnspoolError(SpoolError):
    """A command would pay out more wire than the drum holds."""


@dataclass(frozen=True)
class SpoolParams:
    """Physical constants of one motor's drum and wire."""

    step_angle_deg: float = 1.8
    base_radius: float = 2.0
    wire_diameter: float = 0.01
    pileup_factor: float = 0.0
    spool_width: float = 1.0
    holding_torque: float = 4800.0
    wire_rating: float = 7000.0

    def __post_init__(self):
        if not 0 < self.step_angle_deg <= 360:
            raise SpoolError(f"step angle must be in (0, 360], got {self.step_angle_deg}")
        if self.base_radius <= 0:
            raise SpoolError(f"base radius must be positive, got {self.base_radius}")
        if self.wire_diameter < 0:
            raise SpoolError(f"wire diameter must be >= 0, got {self.wire_diameter}")
        if not 0.0 <= self.pileup_factor <= 1.0:
            raise SpoolError(f"pileup factor must be in [0, 1], got {self.pileup_factor}")
        if self.spool_width <= 0:
            raise SpoolError(f"spool width must be positive, got {self.spool_width}")

    @property
    def steps_per_rev(self) -> int:
        return round(360.0 / self.step_angle_deg)

    @property
    def step_angle_rad(self) -> float:
        return math.tau * self.step_angle_deg / 360.0


@dataclass(frozen=True)
class SpoolState:
    """One motor's drum at a moment: parameters, wound wire, step odometer."""

    params: SpoolParams
    wound_length: float = 0.0
    cumulative_steps: int = 0

    def __post_init__(self):
        if self.wound_length < 0 or not math.isfinite(self.wound_length):
            raise SpoolError(f"wound length must be >= 0, got {self.wound_length}")


def ideal_step_length(params: SpoolParams) -> float:
    """Wire moved by one step on the bare drum: 2*pi*r*(step_angle/360)."""
    return math.tau * params.base_radius * (params.step_angle_deg / 360.0)


def holding_force(params: SpoolParams, wound_length: Optional[float] = None) -> float:
    """Static force the motor can hold at the wire, torque / working radius.

    With no wound_length the bare-drum radius applies (the strongest case);
    pass a wound length to get the derated force at the built-up radius.
    """
    if params.base_radius <= 0:
        raise SpoolError("holding force undefined for zero drum radius")
    radius = params.base_radius
    if wound_length is not None:
        radius = effective_radius(SpoolState(params, wound_length))
    return params.holding_torque / radius


def _wrap_start(params: SpoolParams, k: int) -> float:
    """Total wire length below wrap k: sum of the first k wrap circumferences."""
    phid = params.pileup_factor * params.wire_diameter
    return math.tau * k * params.base_radius + math.pi * phid * k * (k - 1)


def _wrap_circumference(params: SpoolParams, k: int) -> float:
    phid = params.pileup_factor * params.wire_diameter
    return math.tau * (params.base_radius + phid * k)


def _wrap_index(params: SpoolParams, wound: float) -> int:
    """Wrap k such that _wrap_start(k) <= wound < _wrap_start(k+1)."""
    phid = params.pileup_factor * params.wire_diameter
    if phid == 0.0:
        k = int(wound // (math.tau * params.base_radius))
    else:
        # Positive root of pi*phid*k^2 + (tau*r - pi*phid)*k - wound = 0.
        a = math.pi * phid
        b = math.tau * params.base_radius - math.pi * phid
        k = int((-b + math.sqrt(b * b + 4.0 * a * wound)) / (2.0 * a))
    k = max(k, 0)
    while _wrap_start(params, k + 1) <= wound:
        k += 1
    while k > 0 and _wrap_start(params, k) > wound:
        k -= 1
    return k


def completed_wraps(params: SpoolParams, wound: float) -> float:
    """Wraps of wire on the drum, fractional within the current wrap."""
    k = _wrap_index(params, wound)
    return k + (wound - _wrap_start(params, k)) / _wrap_circumference(params, k)


def effective_radius(state: SpoolState) -> float:
    """Working radius with wind-up: base + pileup*wire_diameter*wraps."""
    p = state.params
    return p.base_radius + p.pileup_factor * p.wire_diameter * completed_wraps(
        p, state.wound_length
    )


def _affine_coeffs(params: SpoolParams, k: int) -> Tuple[float, float]:
    """Per-step recurrence L' = L + (a + b*L) within wrap k."""
    phid = params.pileup_factor * params.wire_diameter
    dtheta = params.step_angle_rad
    c_k = _wrap_circumference(params, k)
    l_k = _wrap_start(params, k)
    b = dtheta * phid / c_k
    a = dtheta * (params.base_radius + phid * k - phid * l_k / c_k)
    return a, b


# Below this, the per-step radius growth is beyond double precision: treat the
# recurrence as linear (the quadratic correction is ~ a*b*m^2, identically 0).
_B_NEGLIGIBLE = 1e-200


def _advance(length: float, a: float, b: float, m: int, direction: int) -> float:
    """Closed form for m steps of the in-wrap recurrence, either direction."""
    if m == 0:
        return length
    if b < _B_NEGLIGIBLE:
        return length + direction * m * a
    # Both directions share L_m = (L + a/b)*(1 + dir*b)^m - a/b.
    em1 = math.expm1(m * math.log1p(direction * b))
    return length * (em1 + 1.0) + a * em1 / b


def _steps_to_reach(length: float, a: float, b: float, target: float, direction: int) -> int:
    """Smallest m >= 0 whose _advance meets/passes target (monotone search)."""
    if direction > 0 and length >= target:
        return 0
    if direction < 0 and length <= target:
        return 0
    if b < _B_NEGLIGIBLE:
        m = math.ceil(abs(target - length) / a - 1e-12)
    else:
        q = a / b
        g = math.log1p(direction * b)
        ratio = (target + q) / (length + q)
        m = math.ceil(math.log(ratio) / g - 1e-12)
    m = max(m, 1)
    # Float guard: nudge until the closed form actually crosses.
    while m > 1 and (
        _advance(length, a, b, m - 1, direction) >= target
        if direction > 0
        else _advance(length, a, b, m - 1, direction) <= target
    ):
        m -= 1
    while (
        _advance(length, a, b, m, direction) < target
        if direction > 0
        else _advance(length, a, b, m, direction) > target
    ):
        m += 1
    return m


def length_for_steps(state: SpoolState, n: int) -> Tuple[float, SpoolState]:
    """Run n signed motor steps; positive spools in (wound length grows).

    Returns (signed wire length moved, new state). Each step moves
    2*pi*r_eff*(step_angle/360) of wire at the radius in effect when the step
    fires. Raises UnspoolError if n would pay out past the bare drum.
    """
    if n == 0:
        return 0.0, state
    p = state.params
    direction = 1 if n > 0 else -1
    remaining = abs(n)
    length = state.wound_length
    k = _wrap_index(p, length)

    while remaining > 0:
        a, b = _affine_coeffs(p, k)
        if direction > 0:
            boundary = _wrap_start(p, k + 1)
            m_cross = _steps_to_reach(length, a, b, boundary, 1)
        else:
            boundary = _wrap_start(p, k) if k > 0 else 0.0
            m_cross = _steps_to_reach(length, a, b, boundary, -1)
            if m_cross == 0 and k > 0:
                # Exactly on a wrap boundary: the radius is continuous there,
                # so step with the wrap below.
                k -= 1
                continue
            if k == 0:
                final = _advance(length, a, b, min(remaining, m_cross), -1)
                if remaining > m_cross or final < -1e-9:
                    raise UnspoolError(
                        f"{abs(n)} steps would unspool past the empty drum "
                        f"(wound {state.wound_length:.4g} cm)"
                    )
        m = min(remaining, m_cross)
        length = _advance(length, a, b, m, direction)
        remaining -= m
        if remaining > 0:
            k = _wrap_index(p, length)

    length = max(length, 0.0)
    new_state = replace(state, wound_length=length, cumulative_steps=state.cumulative_steps + n)
    return length - state.wound_length, new_state


def steps_for_length(state: SpoolState, target_cm: float) -> Tuple[int, float]:
    """Signed step count whose simulated wire travel lands nearest target_cm.

    Returns (steps, residual) with residual = target - achieved; the residual
    never exceeds half the local step length. Raises UnspoolError when the
    drum cannot pay out enough wire to bracket a negative target.
    """
    if target_cm == 0.0:
        return 0, 0.0
    direction = 1 if target_cm > 0 else -1
    goal = state.wound_length + target_cm
    if direction < 0 and goal < 0:
        raise UnspoolError(
            f"target {target_cm:.4g} cm exceeds wound wire {state.wound_length:.4g} cm"
        )
    p = state.params
    length = state.wound_length
    k = _wrap_index(p, length)
    total = 0

    while True:
        a, b = _affine_coeffs(p, k)
        if direction > 0:
            boundary = _wrap_start(p, k + 1)
            m_cross = _steps_to_reach(length, a, b, boundary, 1)
            m_goal = _steps_to_reach(length, a, b, goal, 1)
        else:
            boundary = _wrap_start(p, k) if k > 0 else 0.0
            m_cross = _steps_to_reach(length, a, b, boundary, -1)
            if m_cross == 0 and k > 0:
                k -= 1
                continue
            m_goal = _steps_to_reach(length, a, b, goal, -1)
            if k == 0 and m_goal > m_cross:
                raise UnspoolError(
                    f"target {target_cm:.4g} cm exceeds wound wire {state.wound_length:.4g} cm"
                )
        if m_goal <= m_cross:
            over = _advance(length, a, b, m_goal, direction)
            under = _advance(length, a, b, m_goal - 1, direction) if m_goal >= 1 else over
            total += m_goal
            break
        length = _advance(length, a, b, m_cross, direction)
        total += m_cross
        k = _wrap_index(p, length)

    start = state.wound_length
    err_over = abs(goal - over)
    err_under = abs(goal - under)
    if err_under <= err_over and total > 0:
        total -= 1
        achieved = under - start
    else:
        achieved = over - start
    return direction * total, target_cm - achieved
