"""Rig geometry: wire lengths, trilateration, and static tension checks.

Units are centimeters and gram-force throughout. Coordinates are room-fixed:
origin at a floor corner, z up. A carriage hangs from wires running to fixed
anchor points (motor pulleys), so length errors and tensions are all computed
against straight chords from carriage to anchor.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import nnls

# Anchors closer than this are treated as duplicates (cm).
DISTINCT_ANCHOR_TOL = 1e-6
# Wire lengths whose best-fit point misses any sphere by more than this are
# rejected as inconsistent (cm).
CONSISTENCY_TOL = 0.1
# Tensions down to this are accepted as zero (gram-force).
TENSION_TOL = -1e-9
# Equilibrium residual accepted as "supported", relative to carriage weight.
EQUILIBRIUM_REL_TOL = 1e-6

_GRADIENT_TOL = 1e-10
_MAX_ITER = 60


class GeometryError(ValueError):
    """Base for rig-geometry failures."""


class DegenerateGeometryError(GeometryError):
    """Anchor arrangement admits no unique solve (collinear, coplanar, singular)."""


class InconsistentLengthsError(GeometryError):
    """Wire lengths do not meet at any point within tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(a: Sequence[float]) -> "Point3":
        return Point3(float(a[0]), float(a[1]), float(a[2]))

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.x, self.y, self.z))


def lerp(a: Point3, b: Point3, t: float) -> Point3:
    return Point3(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, a.z + (b.z - a.z) * t)


@dataclass(frozen=True)
class AnchorLayout:
    """Fixed wire exit points, one per motor, in room coordinates."""

    anchors: Tuple[Point3, ...]

    def __post_init__(self):
        if len(self.anchors) < 1:
            raise GeometryError("layout needs at least one anchor")
        for a in self.anchors:
            if not a.is_finite():
                raise GeometryError(f"non-finite anchor coordinate: {a}")
        for (i, a), (j, b) in itertools.combinations(enumerate(self.anchors), 2):
            if distance(a, b) < DISTINCT_ANCHOR_TOL:
                raise GeometryError(f"anchors {i} and {j} coincide")

    def __len__(self) -> int:
        return len(self.anchors)

    def as_matrix(self) -> np.ndarray:
        return np.array([a.as_array() for a in self.anchors])


@dataclass(frozen=True)
class TensionSolution:
    """Static wire tensions holding the carriage, if a non-negative set exists."""

    feasible: bool
    tensions: Optional[Tuple[float, ...]]
    warnings: Tuple[str, ...] = ()


def distance(a: Point3, b: Point3) -> float:
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)


def wire_lengths(layout: AnchorLayout, p: Point3) -> Tuple[float, ...]:
    """Straight-chord wire length from each anchor to the carriage at p."""
    return tuple(distance(a, p) for a in layout.anchors)


def spool_deltas(layout: AnchorLayout, frm: Point3, to: Point3) -> Tuple[float, ...]:
    """Per-motor wire length change for a move; positive means spool in.

    dist(anchor, frm) - dist(anchor, to): the wire shortens by exactly the
    amount the motor must wind up.
    """
    return tuple(distance(a, frm) - distance(a, to) for a in layout.anchors)


def _trilaterate_triple(p0, p1, p2, r0, r1, r2):
    """Two candidate intersection points of three spheres (global frame)."""
    ex_vec = p1 - p0
    d = float(np.linalg.norm(ex_vec))
    ex = ex_vec / d
    v2 = p2 - p0
    i = float(np.dot(ex, v2))
    perp = v2 - i * ex
    j = float(np.linalg.norm(perp))
    if j < 1e-9 * max(1.0, d):
        raise DegenerateGeometryError("anchors are collinear; carriage position is not unique")
    ey = perp / j
    ez = np.cross(ex, ey)
    x = (r0 * r0 - r1 * r1 + d * d) / (2.0 * d)
    y = (r0 * r0 - r2 * r2 + i * i + j * j - 2.0 * i * x) / (2.0 * j)
    zsq = r0 * r0 - x * x - y * y
    z = math.sqrt(max(zsq, 0.0))
    base = p0 + x * ex + y * ey
    return base + z * ez, base - z * ez


def _pick_seed_triple(mat: np.ndarray) -> Tuple[int, int, int]:
    for combo in itertools.combinations(range(len(mat)), 3):
        a, b, c = (mat[k] for k in combo)
        if np.linalg.norm(np.cross(b - a, c - a)) > 1e-9:
            return combo
    raise DegenerateGeometryError("all anchors are collinear")


def forward_kinematics(
    layout: AnchorLayout,
    lengths: Sequence[float],
    consistency_tol: float = CONSISTENCY_TOL,
) -> Point3:
    """Carriage position from wire lengths.

    With exactly three anchors the two sphere-intersection candidates are
    resolved to the lower-z one (the carriage hangs below the anchor plane).
    With four or more, a Gauss-Newton refinement seeded from the first
    non-collinear anchor triple runs until the gradient norm of the squared
    length residuals drops below 1e-10.
    """
    n = len(layout)
    if n < 3:
        raise GeometryError("forward kinematics needs at least 3 anchors")
    if len(lengths) != n:
        raise GeometryError(f"expected {n} lengths, got {len(lengths)}")
    for k, l in enumerate(lengths):
        if not (math.isfinite(l) and l > 0):
            raise GeometryError(f"wire length {k} must be positive and finite, got {l}")

    mat = layout.as_matrix()
    r = np.asarray(lengths, dtype=float)
    i0, i1, i2 = _pick_seed_triple(mat)
    hi, lo = _trilaterate_triple(mat[i0], mat[i1], mat[i2], r[i0], r[i1], r[i2])
    p = lo if lo[2] < hi[2] else hi

    if n > 3:
        for _ in range(_MAX_ITER):
            diff = p - mat
            dist = np.linalg.norm(diff, axis=1)
            res = dist - r
            grad = 2.0 * (diff / dist[:, None]).T @ res
            if np.linalg.norm(grad) < _GRADIENT_TOL:
                break
            jac = diff / dist[:, None]
            step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
            p = p + step

    residual = float(np.max(np.abs(np.linalg.norm(p - mat, axis=1) - r)))
    if residual > consistency_tol:
        raise InconsistentLengthsError(
            f"wire lengths are inconsistent: worst sphere miss {residual:.4g} cm",
            residual,
        )
    return Point3.from_array(p)


def _direction_matrix(layout: AnchorLayout, p: Point3) -> np.ndarray:
    """Columns are unit vectors from the carriage toward each anchor."""
    mat = layout.as_matrix()
    diff = mat - p.as_array()
    norms = np.linalg.norm(diff, axis=1)
    if np.any(norms < DISTINCT_ANCHOR_TOL):
        raise DegenerateGeometryError("carriage coincides with an anchor")
    return (diff / norms[:, None]).T


def _tension_nnls(layout: AnchorLayout, p: Point3, mass: float) -> Tuple[np.ndarray, float]:
    """Non-negative least squares route; returns (tensions, equilibrium residual)."""
    u = _direction_matrix(layout, p)
    b = np.array([0.0, 0.0, mass])
    t, rnorm = nnls(u, b)
    return t, float(rnorm)


DEFAULT_WIRE_RATING = 7000.0  # gram-force


def tension_feasibility(
    layout: AnchorLayout,
    p: Point3,
    mass: float,
    wire_rating: Optional[float] = DEFAULT_WIRE_RATING,
) -> TensionSolution:
    """Can non-negative wire tensions hold a carriage of `mass` grams at p?

    Wires only pull, and the rig is tensioned by gravity alone, so the
    equilibrium is sum(t_i * u_i) = (0, 0, +mass) in gram-force with every
    t_i >= 0. Exactly three anchors use the direct 3x3 solve; other counts go
    through non-negative least squares and accept the answer when the
    equilibrium residual is below EQUILIBRIUM_REL_TOL * mass.
    """
    if mass <= 0 or not math.isfinite(mass):
        raise GeometryError(f"carriage mass must be positive, got {mass}")
    warnings = []
    below_all = all(p.z < a.z for a in layout.anchors)
    if not below_all:
        return TensionSolution(
            False, None,
            ("carriage is not strictly below every anchor; gravity cannot tension the wires",),
        )

    if len(layout) == 3:
        u = _direction_matrix(layout, p)
        if abs(np.linalg.det(u)) < 1e-10:
            raise DegenerateGeometryError(
                "wire directions are coplanar; tension solve is singular"
            )
        t = np.linalg.solve(u, np.array([0.0, 0.0, mass]))
        if np.min(t) < TENSION_TOL:
            return TensionSolution(False, None, ())
        t = np.clip(t, 0.0, None)
    else:
        t, rnorm = _tension_nnls(layout, p, mass)
        if rnorm > EQUILIBRIUM_REL_TOL * mass:
            return TensionSolution(False, None, ())

    if wire_rating is not None:
        for k, tk in enumerate(t):
            if tk > wire_rating:
                warnings.append(
                    f"wire {k} tension {tk:.1f} g exceeds rating {wire_rating:.1f} g"
                )
    return TensionSolution(True, tuple(float(v) for v in t), tuple(warnings))
