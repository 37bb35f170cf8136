"""Anchor calibration from measured wire lengths at known carriage positions.

Each observation pairs a surveyed carriage position with the wire length paid
out to every motor at that position. Anchors are recovered per motor by
nonlinear least squares on the range equations ‖p_j − M‖ = L_j, seeded with
the linear sphere-difference estimate. At least four observation positions
are needed and they must span 3-D (four coplanar points leave the anchor's
mirror image across that plane unresolved).
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from .geometry import AnchorLayout, Point3

_MAX_EVALS = 200


class CalibrationError(ValueError):
    """Underdetermined or non-converging calibration input."""


Observation = Tuple[Point3, Sequence[float]]


def _validate(observations: Sequence[Observation]) -> Tuple[np.ndarray, np.ndarray]:
    if len(observations) < 4:
        raise CalibrationError(
            f"need at least 4 observation positions, got {len(observations)}"
        )
    points = np.array([[p.x, p.y, p.z] for p, _ in observations], dtype=float)
    rows = [list(ls) for _, ls in observations]
    if not rows[0] or any(len(r) != len(rows[0]) for r in rows):
        raise CalibrationError("every observation needs one length per motor")
    try:
        lengths = np.array(rows, dtype=float)
    except (TypeError, ValueError) as e:
        raise CalibrationError(f"wire lengths must be numeric: {e}") from e
    if not np.isfinite(points).all() or not np.isfinite(lengths).all():
        raise CalibrationError("observations must be finite")
    if (lengths < 0).any():
        raise CalibrationError("wire lengths must be nonnegative")
    spread = points - points[0]
    if np.linalg.matrix_rank(spread, tol=1e-8) < 3:
        raise CalibrationError(
            "observation positions are coplanar; calibration is underdetermined"
        )
    return points, lengths


def _linear_seed(points: np.ndarray, li: np.ndarray) -> np.ndarray:
    """Sphere-difference linearization: subtracting range equations pairwise
    cancels the quadratic anchor term and leaves a linear system in M."""
    p0, l0 = points[0], li[0]
    a = 2.0 * (points[1:] - p0)
    b = (
        np.sum(points[1:] ** 2, axis=1)
        - np.sum(p0**2)
        - (li[1:] ** 2 - l0**2)
    )
    seed, *_ = np.linalg.lstsq(a, b, rcond=None)
    return seed


def estimate_anchors(
    observations: Sequence[Observation],
) -> Tuple[AnchorLayout, Tuple[float, ...]]:
    """Recover the anchor layout; returns (layout, per-motor RMS residual in cm)."""
    points, lengths = _validate(observations)
    anchors: List[Point3] = []
    rms: List[float] = []
    for motor in range(lengths.shape[1]):
        li = lengths[:, motor]

        def residual(m: np.ndarray) -> np.ndarray:
            return np.linalg.norm(points - m, axis=1) - li

        seed = _linear_seed(points, li)
        result = least_squares(
            residual,
            seed,
            xtol=1e-12,
            ftol=1e-15,
            gtol=1e-12,
            max_nfev=_MAX_EVALS,
        )
        if not result.success:
            raise CalibrationError(
                f"motor {motor}: solver did not converge ({result.message})"
            )
        anchors.append(Point3(*result.x))
        rms.append(float(np.sqrt(np.mean(residual(result.x) ** 2))))
    return AnchorLayout(tuple(anchors)), tuple(rms)
