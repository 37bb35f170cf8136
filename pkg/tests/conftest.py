"""Shared fixtures and geometry helpers for the test suite."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from cablerig.geometry import AnchorLayout, Point3, tension_feasibility
from cablerig.rig import RigConfig, load_rig

REPO_ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = REPO_ROOT / "configs"

# Three ceiling corners of a 650 x 390 x 310 cm room; the rig most tests use.
CEILING_ANCHORS = (
    Point3(0.0, 0.0, 310.0),
    Point3(650.0, 0.0, 310.0),
    Point3(650.0, 390.0, 310.0),
)


@pytest.fixture(scope="session")
def ceiling_layout() -> AnchorLayout:
    return AnchorLayout(CEILING_ANCHORS)


@pytest.fixture(scope="session")
def room_rig() -> RigConfig:
    return load_rig(CONFIG_DIR / "room.yaml")


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20260817)


def point_in_hull(rng: np.random.Generator, layout: AnchorLayout, z_lo: float, z_hi: float,
                  margin: float = 0.08) -> Point3:
    """Random point strictly inside the anchors' horizontal convex hull.

    Barycentric mixing with a floor weight keeps the point away from the hull
    boundary, where tensions blow up and the solve conditions poorly.
    """
    n = len(layout)
    w = rng.random(n) + margin * n
    w = w / w.sum()
    xy = sum(wi * a.as_array()[:2] for wi, a in zip(w, layout.anchors))
    z = float(rng.uniform(z_lo, z_hi))
    return Point3(float(xy[0]), float(xy[1]), z)


def feasible_point(rng: np.random.Generator, layout: AnchorLayout, mass: float,
                   z_lo: float, z_hi: float) -> Point3:
    """Random tension-feasible point under the layout (rejection sampling)."""
    for _ in range(200):
        p = point_in_hull(rng, layout, z_lo, z_hi)
        if tension_feasibility(layout, p, mass).feasible:
            return p
    raise AssertionError("could not sample a feasible point; layout unsuitable")


def random_layout(rng: np.random.Generator, n_anchors: int) -> AnchorLayout:
    """Random non-degenerate ceiling layout spanning a room-scale area."""
    while True:
        pts = []
        for _ in range(n_anchors):
            pts.append(
                Point3(
                    float(rng.uniform(0.0, 650.0)),
                    float(rng.uniform(0.0, 390.0)),
                    float(rng.uniform(280.0, 330.0)),
                )
            )
        mat = np.array([p.as_array() for p in pts])
        # Reject thin triangles/quads: pairwise distance and area floors.
        dists = [
            float(np.linalg.norm(mat[i] - mat[j]))
            for i in range(n_anchors)
            for j in range(i + 1, n_anchors)
        ]
        if min(dists) < 120.0:
            continue
        area = 0.5 * float(
            np.linalg.norm(np.cross(mat[1] - mat[0], mat[2] - mat[0]))
        )
        if area < 8000.0:
            continue
        return AnchorLayout(tuple(pts))


def assert_close(actual: float, expected: float, tol: float, label: str = "") -> None:
    assert math.isfinite(actual), f"{label}: non-finite value {actual}"
    assert abs(actual - expected) <= tol, (
        f"{label}: {actual!r} differs from {expected!r} by "
        f"{abs(actual - expected):.3e} (> {tol:.3e})"
    )
