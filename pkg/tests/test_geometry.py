"""Geometry layer: distances, trilateration, and tension feasibility."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from cablerig.geometry import (
    DEFAULT_WIRE_RATING,
    AnchorLayout,
    DegenerateGeometryError,
    GeometryError,
    InconsistentLengthsError,
    Point3,
    distance,
    forward_kinematics,
    lerp,
    spool_deltas,
    tension_feasibility,
    wire_lengths,
)

from conftest import CEILING_ANCHORS, feasible_point, point_in_hull, random_layout


# -- distance -----------------------------------------------------------------


def test_distance_identity():
    assert distance(Point3(0, 0, 0), Point3(0, 0, 0)) == 0.0


def test_distance_3_4_5():
    assert distance(Point3(0, 0, 0), Point3(3, 4, 0)) == 5.0


def test_distance_room_scale_value():
    # sqrt(355^2 + 196^2) with both points at the same height.
    got = distance(Point3(355, 196, 310), Point3(0, 0, 310))
    assert abs(got - math.sqrt(355**2 + 196**2)) < 1e-12
    assert abs(got - 405.5132) < 5e-4


@given(
    st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3),
    st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3),
)
def test_distance_symmetric_nonnegative(ax, ay, az, bx, by, bz):
    a, b = Point3(ax, ay, az), Point3(bx, by, bz)
    assert distance(a, b) >= 0.0
    assert distance(a, b) == distance(b, a)


# -- wire_lengths / spool_deltas ------------------------------------------------


def test_wire_lengths_at_anchor_is_zero():
    layout = AnchorLayout((Point3(1, 2, 3), Point3(9, 9, 9)))
    assert wire_lengths(layout, Point3(1, 2, 3))[0] == 0.0


def test_wire_lengths_two_anchor_example():
    layout = AnchorLayout((Point3(0, 0, 0), Point3(4, 0, 0)))
    assert wire_lengths(layout, Point3(0, 3, 0)) == (3.0, 5.0)


def test_wire_lengths_is_elementwise_distance(rng):
    layout = random_layout(rng, 4)
    p = Point3(*rng.uniform(0, 300, size=3))
    got = wire_lengths(layout, p)
    assert got == tuple(distance(a, p) for a in layout.anchors)


def test_spool_deltas_zero_for_no_move():
    layout = AnchorLayout(CEILING_ANCHORS)
    p = Point3(100, 100, 100)
    assert spool_deltas(layout, p, p) == (0.0, 0.0, 0.0)


def test_spool_deltas_single_anchor_sign_convention():
    # Moving closer to the anchor means the motor spools wire IN (positive).
    layout = AnchorLayout((Point3(0, 0, 0),))
    assert spool_deltas(layout, Point3(5, 0, 0), Point3(3, 0, 0)) == (2.0,)


def test_spool_deltas_matches_wire_length_difference():
    layout = AnchorLayout((Point3(0, 0, 300), Point3(650, 0, 300), Point3(325, 390, 300)))
    a, b = Point3(325, 130, 150), Point3(325, 130, 180)
    la, lb = wire_lengths(layout, a), wire_lengths(layout, b)
    got = spool_deltas(layout, a, b)
    for i in range(3):
        assert abs(got[i] - (la[i] - lb[i])) < 1e-12


def test_spool_deltas_path_additivity_and_antisymmetry(rng):
    layout = random_layout(rng, 3)
    pts = [Point3(*rng.uniform(20, 280, size=3)) for _ in range(3)]
    a, b, c = pts
    ac = spool_deltas(layout, a, c)
    ab = spool_deltas(layout, a, b)
    bc = spool_deltas(layout, b, c)
    for i in range(3):
        assert abs(ac[i] - (ab[i] + bc[i])) < 1e-12
    ba = spool_deltas(layout, b, a)
    for i in range(3):
        assert abs(ab[i] + ba[i]) < 1e-12


def test_lerp_endpoints_and_midpoint():
    a, b = Point3(0, 0, 0), Point3(10, 20, 30)
    assert lerp(a, b, 0.0) == a
    assert lerp(a, b, 1.0) == b
    assert lerp(a, b, 0.5) == Point3(5, 10, 15)


# -- AnchorLayout validation -----------------------------------------------------


def test_layout_rejects_empty():
    with pytest.raises(GeometryError):
        AnchorLayout(())


def test_layout_rejects_duplicate_anchors():
    with pytest.raises(GeometryError, match="coincide"):
        AnchorLayout((Point3(0, 0, 0), Point3(0, 0, 0)))


def test_layout_rejects_nonfinite():
    with pytest.raises(GeometryError):
        AnchorLayout((Point3(0, 0, math.nan),))


# -- forward kinematics ----------------------------------------------------------


def test_fk_round_trip_fixed_pose():
    layout = AnchorLayout(CEILING_ANCHORS)
    p = Point3(325, 195, 130)
    q = forward_kinematics(layout, wire_lengths(layout, p))
    assert distance(p, q) < 1e-9


def test_fk_equal_lengths_returns_circumcenter_below_plane():
    layout = AnchorLayout((Point3(0, 0, 300), Point3(100, 0, 300), Point3(50, 100, 300)))
    # Equal lengths put the solution on the vertical through the circumcenter
    # (x=50, y=37.5 for this triangle), on the lower of the two branches.
    lengths = (80.0, 80.0, 80.0)
    p = forward_kinematics(layout, lengths)
    assert abs(p.x - 50.0) < 1e-9
    assert abs(p.y - 37.5) < 1e-9
    assert p.z < 300.0
    for a, l in zip(layout.anchors, lengths):
        assert abs(distance(a, p) - l) < 1e-9


def test_fk_rejects_inconsistent_lengths():
    layout = AnchorLayout((Point3(0, 0, 0), Point3(100, 0, 0), Point3(50, 100, 0)))
    with pytest.raises(InconsistentLengthsError) as exc:
        forward_kinematics(layout, (1.0, 1.0, 1.0))
    assert exc.value.residual > 0.1


def test_fk_rejects_collinear_anchors():
    layout = AnchorLayout((Point3(0, 0, 300), Point3(100, 0, 300), Point3(200, 0, 300)))
    with pytest.raises(DegenerateGeometryError):
        forward_kinematics(layout, (150.0, 120.0, 150.0))


def test_fk_rejects_too_few_anchors():
    layout = AnchorLayout((Point3(0, 0, 300), Point3(100, 0, 300)))
    with pytest.raises(GeometryError):
        forward_kinematics(layout, (50.0, 50.0))


def test_fk_rejects_nonpositive_lengths():
    layout = AnchorLayout(CEILING_ANCHORS)
    with pytest.raises(GeometryError):
        forward_kinematics(layout, (100.0, -1.0, 100.0))
    with pytest.raises(GeometryError):
        forward_kinematics(layout, (100.0, math.inf, 100.0))


def test_fk_length_count_must_match():
    layout = AnchorLayout(CEILING_ANCHORS)
    with pytest.raises(GeometryError):
        forward_kinematics(layout, (100.0, 100.0))


def test_fk_four_anchor_round_trip(rng):
    for _ in range(25):
        layout = random_layout(rng, 4)
        p = point_in_hull(rng, layout, 40.0, 240.0)
        q = forward_kinematics(layout, wire_lengths(layout, p))
        assert distance(p, q) < 1e-9


def test_fk_picks_lower_z_of_the_two_candidates(rng):
    # The mirrored (upper) candidate satisfies the same spheres for 3 anchors
    # with equal heights; the solver must return the hanging one.
    layout = AnchorLayout(CEILING_ANCHORS)
    for _ in range(20):
        p = point_in_hull(rng, layout, 50.0, 290.0)
        q = forward_kinematics(layout, wire_lengths(layout, p))
        assert q.z <= 310.0
        assert distance(p, q) < 1e-9


# -- tension feasibility -----------------------------------------------------------


def test_tension_plumb_line_single_anchor():
    layout = AnchorLayout((Point3(0, 0, 100),))
    sol = tension_feasibility(layout, Point3(0, 0, 0), 500.0)
    assert sol.feasible
    assert sol.tensions is not None
    assert abs(sol.tensions[0] - 500.0) < 1e-6


def test_tension_equilateral_symmetry():
    # Anchors on a horizontal equilateral triangle, carriage below the centroid:
    # three equal tensions, each mass / (3 cos(angle from vertical)).
    r, h = 100.0, 300.0
    anchors = tuple(
        Point3(r * math.cos(a), r * math.sin(a), h)
        for a in (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)
    )
    layout = AnchorLayout(anchors)
    depth = 150.0
    p = Point3(0.0, 0.0, h - depth)
    mass = 500.0
    sol = tension_feasibility(layout, p, mass)
    assert sol.feasible
    cos_theta = depth / math.hypot(r, depth)
    expect = mass / (3.0 * cos_theta)
    for t in sol.tensions:
        assert abs(t - expect) < 1e-9
    # Residual check: the tensions actually balance the weight.
    u = np.array(
        [(a.as_array() - p.as_array()) / distance(a, p) for a in layout.anchors]
    ).T
    resid = u @ np.array(sol.tensions) - np.array([0.0, 0.0, mass])
    assert np.linalg.norm(resid) < 1e-6 * mass


def test_tension_outside_hull_is_infeasible():
    layout = AnchorLayout(CEILING_ANCHORS)
    # Hull is the triangle (0,0)-(650,0)-(650,390); x<0 is clearly outside.
    sol = tension_feasibility(layout, Point3(-10.0, 50.0, 100.0), 500.0)
    assert not sol.feasible
    assert sol.tensions is None


def test_tension_outside_hull_is_infeasible_four_anchors():
    layout = AnchorLayout(CEILING_ANCHORS + (Point3(0.0, 390.0, 310.0),))
    sol = tension_feasibility(layout, Point3(-10.0, 50.0, 100.0), 500.0)
    assert not sol.feasible


def test_tension_inside_hull_is_feasible_four_anchors():
    layout = AnchorLayout(CEILING_ANCHORS + (Point3(0.0, 390.0, 310.0),))
    sol = tension_feasibility(layout, Point3(325.0, 195.0, 150.0), 500.0)
    assert sol.feasible
    assert min(sol.tensions) >= 0.0


def test_tension_not_below_all_anchors_is_infeasible():
    layout = AnchorLayout(CEILING_ANCHORS)
    sol = tension_feasibility(layout, Point3(325.0, 195.0, 310.0), 500.0)
    assert not sol.feasible
    assert any("below" in w for w in sol.warnings)


def test_tension_scales_linearly_with_mass(rng):
    layout = AnchorLayout(CEILING_ANCHORS)
    p = feasible_point(rng, layout, 500.0, 60.0, 250.0)
    one = tension_feasibility(layout, p, 500.0)
    two = tension_feasibility(layout, p, 1000.0)
    assert one.feasible and two.feasible
    for t1, t2 in zip(one.tensions, two.tensions):
        assert abs(t2 - 2.0 * t1) < 1e-9 * max(1.0, abs(t2))


def test_tension_verdict_is_mass_invariant(rng):
    layout = AnchorLayout(CEILING_ANCHORS)
    for _ in range(20):
        p = Point3(float(rng.uniform(-100, 750)), float(rng.uniform(-100, 500)),
                   float(rng.uniform(10, 290)))
        verdicts = {tension_feasibility(layout, p, m).feasible for m in (1.0, 500.0, 9000.0)}
        assert len(verdicts) == 1


def test_tension_degenerate_directions_raise():
    # Collinear anchors make the three wire directions coplanar: singular solve.
    layout = AnchorLayout((Point3(0, 0, 300), Point3(100, 0, 300), Point3(200, 0, 300)))
    with pytest.raises(DegenerateGeometryError):
        tension_feasibility(layout, Point3(100.0, 0.0, 100.0), 500.0)


def test_tension_carriage_at_anchor_height_is_infeasible():
    # At (or above) anchor height gravity cannot tension the wires at all;
    # this covers the carriage-on-an-anchor corner too (same z).
    layout = AnchorLayout(CEILING_ANCHORS)
    for p in (Point3(0.0, 0.0, 310.0), Point3(325.0, 195.0, 320.0)):
        sol = tension_feasibility(layout, p, 500.0)
        assert not sol.feasible


def test_tension_rejects_bad_mass():
    layout = AnchorLayout(CEILING_ANCHORS)
    with pytest.raises(GeometryError):
        tension_feasibility(layout, Point3(325, 195, 100), 0.0)
    with pytest.raises(GeometryError):
        tension_feasibility(layout, Point3(325, 195, 100), math.nan)


def test_wire_rating_warning_default_and_suppression():
    # A nearly horizontal wire pull needs tension far beyond the default rating.
    layout = AnchorLayout(CEILING_ANCHORS)
    p = Point3(400.0, 150.0, 309.5)  # just below the ceiling: huge tensions
    sol = tension_feasibility(layout, p, 500.0)
    assert sol.feasible
    assert max(sol.tensions) > DEFAULT_WIRE_RATING
    assert any("rating" in w for w in sol.warnings)
    quiet = tension_feasibility(layout, p, 500.0, wire_rating=None)
    assert quiet.feasible and quiet.warnings == ()


def test_wire_rating_no_warning_when_under_rating():
    layout = AnchorLayout(CEILING_ANCHORS)
    sol = tension_feasibility(layout, Point3(400.0, 150.0, 130.0), 500.0)
    assert sol.feasible
    assert sol.warnings == ()


def _lp_feasible(layout: AnchorLayout, p: Point3, mass: float) -> bool:
    """Independent oracle: zero-cost LP over t >= 0 with equality equilibrium."""
    u = np.array(
        [(a.as_array() - p.as_array()) / distance(a, p) for a in layout.anchors]
    ).T
    res = linprog(
        c=np.zeros(len(layout)),
        A_eq=u,
        b_eq=np.array([0.0, 0.0, mass]),
        bounds=[(0.0, None)] * len(layout),
        method="highs",
    )
    return bool(res.status == 0)


def test_tension_analytic_agrees_with_lp_sample(rng):
    layout = AnchorLayout(CEILING_ANCHORS)
    checked = 0
    for _ in range(200):
        p = Point3(float(rng.uniform(0, 650)), float(rng.uniform(0, 390)),
                   float(rng.uniform(20, 280)))
        sol = tension_feasibility(layout, p, 500.0)
        assert sol.feasible == _lp_feasible(layout, p, 500.0)
        checked += 1
    assert checked == 200


@settings(deadline=None, max_examples=60)
@given(
    st.floats(30, 620), st.floats(10, 380), st.floats(20, 280),
    st.floats(100, 5000),
)
def test_round_trip_property(x, y, z, mass):
    layout = AnchorLayout(CEILING_ANCHORS)
    p = Point3(x, y, z)
    q = forward_kinematics(layout, wire_lengths(layout, p))
    assert distance(p, q) < 1e-9
