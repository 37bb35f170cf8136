"""Room-scale wire-positioning toolkit.

Plan, emulate, drive, calibrate, and evaluate a ceiling rig that positions a
carriage by winding wires onto stepper-driven drums. Units throughout are
centimeters, milliseconds, and gram-force.
"""

from .geometry import (
    AnchorLayout,
    DegenerateGeometryError,
    GeometryError,
    InconsistentLengthsError,
    Point3,
    TensionSolution,
    distance,
    forward_kinematics,
    spool_deltas,
    tension_feasibility,
    wire_lengths,
)
from .planner import (
    InfeasibleMoveError,
    MoveRequest,
    PlanningError,
    SegmentPlan,
    StepRateError,
    StepSchedule,
    path_deviation_bound,
    plan_move,
    segmentize,
)
from .rig import PlannerDefaults, RigConfig, RigConfigError, default_rig, load_rig, save_rig
from .spool import (
    SpoolError,
    SpoolParams,
    SpoolState,
    UnspoolError,
    completed_wraps,
    effective_radius,
    holding_force,
    ideal_step_length,
    length_for_steps,
    steps_for_length,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorLayout",
    "DegenerateGeometryError",
    "GeometryError",
    "InconsistentLengthsError",
    "InfeasibleMoveError",
    "MoveRequest",
    "PlannerDefaults",
    "PlanningError",
    "Point3",
    "RigConfig",
    "RigConfigError",
    "SegmentPlan",
    "SpoolError",
    "SpoolParams",
    "SpoolState",
    "StepRateError",
    "StepSchedule",
    "TensionSolution",
    "UnspoolError",
    "completed_wraps",
    "default_rig",
    "distance",
    "effective_radius",
    "forward_kinematics",
    "holding_force",
    "ideal_step_length",
    "length_for_steps",
    "load_rig",
    "path_deviation_bound",
    "plan_move",
    "save_rig",
    "segmentize",
    "spool_deltas",
    "steps_for_length",
    "tension_feasibility",
    "wire_lengths",
]
