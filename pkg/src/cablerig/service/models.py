"""Request/response bodies for the bridge API."""

from __future__ import annotations

from typing import List, Optional, Tuple

from pydantic import BaseModel, Field

from ..geometry import Point3


class Vec3(BaseModel):
    x: float
    y: float
    z: float

    @classmethod
    def of(cls, p: Optional[Point3]) -> Optional["Vec3"]:
        return None if p is None else cls(x=p.x, y=p.y, z=p.z)


class StateSnapshot(BaseModel):
    """Everything a panel needs to draw the rig and its pose."""

    clock_ms: float
    busy: bool
    trace_active: bool
    anchors: List[Vec3]
    room: Optional[Vec3] = None
    home: Vec3
    believed: Optional[Vec3] = None
    true_position: Optional[Vec3] = None
    wire_out_cm: List[float] = Field(default_factory=list)
    pileup_factor: float = 0.0
    record_count: int = 0
    last_error: Optional[str] = None


class CommandResult(BaseModel):
    accepted: bool
    message: str
    record_count: int


class LogRecordModel(BaseModel):
    t_ms: float
    kind: str
    payload: str
    commanded: Optional[Vec3] = None
    believed: Optional[Vec3] = None


class FeasibilityRequest(BaseModel):
    x: float
    y: float
    z: float


class FeasibilityResponse(BaseModel):
    feasible: bool
    inside_room: Optional[bool] = None
    tensions_g: Optional[Tuple[float, ...]] = None
    warnings: Tuple[str, ...] = ()
