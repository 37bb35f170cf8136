/** Wire types exchanged with the bridge, mirroring its JSON bodies. */

export interface Vec3 {
  x: number;
  y: number;
  z: number;
}

/** Everything the panel needs to draw the rig and its pose. */
export interface StateSnapshot {
  clock_ms: number;
  busy: boolean;
  trace_active: boolean;
  anchors: Vec3[];
  room: Vec3 | null;
  home: Vec3;
  believed: Vec3 | null;
  true_position: Vec3 | null;
  wire_out_cm: number[];
  pileup_factor: number;
  record_count: number;
  last_error: string | null;
}

export interface CommandResult {
  accepted: boolean;
  message: string;
  record_count: number;
}

/** One timestamped controller log record, streamed over SSE. */
export interface LogRecord {
  t_ms: number;
  kind: string;
  payload: string;
  commanded: Vec3 | null;
  believed: Vec3 | null;
}

export interface FeasibilityResponse {
  feasible: boolean;
  inside_room: boolean | null;
  tensions_g: number[] | null;
  warnings: string[];
}

function isVec3(v: unknown): v is Vec3 {
  if (typeof v !== "object" || v === null) return false;
  const o = v as Record<string, unknown>;
  return (
    typeof o.x === "number" && typeof o.y === "number" && typeof o.z === "number"
  );
}

function isVec3OrNull(v: unknown): v is Vec3 | null {
  return v === null || v === undefined || isVec3(v);
}

/** Narrow a parsed SSE payload to a state snapshot (shape check only). */
export function isStateSnapshot(v: unknown): v is StateSnapshot {
  if (typeof v !== "object" || v === null) return false;
  const o = v as Record<string, unknown>;
  return (
    typeof o.clock_ms === "number" &&
    typeof o.busy === "boolean" &&
    typeof o.trace_active === "boolean" &&
    Array.isArray(o.anchors) &&
    o.anchors.every(isVec3) &&
    isVec3(o.home) &&
    isVec3OrNull(o.believed) &&
    isVec3OrNull(o.true_position)
  );
}

/** Narrow a parsed SSE payload to a log record (shape check only). */
export function isLogRecord(v: unknown): v is LogRecord {
  if (typeof v !== "object" || v === null) return false;
  const o = v as Record<string, unknown>;
  return (
    typeof o.t_ms === "number" &&
    typeof o.kind === "string" &&
    typeof o.payload === "string" &&
    isVec3OrNull(o.commanded) &&
    isVec3OrNull(o.believed)
  );
}
