/** Builders for the bridge's plain-text command grammar.
 *
 * The panel never speaks the motor-box byte protocol; everything it sends is
 * one of these bridge commands (GOTO / HOME / TRACE-START / TRACE-ABORT).
 */

import type { Vec3 } from "./types.js";

/** Jog increments offered by the panel, in centimeters. */
export const JOG_STEPS = [0.5, 1, 5, 10] as const;

export type Axis = "x" | "y" | "z";

export interface JogCommand {
  axis: Axis;
  delta: number;
}

/** Canonical decimal rendering: at most 4 decimals, no trailing zeros. */
export function fmt(n: number): string {
  if (!Number.isFinite(n)) throw new Error(`cannot format ${n}`);
  let s = n.toFixed(4);
  if (s.includes(".")) s = s.replace(/0+$/, "").replace(/\.$/, "");
  return s === "-0" ? "0" : s;
}

export function gotoLine(target: Vec3, speed?: number): string {
  const base = `GOTO ${fmt(target.x)} ${fmt(target.y)} ${fmt(target.z)}`;
  return speed === undefined ? base : `${base} ${fmt(speed)}`;
}

export function homeLine(): string {
  return "HOME";
}

/** Whole-body command that uploads and starts a trace script. */
export function traceStartBody(traceText: string): string {
  return `TRACE-START\n${traceText}`;
}

export function traceAbortLine(): string {
  return "TRACE-ABORT";
}

/** Target pose of a relative jog from the current pose. */
export function jogTarget(pose: Vec3, jog: JogCommand): Vec3 {
  return { ...pose, [jog.axis]: pose[jog.axis] + jog.delta };
}

/** Instruction count out of the bridge's "trace started (N instructions)". */
export function parseTraceStarted(message: string): number | null {
  const m = /^trace started \((\d+) instructions?\)/.exec(message);
  return m === null ? null : Number(m[1]);
}
