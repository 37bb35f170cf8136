/** The panel's single source of truth and its pure reducer.
 *
 * Every rendered pose originates from a bridge event: SSE frames and command
 * results are turned into PanelEvents, folded into a ViewState here, and the
 * renderer only ever reads that state. The panel computes no kinematics.
 */

import type { CommandResult, LogRecord, StateSnapshot } from "./types.js";

export type Connection = "connecting" | "connected" | "disconnected";

export interface TraceProgress {
  /** Instruction count reported by the bridge, if it could be parsed. */
  instructions: number | null;
  /** How many log records existed when the trace started. */
  recordsAtStart: number;
}

export interface ViewState {
  connection: Connection;
  snapshot: StateSnapshot | null;
  records: LogRecord[];
  /** A mutating request is outstanding (at most one, ever). */
  inFlight: boolean;
  trace: TraceProgress | null;
  /** Operator-facing message from the last rejection or advisory check. */
  notice: string | null;
}

export type PanelEvent =
  | { type: "stream-open" }
  | { type: "stream-closed" }
  | { type: "log"; record: LogRecord }
  | { type: "state"; snapshot: StateSnapshot }
  | { type: "request-started" }
  | { type: "request-finished"; result: CommandResult | null; error: string | null }
  | { type: "trace-started"; instructions: number | null; recordsAtStart: number }
  | { type: "notice"; text: string | null };

export const initialState: ViewState = {
  connection: "connecting",
  snapshot: null,
  records: [],
  inFlight: false,
  trace: null,
  notice: null,
};

export function reduce(view: ViewState, event: PanelEvent): ViewState {
  switch (event.type) {
    case "stream-open":
      // The server replays its full log on every new connection, so derived
      // record state must restart from scratch to stay duplicate-free.
      return { ...view, connection: "connected", records: [] };
    case "stream-closed":
      return { ...view, connection: "disconnected" };
    case "log":
      return { ...view, records: [...view.records, event.record] };
    case "state": {
      const traceDone = view.trace !== null && !event.snapshot.trace_active;
      return {
        ...view,
        snapshot: event.snapshot,
        trace: traceDone ? null : view.trace,
      };
    }
    case "request-started":
      return { ...view, inFlight: true, notice: null };
    case "request-finished": {
      let notice: string | null = null;
      if (event.error !== null) notice = event.error;
      else if (event.result !== null && !event.result.accepted) {
        notice = event.result.message;
      }
      return { ...view, inFlight: false, notice };
    }
    case "trace-started":
      return {
        ...view,
        trace: {
          instructions: event.instructions,
          recordsAtStart: event.recordsAtStart,
        },
      };
    case "notice":
      return { ...view, notice: event.text };
  }
}

/** Jog controls are enabled iff nothing can possibly be in flight. */
export function jogEnabled(view: ViewState): boolean {
  return (
    view.connection === "connected" &&
    !view.inFlight &&
    view.snapshot !== null &&
    view.snapshot.believed !== null &&
    !view.snapshot.busy &&
    !view.snapshot.trace_active
  );
}

export function traceAbortEnabled(view: ViewState): boolean {
  return (
    view.connection === "connected" &&
    view.snapshot !== null &&
    view.snapshot.trace_active
  );
}

export interface ProgressView {
  /** Log records produced by the trace so far. */
  produced: number;
  /** Instruction count, when known. */
  total: number | null;
}

/** Live progress of the active trace, if one is running. */
export function traceProgress(view: ViewState): ProgressView | null {
  if (view.trace === null) return null;
  return {
    produced: Math.max(0, view.records.length - view.trace.recordsAtStart),
    total: view.trace.instructions,
  };
}

/** Straight-line gap between believed and true pose, cm (drift readout). */
export function poseError(view: ViewState): number | null {
  const s = view.snapshot;
  if (s === null || s.believed === null || s.true_position === null) return null;
  const dx = s.believed.x - s.true_position.x;
  const dy = s.believed.y - s.true_position.y;
  const dz = s.believed.z - s.true_position.z;
  return Math.sqrt(dx * dx + dy * dy + dz * dz);
}
