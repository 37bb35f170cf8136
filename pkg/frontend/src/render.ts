/** Orthographic room view: box, anchors, wires, believed vs true pose.
 *
 * Projection math is exported separately from the drawing so it can be
 * unit-tested without a canvas.
 */

import type { StateSnapshot, Vec3 } from "./types.js";
import { poseError, type ViewState } from "./state.js";

const COS30 = Math.cos(Math.PI / 6);
const SIN30 = Math.sin(Math.PI / 6);

export interface Projected {
  u: number;
  v: number;
}

/** Fixed isometric basis: x to the lower right, y to the lower left, z up. */
export function project(p: Vec3): Projected {
  return {
    u: (p.x - p.y) * COS30,
    v: (p.x + p.y) * SIN30 - p.z,
  };
}

export interface ViewTransform {
  scale: number;
  offsetU: number;
  offsetV: number;
}

export function boxCorners(size: Vec3): Vec3[] {
  const corners: Vec3[] = [];
  for (const x of [0, size.x]) {
    for (const y of [0, size.y]) {
      for (const z of [0, size.z]) {
        corners.push({ x, y, z });
      }
    }
  }
  return corners;
}

/** Fit the projected room box into a width x height viewport with a margin. */
export function viewTransform(
  size: Vec3,
  width: number,
  height: number,
  margin = 30,
): ViewTransform {
  const pts = boxCorners(size).map(project);
  const minU = Math.min(...pts.map((p) => p.u));
  const maxU = Math.max(...pts.map((p) => p.u));
  const minV = Math.min(...pts.map((p) => p.v));
  const maxV = Math.max(...pts.map((p) => p.v));
  const scale = Math.min(
    (width - 2 * margin) / Math.max(maxU - minU, 1e-9),
    (height - 2 * margin) / Math.max(maxV - minV, 1e-9),
  );
  return {
    scale,
    offsetU: margin + (width - 2 * margin - (maxU - minU) * scale) / 2 - minU * scale,
    offsetV: margin + (height - 2 * margin - (maxV - minV) * scale) / 2 - minV * scale,
  };
}

export function toScreen(p: Vec3, t: ViewTransform): Projected {
  const q = project(p);
  return { u: q.u * t.scale + t.offsetU, v: q.v * t.scale + t.offsetV };
}

/** The 12 edges of the room box as corner pairs. */
export function boxEdges(size: Vec3): Array<[Vec3, Vec3]> {
  const edges: Array<[Vec3, Vec3]> = [];
  const c = (x: number, y: number, z: number): Vec3 => ({ x, y, z });
  for (const z of [0, size.z]) {
    edges.push(
      [c(0, 0, z), c(size.x, 0, z)],
      [c(size.x, 0, z), c(size.x, size.y, z)],
      [c(size.x, size.y, z), c(0, size.y, z)],
      [c(0, size.y, z), c(0, 0, z)],
    );
  }
  for (const x of [0, size.x]) {
    for (const y of [0, size.y]) {
      edges.push([c(x, y, 0), c(x, y, size.z)]);
    }
  }
  return edges;
}

/** The subset of CanvasRenderingContext2D the renderer needs (mockable). */
export interface DrawContext {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  setLineDash(segments: number[]): void;
}

const COLORS = {
  box: "#8893a5",
  anchor: "#2b3950",
  wire: "#4f7fbf",
  believed: "#1769d6",
  truth: "#d64517",
  text: "#2b3950",
  muted: "#73808f",
};

function roomOf(snapshot: StateSnapshot): Vec3 {
  if (snapshot.room !== null) return snapshot.room;
  // Without a declared room, bound the scene by the anchors themselves.
  const xs = snapshot.anchors.map((a) => a.x);
  const ys = snapshot.anchors.map((a) => a.y);
  const zs = snapshot.anchors.map((a) => a.z);
  return {
    x: Math.max(...xs, 1),
    y: Math.max(...ys, 1),
    z: Math.max(...zs, 1),
  };
}

function line(ctx: DrawContext, a: Projected, b: Projected): void {
  ctx.beginPath();
  ctx.moveTo(a.u, a.v);
  ctx.lineTo(b.u, b.v);
  ctx.stroke();
}

function dot(ctx: DrawContext, p: Projected, r: number, color: string): void {
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(p.u, p.v, r, 0, Math.PI * 2);
  ctx.fill();
}

function ring(ctx: DrawContext, p: Projected, r: number, color: string): void {
  ctx.strokeStyle = color;
  ctx.beginPath();
  ctx.arc(p.u, p.v, r, 0, Math.PI * 2);
  ctx.stroke();
}

/** Draw the whole scene for the current view state. */
export function render(
  ctx: DrawContext,
  view: ViewState,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.font = "12px system-ui, sans-serif";
  if (view.snapshot === null) {
    ctx.fillStyle = COLORS.muted;
    ctx.fillText("waiting for bridge state…", 16, 24);
    return;
  }
  const snapshot = view.snapshot;
  const t = viewTransform(roomOf(snapshot), width, height);

  // Room box.
  ctx.strokeStyle = COLORS.box;
  ctx.lineWidth = 1;
  ctx.setLineDash([4, 3]);
  for (const [a, b] of boxEdges(roomOf(snapshot))) {
    line(ctx, toScreen(a, t), toScreen(b, t));
  }
  ctx.setLineDash([]);

  // Anchors.
  snapshot.anchors.forEach((anchor, i) => {
    const p = toScreen(anchor, t);
    dot(ctx, p, 4, COLORS.anchor);
    ctx.fillStyle = COLORS.text;
    ctx.fillText(`m${i}`, p.u + 6, p.v - 6);
  });

  // Wires and pose markers exist only once the rig has a believed pose
  // (i.e. after HOME); before that only the static scene is drawn.
  if (snapshot.believed !== null) {
    const believed = toScreen(snapshot.believed, t);
    ctx.strokeStyle = COLORS.wire;
    ctx.lineWidth = 1;
    for (const anchor of snapshot.anchors) {
      line(ctx, believed, toScreen(anchor, t));
    }
    // Drop line to the floor for depth reading.
    ctx.strokeStyle = COLORS.muted;
    ctx.setLineDash([2, 3]);
    line(ctx, believed, toScreen({ ...snapshot.believed, z: 0 }, t));
    ctx.setLineDash([]);

    dot(ctx, believed, 5, COLORS.believed);
    ctx.fillStyle = COLORS.text;
    ctx.fillText("believed", believed.u + 8, believed.v + 4);

    if (snapshot.true_position !== null) {
      const truth = toScreen(snapshot.true_position, t);
      ctx.lineWidth = 2;
      ring(ctx, truth, 7, COLORS.truth);
      ctx.fillStyle = COLORS.truth;
      ctx.fillText("true", truth.u + 10, truth.v - 6);
    }
  }

  // Readouts.
  ctx.fillStyle = COLORS.text;
  const errCm = poseError(view);
  const lines = [
    `clock ${snapshot.clock_ms.toFixed(1)} ms${snapshot.busy ? "  (moving)" : ""}`,
    errCm === null ? "drift n/a" : `believed-vs-true drift ${errCm.toFixed(3)} cm`,
  ];
  lines.forEach((text, i) => ctx.fillText(text, 16, height - 16 - 16 * i));
}
