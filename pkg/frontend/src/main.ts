/** Panel entry point: wires the bridge session to the DOM. */

import { BridgeClient, EventStreamSession } from "./client.js";
import {
  JOG_STEPS,
  gotoLine,
  homeLine,
  jogTarget,
  parseTraceStarted,
  traceAbortLine,
  traceStartBody,
  type Axis,
} from "./grammar.js";
import { render } from "./render.js";
import {
  initialState,
  jogEnabled,
  reduce,
  traceAbortEnabled,
  traceProgress,
  type PanelEvent,
  type ViewState,
} from "./state.js";
import { isLogRecord, isStateSnapshot } from "./types.js";

function bridgeUrl(): string {
  const param = new URLSearchParams(window.location.search).get("bridge");
  if (param !== null && param !== "") return param;
  const host = window.location.hostname || "127.0.0.1";
  return `http://${host}:8787`;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const client = new BridgeClient(bridgeUrl());
let view: ViewState = initialState;

const canvas = el<HTMLCanvasElement>("scene");
const ctx = canvas.getContext("2d");
if (ctx === null) throw new Error("canvas 2d context unavailable");

const statusBadge = el<HTMLSpanElement>("status");
const bridgeLabel = el<HTMLSpanElement>("bridge-label");
const noticeBox = el<HTMLDivElement>("notice");
const poseBox = el<HTMLDivElement>("pose");
const consoleBox = el<HTMLDivElement>("console");
const progressBox = el<HTMLDivElement>("trace-progress");
const jogPad = el<HTMLDivElement>("jog-pad");
const stepSelect = el<HTMLSelectElement>("jog-step");
const gotoX = el<HTMLInputElement>("goto-x");
const gotoY = el<HTMLInputElement>("goto-y");
const gotoZ = el<HTMLInputElement>("goto-z");
const gotoSpeed = el<HTMLInputElement>("goto-speed");
const gotoButton = el<HTMLButtonElement>("goto-send");
const homeButton = el<HTMLButtonElement>("home-send");
const traceFile = el<HTMLInputElement>("trace-file");
const traceRun = el<HTMLButtonElement>("trace-run");
const traceAbort = el<HTMLButtonElement>("trace-abort");
const downloadButton = el<HTMLButtonElement>("download-log");
const bridgeInput = el<HTMLInputElement>("bridge-input");
const bridgeApply = el<HTMLButtonElement>("bridge-apply");

bridgeLabel.textContent = client.baseUrl;
bridgeInput.value = client.baseUrl;

let renderQueued = false;

function dispatch(event: PanelEvent): void {
  view = reduce(view, event);
  if (!renderQueued) {
    renderQueued = true;
    requestAnimationFrame(() => {
      renderQueued = false;
      paint();
    });
  }
}

function paint(): void {
  render(ctx!, view, canvas.width, canvas.height);

  statusBadge.textContent = view.connection;
  statusBadge.className = `badge ${view.connection}`;

  noticeBox.textContent = view.notice ?? view.snapshot?.last_error ?? "";
  noticeBox.hidden = noticeBox.textContent === "";

  const s = view.snapshot;
  if (s !== null && s.believed !== null) {
    const b = s.believed;
    const t = s.true_position;
    poseBox.textContent =
      `believed (${b.x.toFixed(2)}, ${b.y.toFixed(2)}, ${b.z.toFixed(2)})` +
      (t !== null ? `   true (${t.x.toFixed(2)}, ${t.y.toFixed(2)}, ${t.z.toFixed(2)})` : "");
  } else {
    poseBox.textContent = "pose unknown (waiting for home)";
  }

  const enabled = jogEnabled(view);
  for (const button of jogPad.querySelectorAll("button")) {
    button.disabled = !enabled;
  }
  gotoButton.disabled = !enabled;
  homeButton.disabled = !enabled;
  traceRun.disabled = !enabled || traceFile.files === null || traceFile.files.length === 0;
  traceAbort.disabled = !traceAbortEnabled(view);

  const progress = traceProgress(view);
  if (progress === null) {
    progressBox.textContent = "";
  } else {
    const total = progress.total === null ? "?" : String(progress.total);
    progressBox.textContent = `trace running: ${progress.produced} records (${total} instructions)`;
  }

  const tail = view.records.slice(-400);
  consoleBox.textContent = tail
    .map((r) => `${r.t_ms.toFixed(1).padStart(10)}  ${r.kind.padEnd(11)} ${r.payload}`)
    .join("\n");
  consoleBox.scrollTop = consoleBox.scrollHeight;
}

/** Run one mutating request; at most one is ever outstanding. */
async function mutate(text: string): Promise<void> {
  if (view.inFlight) return;
  dispatch({ type: "request-started" });
  try {
    const result = await client.command(text);
    if (result.accepted) {
      const instructions = parseTraceStarted(result.message);
      if (instructions !== null) {
        dispatch({
          type: "trace-started",
          instructions,
          recordsAtStart: view.records.length,
        });
      }
    }
    dispatch({ type: "request-finished", result, error: null });
  } catch (err) {
    dispatch({ type: "request-finished", result: null, error: String(err) });
  }
}

async function jog(axis: Axis, sign: 1 | -1): Promise<void> {
  const pose = view.snapshot?.believed;
  if (pose === undefined || pose === null || view.inFlight) return;
  const delta = Number(stepSelect.value) * sign;
  const target = jogTarget(pose, { axis, delta });
  dispatch({ type: "request-started" });
  try {
    // Advisory pre-check; the bridge re-validates on dispatch.
    const check = await client.feasibility(target);
    if (!check.feasible) {
      dispatch({
        type: "request-finished",
        result: null,
        error: `target not tension-feasible (advisory check): ${axis}${delta > 0 ? "+" : ""}${delta}`,
      });
      return;
    }
    const result = await client.command(gotoLine(target));
    dispatch({ type: "request-finished", result, error: null });
  } catch (err) {
    dispatch({ type: "request-finished", result: null, error: String(err) });
  }
}

function buildJogPad(): void {
  const axes: Axis[] = ["x", "y", "z"];
  for (const axis of axes) {
    const row = document.createElement("div");
    row.className = "jog-row";
    for (const sign of [-1, 1] as const) {
      const button = document.createElement("button");
      button.textContent = `${axis}${sign > 0 ? "+" : "−"}`;
      button.addEventListener("click", () => void jog(axis, sign));
      row.append(button);
    }
    jogPad.append(row);
  }
  for (const step of JOG_STEPS) {
    const option = document.createElement("option");
    option.value = String(step);
    option.textContent = `${step} cm`;
    if (step === 1) option.selected = true;
    stepSelect.append(option);
  }
}

gotoButton.addEventListener("click", () => {
  const target = {
    x: Number(gotoX.value),
    y: Number(gotoY.value),
    z: Number(gotoZ.value),
  };
  if (![target.x, target.y, target.z].every(Number.isFinite)) {
    dispatch({ type: "notice", text: "GOTO needs three numbers" });
    return;
  }
  const speed = gotoSpeed.value === "" ? undefined : Number(gotoSpeed.value);
  void mutate(gotoLine(target, speed));
});

homeButton.addEventListener("click", () => void mutate(homeLine()));

traceFile.addEventListener("change", paint);

traceRun.addEventListener("click", () => {
  const file = traceFile.files?.[0];
  if (file === undefined) return;
  void file.text().then((text) => mutate(traceStartBody(text)));
});

traceAbort.addEventListener("click", () => void mutate(traceAbortLine()));

downloadButton.addEventListener("click", () => {
  void client.logCsv().then((csv) => {
    const blob = new Blob([csv], { type: "text/csv" });
    const url = URL.createObjectURL(blob);
    const a = document.createElement("a");
    a.href = url;
    a.download = "log.csv";
    a.click();
    URL.revokeObjectURL(url);
  });
});

bridgeApply.addEventListener("click", () => {
  const next = new URL(window.location.href);
  next.searchParams.set("bridge", bridgeInput.value);
  window.location.href = next.toString();
});

buildJogPad();
paint();

new EventStreamSession(`${client.baseUrl}/events`, {
  onOpen: () => dispatch({ type: "stream-open" }),
  onClose: () => dispatch({ type: "stream-closed" }),
  onFrame: (frame) => {
    let payload: unknown;
    try {
      payload = JSON.parse(frame.data);
    } catch {
      return;
    }
    if (frame.event === "log" && isLogRecord(payload)) {
      dispatch({ type: "log", record: payload });
    } else if (frame.event === "state" && isStateSnapshot(payload)) {
      dispatch({ type: "state", snapshot: payload });
    }
  },
});
