/** HTTP + SSE plumbing for one bridge session.
 *
 * The event stream is read with fetch + a hand-rolled SSE parser rather than
 * `EventSource` so the same code runs in the browser and under Node-based
 * tests, and so reconnects are fully under the panel's control.
 */

import type {
  CommandResult,
  FeasibilityResponse,
  StateSnapshot,
  Vec3,
} from "./types.js";

export interface SseFrame {
  event: string;
  data: string;
}

/** Incremental parser for a text/event-stream byte stream.
 *
 * Feed it decoded chunks in any split; it returns the frames completed by
 * each chunk. Handles multi-line `data:`, CRLF framing, and ignores comment
 * lines and fields the panel does not use (`id:`, `retry:`).
 */
export class SseParser {
  private buffer = "";

  push(chunk: string): SseFrame[] {
    this.buffer += chunk;
    const frames: SseFrame[] = [];
    for (;;) {
      const m = /\r\n\r\n|\n\n|\r\r/.exec(this.buffer);
      if (m === null) break;
      const block = this.buffer.slice(0, m.index);
      this.buffer = this.buffer.slice(m.index + m[0].length);
      const frame = parseBlock(block);
      if (frame !== null) frames.push(frame);
    }
    return frames;
  }
}

function parseBlock(block: string): SseFrame | null {
  let event = "message";
  const data: string[] = [];
  for (const raw of block.split(/\r\n|\n|\r/)) {
    if (raw === "" || raw.startsWith(":")) continue;
    const colon = raw.indexOf(":");
    const field = colon === -1 ? raw : raw.slice(0, colon);
    let value = colon === -1 ? "" : raw.slice(colon + 1);
    if (value.startsWith(" ")) value = value.slice(1);
    if (field === "event") event = value;
    else if (field === "data") data.push(value);
  }
  if (data.length === 0) return null;
  return { event, data: data.join("\n") };
}

/** Plain request/response endpoints of the bridge. */
export class BridgeClient {
  readonly baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  async state(): Promise<StateSnapshot> {
    const res = await fetch(`${this.baseUrl}/state`);
    if (!res.ok) throw new Error(`GET /state -> ${res.status}`);
    return (await res.json()) as StateSnapshot;
  }

  /** POST a plain-text bridge command (GOTO/HOME/TRACE-START/TRACE-ABORT). */
  async command(text: string): Promise<CommandResult> {
    const res = await fetch(`${this.baseUrl}/command`, {
      method: "POST",
      headers: { "Content-Type": "text/plain; charset=utf-8" },
      body: text,
    });
    if (!res.ok) throw new Error(`POST /command -> ${res.status}`);
    return (await res.json()) as CommandResult;
  }

  /** Advisory static-tension check of a target pose. */
  async feasibility(target: Vec3): Promise<FeasibilityResponse> {
    const res = await fetch(`${this.baseUrl}/feasibility`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ x: target.x, y: target.y, z: target.z }),
    });
    if (!res.ok) throw new Error(`POST /feasibility -> ${res.status}`);
    return (await res.json()) as FeasibilityResponse;
  }

  /** The full experiment log, byte-for-byte as the bridge serves it. */
  async logCsv(): Promise<string> {
    const res = await fetch(`${this.baseUrl}/log.csv`);
    if (!res.ok) throw new Error(`GET /log.csv -> ${res.status}`);
    return await res.text();
  }
}

export interface StreamHandlers {
  /** A connection was accepted; the server will replay the full log. */
  onOpen: () => void;
  onFrame: (frame: SseFrame) => void;
  onClose: () => void;
}

export interface StreamOptions {
  /** Delay before a reconnect attempt, ms. */
  retryMs?: number;
  fetchImpl?: typeof fetch;
}

/** Auto-reconnecting reader of the bridge's /events stream.
 *
 * Runs until stop(): connect, emit onOpen, forward frames, and on any error
 * or end-of-stream emit onClose, wait retryMs, reconnect. A fresh onOpen
 * always means "the server is replaying from scratch" — the consumer must
 * reset derived state.
 */
export class EventStreamSession {
  private stopped = false;
  private readonly controller = new AbortController();
  readonly done: Promise<void>;

  constructor(
    url: string,
    handlers: StreamHandlers,
    options: StreamOptions = {},
  ) {
    this.done = this.run(url, handlers, options);
  }

  private async run(
    url: string,
    handlers: StreamHandlers,
    options: StreamOptions,
  ): Promise<void> {
    const retryMs = options.retryMs ?? 1000;
    const fetchImpl = options.fetchImpl ?? fetch;
    while (!this.stopped) {
      try {
        const res = await fetchImpl(url, {
          signal: this.controller.signal,
          headers: { Accept: "text/event-stream" },
        });
        if (res.ok && res.body !== null) {
          handlers.onOpen();
          const reader = res.body.getReader();
          const decoder = new TextDecoder();
          const parser = new SseParser();
          for (;;) {
            const { done, value } = await reader.read();
            if (done) break;
            for (const frame of parser.push(decoder.decode(value, { stream: true }))) {
              handlers.onFrame(frame);
            }
          }
        }
      } catch {
        // fall through to the retry path; aborts land here too
      }
      handlers.onClose();
      if (this.stopped) break;
      await sleep(retryMs);
    }
  }

  stop(): void {
    this.stopped = true;
    this.controller.abort();
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
