// Client session state: the single object shared by the network callbacks
// and the render loop. Rendering reflects only server-sent frames; nothing
// here predicts or recomputes simulation quantities.

import {
  ConfigFrame,
  CostmapFrame,
  RunEventFrame,
  StateFrame,
} from "./protocol.js";

export const STALE_SECONDS = 2.0;

export type Connection = "connecting" | "open" | "closed";

export class Session {
  connection: Connection = "connecting";
  config: ConfigFrame | null = null;
  state: StateFrame | null = null;
  costmap: CostmapFrame | null = null;
  events: RunEventFrame[] = [];
  mode: "manual" | "bsc" = "bsc";
  lastFrameAt = -Infinity; // wall clock, seconds

  onConfig(frame: ConfigFrame, now: number): void {
    this.config = frame;
    this.mode = frame.mode;
    this.lastFrameAt = now;
  }

  onState(frame: StateFrame, now: number): void {
    this.state = frame;
    this.lastFrameAt = now;
  }

  onCostmap(frame: CostmapFrame, now: number): void {
    this.costmap = frame;
    this.lastFrameAt = now;
  }

  onRunEvent(frame: RunEventFrame, now: number): void {
    this.events.push(frame);
    this.lastFrameAt = now;
  }

  /** True when no frame has arrived for STALE_SECONDS (or disconnected). */
  degraded(now: number): boolean {
    return this.connection !== "open" || now - this.lastFrameAt > STALE_SECONDS;
  }
}
