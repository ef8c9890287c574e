// Wire schema for the /ws teleoperation socket. Field names are fixed by
// the server; decode defensively and drop anything that does not fit.

export interface TwistMsg {
  vx: number;
  omega: number;
}

export interface StateFrame {
  type: "state";
  tick: number;
  sim_time: number;
  pose: { x: number; y: number; theta: number };
  goal: { x: number; y: number };
  alpha: number;
  d: number;
  delta: number;
  user_cmd: TwistMsg;
  agent_cmd: TwistMsg;
  blended_cmd: TwistMsg;
  status: "running" | "goal" | "collision" | "timeout";
}

export interface CostmapFrame {
  type: "costmap";
  width: number;
  height: number;
  resolution: number;
  origin: { x: number; y: number; theta: number };
  data_b64: string;
}

export interface ConfigFrame {
  type: "config";
  v_max: number;
  omega_max: number;
  mode: "manual" | "bsc";
  delay: number;
  drift: number;
}

export interface RunEventFrame {
  type: "run_event";
  kind: "start" | "goal" | "collision" | "timeout";
  sim_time: number;
}

export type ServerFrame = StateFrame | CostmapFrame | ConfigFrame | RunEventFrame;

export interface ClientCommand {
  type: "cmd";
  seq: number;
  stamp: number;
  vx_norm: number;
  omega_norm: number;
  mode_request?: "manual" | "bsc";
}

function isNum(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

function isTwist(x: unknown): x is TwistMsg {
  const t = x as TwistMsg;
  return !!t && isNum(t.vx) && isNum(t.omega);
}

/** Parse one server message; returns null for anything malformed. */
export function decodeFrame(text: string): ServerFrame | null {
  let msg: Record<string, unknown>;
  try {
    msg = JSON.parse(text);
  } catch {
    return null;
  }
  if (!msg || typeof msg !== "object") return null;
  switch (msg.type) {
    case "state": {
      const m = msg as unknown as StateFrame;
      const poseOk =
        !!m.pose && isNum(m.pose.x) && isNum(m.pose.y) && isNum(m.pose.theta);
      const goalOk = !!m.goal && isNum(m.goal.x) && isNum(m.goal.y);
      if (
        poseOk && goalOk && isNum(m.tick) && isNum(m.sim_time) &&
        isNum(m.alpha) && isNum(m.d) && isNum(m.delta) &&
        isTwist(m.user_cmd) && isTwist(m.agent_cmd) && isTwist(m.blended_cmd) &&
        typeof m.status === "string"
      ) {
        return m;
      }
      return null;
    }
    case "costmap": {
      const m = msg as unknown as CostmapFrame;
      if (
        isNum(m.width) && isNum(m.height) && isNum(m.resolution) &&
        !!m.origin && isNum(m.origin.x) && isNum(m.origin.y) &&
        typeof m.data_b64 === "string"
      ) {
        return m;
      }
      return null;
    }
    case "config": {
      const m = msg as unknown as ConfigFrame;
      return isNum(m.v_max) && isNum(m.omega_max) ? m : null;
    }
    case "run_event": {
      const m = msg as unknown as RunEventFrame;
      return typeof m.kind === "string" && isNum(m.sim_time) ? m : null;
    }
    default:
      return null;
  }
}

export function encodeCommand(cmd: ClientCommand): string {
  return JSON.stringify(cmd);
}

/** Row-major uint8 cost cells from a costmap frame. */
export function decodeCostCells(frame: CostmapFrame): Uint8Array {
  const bin = atob(frame.data_b64);
  const cells = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) cells[i] = bin.charCodeAt(i);
  return cells;
}
