// Keyboard state -> normalized drive command at a fixed 20 Hz cadence.
//
// Held keys ramp their axis from 0 to full deflection over RAMP_SECONDS;
// releasing a key zeroes that axis immediately. With forward/reverse held,
// steering mixes down to 0.7 so diagonals stay controllable.

export const SEND_HZ = 20;
export const RAMP_SECONDS = 0.3;
export const DIAGONAL_STEER = 0.7;

const FORWARD = new Set(["ArrowUp", "KeyW"]);
const REVERSE = new Set(["ArrowDown", "KeyS"]);
const LEFT = new Set(["ArrowLeft", "KeyA"]);
const RIGHT = new Set(["ArrowRight", "KeyD"]);

export interface DriveCommand {
  vx_norm: number;
  omega_norm: number;
}

export class InputTracker {
  private pressed = new Set<string>();
  private vx = 0;
  private omega = 0;

  keyDown(code: string): void {
    this.pressed.add(code);
  }

  keyUp(code: string): void {
    this.pressed.delete(code);
  }

  clear(): void {
    this.pressed.clear();
    this.vx = 0;
    this.omega = 0;
  }

  private axisTarget(pos: Set<string>, neg: Set<string>): number {
    const p = [...this.pressed].some((k) => pos.has(k));
    const n = [...this.pressed].some((k) => neg.has(k));
    if (p === n) return 0;
    return p ? 1 : -1;
  }

  /** Advance the ramp by dt seconds and return the command to send. */
  step(dt: number): DriveCommand {
    const vxTarget = this.axisTarget(FORWARD, REVERSE);
    const driving = vxTarget !== 0;
    const steerFull = driving ? DIAGONAL_STEER : 1;
    const omegaTarget = this.axisTarget(LEFT, RIGHT) * steerFull;

    this.vx = ramp(this.vx, vxTarget, dt);
    this.omega = ramp(this.omega, omegaTarget, dt);
    return { vx_norm: this.vx, omega_norm: this.omega };
  }
}

function ramp(value: number, target: number, dt: number): number {
  if (target === 0) return 0; // release snaps to zero
  const rate = dt / RAMP_SECONDS;
  if (value < target) return Math.min(target, value + rate);
  if (value > target) return Math.max(target, value - rate);
  return value;
}
