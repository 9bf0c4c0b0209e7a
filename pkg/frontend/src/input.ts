// Keyboard capture: WASD/arrows move in the table plane, Q/E move along z,
// space closes the gripper, shift+space opens it. Held keys map to a unit
// direction scaled by the magnitude slider. There is no rotation binding of
// any kind: rotation is the system's job.

import { ClientFrame, GripperEvent, makeClientFrame } from './protocol.js';

const KEY_DIRECTIONS: Record<string, [number, number, number]> = {
  KeyW: [0, 1, 0],
  ArrowUp: [0, 1, 0],
  KeyS: [0, -1, 0],
  ArrowDown: [0, -1, 0],
  KeyA: [-1, 0, 0],
  ArrowLeft: [-1, 0, 0],
  KeyD: [1, 0, 0],
  ArrowRight: [1, 0, 0],
  KeyQ: [0, 0, 1],
  KeyE: [0, 0, -1],
};

export function directionFromKeys(held: Set<string>): [number, number, number] {
  const out: [number, number, number] = [0, 0, 0];
  for (const code of held) {
    const dir = KEY_DIRECTIONS[code];
    if (!dir) continue;
    out[0] += dir[0];
    out[1] += dir[1];
    out[2] += dir[2];
  }
  const norm = Math.hypot(out[0], out[1], out[2]);
  if (norm === 0) return [0, 0, 0];
  return [out[0] / norm, out[1] / norm, out[2] / norm];
}

export class InputCapture {
  private held = new Set<string>();
  private pendingGripper: GripperEvent = null;
  private seq = 0;
  magnitude: number; // meters per frame the slider currently allows

  constructor(magnitude = 0.008) {
    this.magnitude = magnitude;
  }

  keyDown(code: string, shift: boolean): void {
    if (code === 'Space') {
      this.pendingGripper = shift ? 'open' : 'close';
      return;
    }
    if (code in KEY_DIRECTIONS) this.held.add(code);
  }

  keyUp(code: string): void {
    this.held.delete(code);
  }

  clear(): void {
    this.held.clear();
    this.pendingGripper = null;
  }

  // One outgoing frame per client tick; gripper events are one-shot.
  nextFrame(): ClientFrame | null {
    const dir = directionFromKeys(this.held);
    const gripper = this.pendingGripper;
    this.pendingGripper = null;
    const idle = dir[0] === 0 && dir[1] === 0 && dir[2] === 0;
    if (idle && gripper === null) return null; // zero frames are suppressed
    const input: [number, number, number] = [
      dir[0] * this.magnitude,
      dir[1] * this.magnitude,
      dir[2] * this.magnitude,
    ];
    return makeClientFrame(input, gripper, this.seq++);
  }

  attach(target: HTMLElement | Window): void {
    target.addEventListener('keydown', (ev) => {
      const e = ev as KeyboardEvent;
      if (e.code === 'Space') e.preventDefault();
      this.keyDown(e.code, e.shiftKey);
    });
    target.addEventListener('keyup', (ev) => this.keyUp((ev as KeyboardEvent).code));
    window.addEventListener('blur', () => this.clear());
  }
}
