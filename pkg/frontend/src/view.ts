// View model: folds server frames into what the renderer draws. Pure data in,
// pure data out; the canvas code never touches the socket and the tests never
// need a canvas. Only server-authoritative state is shown - the client
// simulates nothing.

import { EventFrame, InitDetail, ObjectInfo, ServerFrame, StateFrame } from './protocol.js';

export type BeliefBar = {
  id: number;
  name: string;
  probability: number;
  isArgmax: boolean;
};

export type SceneObject = {
  id: number;
  name: string;
  x: number;
  y: number;
  yaw: number;
  halfExtents: [number, number, number];
  attached: boolean;
  isArgmax: boolean;
};

export type ViewState = {
  connection: 'connecting' | 'live' | 'reconnecting' | 'closed';
  tick: number;
  stage: string;
  success: boolean;
  eef: { x: number; y: number; z: number; yaw: number } | null;
  objects: SceneObject[];
  beliefBars: BeliefBar[];
  workspace: { min: [number, number, number]; max: [number, number, number] };
  task: string;
  lastError: string;
};

export function initialViewState(): ViewState {
  return {
    connection: 'connecting',
    tick: -1,
    stage: '',
    success: false,
    eef: null,
    objects: [],
    beliefBars: [],
    workspace: { min: [-0.5, -0.5, 0], max: [0.5, 0.5, 0.6] },
    task: '',
    lastError: '',
  };
}

// yaw of the body x-axis in the table plane, from a wxyz quaternion
export function yawOf(q: [number, number, number, number]): number {
  const [w, x, y, z] = q;
  return Math.atan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z));
}

function beliefBars(frame: StateFrame, names: Map<number, string>): BeliefBar[] {
  if (!frame.belief) return [];
  const bars = Object.entries(frame.belief)
    .map(([id, p]) => ({
      id: Number(id),
      name: names.get(Number(id)) ?? `#${id}`,
      probability: p,
      isArgmax: Number(id) === frame.argmax,
    }))
    .sort((a, b) => a.id - b.id);
  const total = bars.reduce((acc, b) => acc + b.probability, 0);
  if (total > 0) for (const b of bars) b.probability /= total;
  return bars;
}

export class TeleopView {
  state: ViewState = initialViewState();
  private catalog = new Map<number, ObjectInfo>();

  applyInit(detail: InitDetail): void {
    this.catalog = new Map(detail.objects.map((o) => [o.id, o]));
    this.state.workspace = detail.workspace;
    this.state.task = detail.task ? `${detail.task.tool} → ${detail.task.target}` : '';
    this.state.connection = 'live';
  }

  // Returns true when the frame changed the view. Stale state frames (tick
  // not beyond the last rendered one) are discarded.
  apply(frame: ServerFrame): boolean {
    if (frame.type === 'event') return this.applyEvent(frame);
    if (frame.tick <= this.state.tick) return false;
    const names = new Map<number, string>();
    for (const [id, info] of this.catalog) names.set(id, info.name);
    this.state.tick = frame.tick;
    this.state.stage = frame.stage;
    this.state.success = frame.success;
    this.state.eef = {
      x: frame.eef.position[0],
      y: frame.eef.position[1],
      z: frame.eef.position[2],
      yaw: yawOf(frame.eef.orientation),
    };
    this.state.objects = frame.objects.map((obj) => {
      const info = this.catalog.get(obj.id);
      return {
        id: obj.id,
        name: info?.name ?? `#${obj.id}`,
        x: obj.position[0],
        y: obj.position[1],
        yaw: yawOf(obj.orientation),
        halfExtents: info?.half_extents ?? [0.02, 0.02, 0.02],
        attached: frame.attached === obj.id,
        isArgmax: frame.argmax === obj.id,
      };
    });
    this.state.beliefBars = beliefBars(frame, names);
    return true;
  }

  private applyEvent(frame: EventFrame): boolean {
    if (frame.event === 'init') {
      this.applyInit(frame.detail as InitDetail);
      return true;
    }
    if (frame.event === 'success') {
      this.state.success = true;
      return true;
    }
    if (frame.event === 'error') {
      this.state.lastError = String(frame.detail ?? 'unknown error');
      return true;
    }
    return frame.event === 'attach';
  }
}
