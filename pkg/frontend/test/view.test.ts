import { describe, expect, it } from 'vitest';

import { InitDetail, StateFrame, WIRE_VERSION } from '../src/protocol.js';
import { TeleopView, yawOf } from '../src/view.js';

const init: InitDetail = {
  session_id: 's1',
  tick_rate: 20,
  lockstep: true,
  task: { kind: 'place', tool: 'banana', target: 'plate' },
  workspace: { min: [-0.5, -0.5, 0], max: [0.5, 0.5, 0.6] },
  objects: [
    { id: 0, name: 'banana', half_extents: [0.095, 0.019, 0.015] },
    { id: 2, name: 'marker', half_extents: [0.06, 0.009, 0.009] },
    { id: 4, name: 'hammer', half_extents: [0.12, 0.055, 0.02] },
  ],
};

function stateFrame(tick: number, belief: Record<string, number>, argmax: number): StateFrame {
  return {
    v: WIRE_VERSION,
    type: 'state',
    tick,
    stage: 'grasping',
    eef: { position: [0.1, 0.2, 0.3], orientation: [1, 0, 0, 0] },
    objects: init.objects.map((o) => ({
      id: o.id,
      position: [0.1 * o.id, 0, 0.02],
      orientation: [1, 0, 0, 0],
    })),
    belief,
    argmax,
    attached: null,
    success: false,
  };
}

function liveView(): TeleopView {
  const view = new TeleopView();
  view.apply({ v: WIRE_VERSION, type: 'event', event: 'init', detail: init });
  return view;
}

describe('belief bars', () => {
  it('track the argmax and normalize to one', () => {
    const view = liveView();
    view.apply(stateFrame(1, { '0': 0.2, '2': 0.3, '4': 0.5 }, 4));
    const bars = view.state.beliefBars;
    expect(bars.map((b) => b.name)).toEqual(['banana', 'marker', 'hammer']);
    const total = bars.reduce((acc, b) => acc + b.probability, 0);
    expect(total).toBeCloseTo(1.0, 9);
    const top = bars.reduce((a, b) => (b.probability > a.probability ? b : a));
    expect(top.isArgmax).toBe(true);
    expect(top.name).toBe('hammer');
  });

  it('follow the argmax as it moves', () => {
    const view = liveView();
    view.apply(stateFrame(1, { '0': 0.6, '2': 0.2, '4': 0.2 }, 0));
    expect(view.state.beliefBars.find((b) => b.isArgmax)?.name).toBe('banana');
    view.apply(stateFrame(2, { '0': 0.1, '2': 0.2, '4': 0.7 }, 4));
    expect(view.state.beliefBars.find((b) => b.isArgmax)?.name).toBe('hammer');
  });
});

describe('frame ordering', () => {
  it('discards stale ticks', () => {
    const view = liveView();
    expect(view.apply(stateFrame(5, { '0': 1 }, 0))).toBe(true);
    expect(view.apply(stateFrame(3, { '0': 1 }, 0))).toBe(false);
    expect(view.state.tick).toBe(5);
    expect(view.apply(stateFrame(6, { '0': 1 }, 0))).toBe(true);
  });
});

describe('scene state', () => {
  it('is server-authoritative and name-resolved', () => {
    const view = liveView();
    view.apply(stateFrame(1, { '0': 1 }, 0));
    const hammer = view.state.objects.find((o) => o.name === 'hammer');
    expect(hammer?.x).toBeCloseTo(0.4);
    expect(view.state.eef?.z).toBeCloseTo(0.3);
    expect(view.state.task).toContain('banana');
  });

  it('marks success from the event frame', () => {
    const view = liveView();
    view.apply({ v: WIRE_VERSION, type: 'event', event: 'success', detail: { tick: 9 } });
    expect(view.state.success).toBe(true);
  });
});

describe('yaw extraction', () => {
  it('matches a pure z rotation', () => {
    const half = Math.PI / 8;
    const q: [number, number, number, number] = [Math.cos(half), 0, 0, Math.sin(half)];
    expect(yawOf(q)).toBeCloseTo(Math.PI / 4, 9);
  });
});
