import { describe, expect, it } from 'vitest';

import { directionFromKeys, InputCapture } from '../src/input.js';

describe('key mapping', () => {
  it('maps WASD and QE to unit directions', () => {
    expect(directionFromKeys(new Set(['KeyW']))).toEqual([0, 1, 0]);
    expect(directionFromKeys(new Set(['KeyQ']))).toEqual([0, 0, 1]);
    const diag = directionFromKeys(new Set(['KeyW', 'KeyD']));
    expect(Math.hypot(...diag)).toBeCloseTo(1.0, 9);
  });

  it('opposing keys cancel', () => {
    expect(directionFromKeys(new Set(['KeyW', 'KeyS']))).toEqual([0, 0, 0]);
    expect(directionFromKeys(new Set(['ArrowLeft', 'KeyD']))).toEqual([0, 0, 0]);
  });
});

describe('input capture', () => {
  it('suppresses zero frames', () => {
    const capture = new InputCapture();
    expect(capture.nextFrame()).toBeNull();
  });

  it('scales by the magnitude slider and bumps seq', () => {
    const capture = new InputCapture(0.008);
    capture.keyDown('KeyD', false);
    const a = capture.nextFrame();
    const b = capture.nextFrame();
    expect(a?.input[0]).toBeCloseTo(0.008, 9);
    expect(a?.seq).toBe(0);
    expect(b?.seq).toBe(1);
  });

  it('space closes, shift+space opens, one-shot', () => {
    const capture = new InputCapture();
    capture.keyDown('Space', false);
    expect(capture.nextFrame()?.gripper).toBe('close');
    expect(capture.nextFrame()).toBeNull();
    capture.keyDown('Space', true);
    expect(capture.nextFrame()?.gripper).toBe('open');
  });

  it('emits no rotation field ever', () => {
    const capture = new InputCapture();
    capture.keyDown('KeyW', false);
    capture.keyDown('Space', false);
    const frame = capture.nextFrame();
    expect(frame && Object.keys(frame).sort()).toEqual(['gripper', 'input', 'seq']);
  });
});
