// Entry point: open a session against the service, stream state into the
// view model, render at display refresh, and send captured input at the
// client rate. Endpoint and task come from query parameters:
//   index.html?endpoint=http://127.0.0.1:8765&task=hammer&seed=3

import { InputCapture } from './input.js';
import { openSession, TeleopSocket } from './net.js';
import { drawHud, drawScene } from './render.js';
import { TeleopView } from './view.js';

const CLIENT_RATE_HZ = 30;

async function start(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const endpoint = params.get('endpoint') ?? 'http://127.0.0.1:8765';
  const task = params.get('task') ?? undefined;
  const seed = params.get('seed');

  const canvas = document.getElementById('scene') as HTMLCanvasElement;
  const view = new TeleopView();
  const input = new InputCapture();
  input.attach(window);

  const slider = document.getElementById('magnitude') as HTMLInputElement | null;
  slider?.addEventListener('input', () => {
    input.magnitude = Number(slider.value) / 1000; // mm per frame -> m
  });

  const { wsUrl } = await openSession(endpoint, {
    task,
    seed: seed ? Number(seed) : undefined,
  });
  const socket = new TeleopSocket(wsUrl, {
    onFrame: (frame) => view.apply(frame),
    onStatus: (status) => {
      view.state.connection = status;
    },
  });

  window.setInterval(() => {
    const frame = input.nextFrame();
    if (frame) socket.send(frame);
  }, 1000 / CLIENT_RATE_HZ);

  const render = () => {
    drawScene(canvas, view.state);
    drawHud(document.body, view.state);
    requestAnimationFrame(render);
  };
  requestAnimationFrame(render);
}

start().catch((err) => {
  const banner = document.getElementById('stage-banner');
  if (banner) banner.textContent = `connection failed: ${err}`;
});
