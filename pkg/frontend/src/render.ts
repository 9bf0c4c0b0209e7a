// Top-down 2D canvas rendering of the view model: discs/rectangles for
// objects, an EEF marker with an orientation glyph, a stage banner, the
// height gauge, and per-goal belief bars.

import { ViewState } from './view.js';

const COLORS: Record<string, string> = {
  table: '#f4efe8',
  grid: '#e3dccf',
  object: '#8d7b66',
  argmax: '#d97706',
  attached: '#2563eb',
  eef: '#111827',
  bar: '#9ca3af',
  barArgmax: '#d97706',
};

export function drawScene(canvas: HTMLCanvasElement, view: ViewState): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const { min, max } = view.workspace;
  const scale = Math.min(canvas.width / (max[0] - min[0]), canvas.height / (max[1] - min[1]));

  const toPx = (x: number, y: number): [number, number] => [
    (x - min[0]) * scale,
    canvas.height - (y - min[1]) * scale,
  ];

  ctx.fillStyle = COLORS.table;
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = COLORS.grid;
  ctx.lineWidth = 1;
  for (let g = Math.ceil(min[0] * 10); g <= max[0] * 10; g++) {
    const [px] = toPx(g / 10, 0);
    ctx.beginPath();
    ctx.moveTo(px, 0);
    ctx.lineTo(px, canvas.height);
    ctx.stroke();
  }
  for (let g = Math.ceil(min[1] * 10); g <= max[1] * 10; g++) {
    const [, py] = toPx(0, g / 10);
    ctx.beginPath();
    ctx.moveTo(0, py);
    ctx.lineTo(canvas.width, py);
    ctx.stroke();
  }

  for (const obj of view.objects) {
    const [px, py] = toPx(obj.x, obj.y);
    const w = obj.halfExtents[0] * 2 * scale;
    const h = obj.halfExtents[1] * 2 * scale;
    ctx.save();
    ctx.translate(px, py);
    ctx.rotate(-obj.yaw);
    ctx.fillStyle = obj.attached ? COLORS.attached : obj.isArgmax ? COLORS.argmax : COLORS.object;
    const round = Math.abs(obj.halfExtents[0] - obj.halfExtents[1]) < 1e-6;
    if (round) {
      ctx.beginPath();
      ctx.arc(0, 0, w / 2, 0, 2 * Math.PI);
      ctx.fill();
    } else {
      ctx.fillRect(-w / 2, -h / 2, w, h);
    }
    ctx.restore();
    ctx.fillStyle = '#374151';
    ctx.font = '12px sans-serif';
    ctx.textAlign = 'center';
    ctx.fillText(obj.name, px, py - h / 2 - 4);
  }

  if (view.eef) {
    const [px, py] = toPx(view.eef.x, view.eef.y);
    ctx.strokeStyle = COLORS.eef;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(px, py, 9, 0, 2 * Math.PI);
    ctx.stroke();
    // orientation glyph: a tick along the wrist's x-axis heading
    ctx.beginPath();
    ctx.moveTo(px, py);
    ctx.lineTo(px + 16 * Math.cos(-view.eef.yaw), py + 16 * Math.sin(-view.eef.yaw));
    ctx.stroke();
  }
}

export function drawHud(root: HTMLElement, view: ViewState): void {
  const stage = root.querySelector<HTMLElement>('#stage-banner');
  if (stage) {
    stage.textContent = view.success
      ? `SUCCESS — ${view.task}`
      : `${view.stage || 'waiting'} — ${view.task} [${view.connection}] tick ${view.tick}`;
    stage.dataset.stage = view.success ? 'done' : view.stage;
  }
  const gauge = root.querySelector<HTMLElement>('#height-gauge');
  if (gauge && view.eef) gauge.textContent = `z ${view.eef.z.toFixed(3)} m`;

  const bars = root.querySelector<HTMLElement>('#belief-bars');
  if (!bars) return;
  bars.replaceChildren();
  for (const bar of view.beliefBars) {
    const row = document.createElement('div');
    row.className = 'belief-row';
    const label = document.createElement('span');
    label.textContent = bar.name;
    const track = document.createElement('div');
    track.className = 'belief-track';
    const fill = document.createElement('div');
    fill.className = 'belief-fill' + (bar.isArgmax ? ' argmax' : '');
    fill.style.width = `${(bar.probability * 100).toFixed(1)}%`;
    fill.style.background = bar.isArgmax ? COLORS.barArgmax : COLORS.bar;
    track.appendChild(fill);
    const pct = document.createElement('span');
    pct.textContent = `${(bar.probability * 100).toFixed(0)}%`;
    row.append(label, track, pct);
    bars.appendChild(row);
  }
}
