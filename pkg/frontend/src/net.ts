// Session socket with reconnect backoff. One JSON document per message.

import { ClientFrame, ServerFrame, parseServerFrame, validateClientFrame } from './protocol.js';

export type SocketCallbacks = {
  onFrame: (frame: ServerFrame) => void;
  onStatus: (status: 'connecting' | 'live' | 'reconnecting' | 'closed') => void;
};

export class TeleopSocket {
  private ws: WebSocket | null = null;
  private url: string;
  private callbacks: SocketCallbacks;
  private backoffMs = 500;
  private closed = false;

  constructor(url: string, callbacks: SocketCallbacks) {
    this.url = url;
    this.callbacks = callbacks;
    this.connect('connecting');
  }

  private connect(status: 'connecting' | 'reconnecting'): void {
    this.callbacks.onStatus(status);
    this.ws = new WebSocket(this.url);
    this.ws.addEventListener('open', () => {
      this.backoffMs = 500;
      this.callbacks.onStatus('live');
    });
    this.ws.addEventListener('message', (ev) => {
      const frame = parseServerFrame(String(ev.data));
      if (frame) this.callbacks.onFrame(frame);
    });
    this.ws.addEventListener('close', () => {
      if (this.closed) return;
      this.callbacks.onStatus('reconnecting');
      setTimeout(() => this.connect('reconnecting'), this.backoffMs);
      this.backoffMs = Math.min(this.backoffMs * 2, 8000);
    });
  }

  send(frame: ClientFrame): boolean {
    if (!this.ws || this.ws.readyState !== WebSocket.OPEN) return false;
    if (!validateClientFrame(frame)) return false;
    this.ws.send(JSON.stringify(frame));
    return true;
  }

  close(): void {
    this.closed = true;
    this.callbacks.onStatus('closed');
    this.ws?.close();
  }
}

export async function openSession(
  base: string,
  options: { task?: string; seed?: number; lockstep?: boolean },
): Promise<{ sessionId: string; wsUrl: string }> {
  const response = await fetch(`${base}/sessions`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(options),
  });
  if (!response.ok) throw new Error(`session refused: ${await response.text()}`);
  const doc = (await response.json()) as { session_id: string };
  const wsBase = base.replace(/^http/, 'ws');
  return { sessionId: doc.session_id, wsUrl: `${wsBase}/sessions/${doc.session_id}/ws` };
}
