// Wire protocol types and validators. Mirrors the server's JSON schemas,
// version 1. The client frame deliberately has no rotation channel: this
// client can only ever ask for translation and gripper changes.

export const WIRE_VERSION = 1;

export type GripperEvent = 'close' | 'open' | null;

export type ClientFrame = {
  input: [number, number, number];
  gripper: GripperEvent;
  seq: number;
};

export type PoseDoc = {
  position: [number, number, number];
  orientation: [number, number, number, number];
};

export type ObjectState = {
  id: number;
  position: [number, number, number];
  orientation: [number, number, number, number];
};

export type StateFrame = {
  v: number;
  type: 'state';
  tick: number;
  stage: string;
  eef: PoseDoc;
  objects: ObjectState[];
  belief: Record<string, number> | null;
  argmax: number | null;
  attached: number | null;
  success: boolean;
  hash?: string;
};

export type ObjectInfo = { id: number; name: string; half_extents: [number, number, number] };

export type InitDetail = {
  session_id: string;
  tick_rate: number;
  lockstep: boolean;
  task: { kind: string; tool: string; target: string } | null;
  workspace: { min: [number, number, number]; max: [number, number, number] };
  objects: ObjectInfo[];
};

export type EventFrame = {
  v: number;
  type: 'event';
  event: 'init' | 'attach' | 'success' | 'error';
  detail?: unknown;
};

export type ServerFrame = StateFrame | EventFrame;

const CLIENT_FIELDS = ['input', 'gripper', 'seq'];

export function makeClientFrame(
  input: [number, number, number],
  gripper: GripperEvent,
  seq: number,
): ClientFrame {
  return { input, gripper, seq };
}

export function isVec3(v: unknown): v is [number, number, number] {
  return Array.isArray(v) && v.length === 3 && v.every((c) => typeof c === 'number' && isFinite(c));
}

// Validate a frame before it goes on the wire. Rejects unknown fields, so a
// rotation can never be smuggled in.
export function validateClientFrame(frame: unknown): frame is ClientFrame {
  if (typeof frame !== 'object' || frame === null) return false;
  const doc = frame as Record<string, unknown>;
  for (const key of Object.keys(doc)) {
    if (!CLIENT_FIELDS.includes(key)) return false;
  }
  if (!isVec3(doc.input)) return false;
  if (doc.gripper !== null && doc.gripper !== 'close' && doc.gripper !== 'open') return false;
  return typeof doc.seq === 'number' && Number.isInteger(doc.seq) && doc.seq >= 0;
}

export function parseServerFrame(raw: string): ServerFrame | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== 'object' || doc === null) return null;
  const frame = doc as Record<string, unknown>;
  if (frame.v !== WIRE_VERSION) return null;
  if (frame.type === 'state' && typeof frame.tick === 'number') return frame as StateFrame;
  if (frame.type === 'event' && typeof frame.event === 'string') return frame as EventFrame;
  return null;
}
