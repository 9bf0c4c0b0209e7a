"""Live teleoperation session service.

Exposes the control loop over a WebSocket per session carrying one JSON
message per frame (the WireMessage schemas), plus an HTTP health endpoint.
The server owns the clock: in ``paced`` mode a fixed-rate loop consumes the
most recent client frame (last-writer-wins, zero input if none); in
``lockstep`` mode every client frame drives exactly one tick, which makes
wire-driven runs reproducible and hash-comparable with headless episodes.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from . import assets
from .control import TickResult, UserFrame
from .episode import EpisodeConfig, EpisodeRunner, build_task_context
from .geometry import ValidationError
from .schemas import (
    SchemaError,
    WIRE_SCHEMA_VERSION,
    validate_payload,
)
from .telemetry import header_record, pose_doc, state_hash, write_jsonl
from .world import ScenarioSpec, Task

DEFAULT_TICK_RATE_BOUNDS = (5.0, 60.0)
RECONNECT_TIMEOUT_S = 30.0


@dataclass(frozen=True)
class ServerConfig:
    scenario: str = "builtin:tabletop_six"
    method: str = "assisted"
    adapter_mode: str = "fixture"
    fixture_dir: Optional[str] = None
    telemetry_dir: Optional[str] = None
    lockstep: bool = False


@dataclass
class SessionStats:
    created_at: float = field(default_factory=time.monotonic)
    frames_received: int = 0
    frames_dropped: int = 0
    last_seq: int = -1


class Session:
    """One live control loop: world + controller + telemetry sink."""

    def __init__(self, session_id: str, spec: ScenarioSpec, task: Optional[Task],
                 config: EpisodeConfig, seed: int, tick_rate: float,
                 lockstep: bool, telemetry_path: Optional[Path]):
        lo, hi = DEFAULT_TICK_RATE_BOUNDS
        if not (lo <= tick_rate <= hi):
            raise ValidationError(f"tick rate must lie in [{lo}, {hi}] Hz")
        self.id = session_id
        self.spec = spec
        self.task = task
        self.tick_rate = tick_rate
        self.lockstep = lockstep
        self.telemetry_path = telemetry_path
        context = build_task_context(spec, config, seed=seed)
        self.runner = EpisodeRunner(context, task)
        self.header = header_record(
            spec.to_dict(),
            {"kind": task.kind, "tool": task.tool, "target": task.target} if task else None,
            config.method, seed, config.to_dict())
        self.stats = SessionStats()
        self.mailbox: Optional[dict] = None     # latest unconsumed client frame
        self.clients: list[WebSocket] = []
        self.closed = False
        self._loop_task: Optional[asyncio.Task] = None
        self._announced_attach = False
        self._announced_success = False
        self._lock = asyncio.Lock()

    # -- frames ---------------------------------------------------------

    def init_frame(self) -> dict:
        objects = []
        for obj in self.runner.world.objects:
            obb = obj.obb_local
            objects.append({
                "id": obj.id,
                "name": obj.name,
                "half_extents": [float(h) for h in obb.half_extents],
            })
        return {
            "v": WIRE_SCHEMA_VERSION,
            "type": "event",
            "event": "init",
            "detail": {
                "session_id": self.id,
                "tick_rate": self.tick_rate,
                "lockstep": self.lockstep,
                "task": self.header["task"],
                "workspace": {"min": list(self.spec.workspace_min),
                              "max": list(self.spec.workspace_max)},
                "objects": objects,
            },
        }

    def state_frame(self, result: TickResult) -> dict:
        state = self.runner.state
        world = self.runner.world
        belief = None
        if result.belief is not None:
            belief = {str(g): p for g, p in result.belief.probabilities().items()}
        return {
            "v": WIRE_SCHEMA_VERSION,
            "type": "state",
            "tick": state.tick,
            "stage": result.stage.kind.value,
            "eef": pose_doc(state.eef),
            "objects": [
                {"id": obj.id,
                 "position": [float(c) for c in world.object_center(state, obj.id)],
                 "orientation": [float(c) for c in
                                 state.object_poses[obj.id].orientation]}
                for obj in world.objects
            ],
            "belief": belief,
            "argmax": result.argmax_id,
            "attached": state.attached_id,
            "success": self.runner.succeeded,
            "hash": state_hash(state),
        }

    def consume_frame(self, doc: dict) -> Optional[UserFrame]:
        """Validate a client frame; stale sequence numbers are dropped."""
        validate_payload("wire_client", doc)
        if doc["seq"] <= self.stats.last_seq:
            self.stats.frames_dropped += 1
            return None
        self.stats.last_seq = doc["seq"]
        self.stats.frames_received += 1
        return UserFrame(u_h=np.asarray(doc["input"], dtype=float),
                         gripper=doc.get("gripper"))

    def tick(self, frame: Optional[UserFrame]) -> list[dict]:
        """Advance one tick and return the frames to broadcast."""
        if frame is None:
            frame = UserFrame(u_h=np.zeros(3), gripper=None)
        result = self.runner.tick(frame)
        frames = [self.state_frame(result)]
        if self.runner.state.attached_id is not None and not self._announced_attach:
            self._announced_attach = True
            frames.append({"v": WIRE_SCHEMA_VERSION, "type": "event", "event": "attach",
                           "detail": {"object": self.runner.state.attached_id}})
        if self.runner.succeeded and not self._announced_success:
            self._announced_success = True
            frames.append({"v": WIRE_SCHEMA_VERSION, "type": "event", "event": "success",
                           "detail": {"tick": self.runner.state.tick}})
        return frames

    def flush(self) -> None:
        if self.telemetry_path is not None:
            write_jsonl(self.telemetry_path, [self.header] + self.runner.records)

    def close(self) -> None:
        if not self.closed:
            self.closed = True
            self.flush()
            if self._loop_task is not None:
                self._loop_task.cancel()

    # -- paced loop -------------------------------------------------------

    async def broadcast(self, frames: list[dict], timeout: Optional[float] = None) -> None:
        """Send frames to every client; clients that error (or exceed the
        timeout, in paced mode) are dropped rather than stalling the loop."""
        dead = []
        for ws in self.clients:
            try:
                for frame in frames:
                    send = ws.send_text(json.dumps(frame))
                    if timeout is None:
                        await send
                    else:
                        await asyncio.wait_for(send, timeout=timeout)
            except Exception:
                dead.append(ws)
        for ws in dead:
            if ws in self.clients:
                self.clients.remove(ws)

    async def run_paced(self) -> None:
        period = 1.0 / self.tick_rate
        disconnected_since: Optional[float] = None
        try:
            while not self.closed:
                start = time.monotonic()
                if self.clients:
                    disconnected_since = None
                    async with self._lock:
                        frame_doc = self.mailbox
                        self.mailbox = None
                    frame = None
                    if frame_doc is not None:
                        try:
                            frame = self.consume_frame(frame_doc)
                        except SchemaError:
                            frame = None
                    frames = self.tick(frame)
                    await self.broadcast(frames, timeout=3.0 * period)
                else:
                    # Paused: no client, no ticks. Close after the timeout.
                    if disconnected_since is None:
                        disconnected_since = time.monotonic()
                    elif time.monotonic() - disconnected_since > RECONNECT_TIMEOUT_S:
                        self.close()
                        return
                elapsed = time.monotonic() - start
                await asyncio.sleep(max(0.0, period - elapsed))
        except asyncio.CancelledError:
            pass


def create_app(server_config: Optional[ServerConfig] = None) -> FastAPI:
    cfg = server_config or ServerConfig()
    app = FastAPI(title="teleassist session service")
    sessions: dict[str, Session] = {}
    counter = itertools.count(1)

    def _build_session(body: dict) -> Session:
        scenario_ref = body.get("scenario", cfg.scenario)
        spec = ScenarioSpec.from_path(assets.resolve_scenario(scenario_ref))
        seed = int(body.get("seed", spec.seed))
        task = None
        if spec.tasks:
            task_kind = body.get("task", spec.tasks[0].kind)
            matches = [t for t in spec.tasks if t.kind == task_kind]
            if not matches:
                raise ValidationError(f"scenario has no task of kind {task_kind!r}")
            task = matches[0]
        episode_cfg = EpisodeConfig(method=body.get("method", cfg.method),
                                    adapter_mode=cfg.adapter_mode,
                                    fixture_dir=cfg.fixture_dir)
        session_id = f"s{next(counter):04d}-{seed}"
        telemetry_path = None
        if cfg.telemetry_dir:
            telemetry_path = Path(cfg.telemetry_dir) / f"{session_id}.jsonl"
        return Session(session_id=session_id, spec=spec, task=task,
                       config=episode_cfg, seed=seed,
                       tick_rate=float(body.get("tick_rate", spec.tick_rate)),
                       lockstep=bool(body.get("lockstep", cfg.lockstep)),
                       telemetry_path=telemetry_path)

    @app.post("/sessions")
    async def open_session(body: Optional[dict] = None):
        try:
            session = _build_session(body or {})
        except (ValidationError, SchemaError, FileNotFoundError, OSError,
                ValueError, RuntimeError) as exc:
            raise HTTPException(status_code=400, detail=f"session refused: {exc}")
        sessions[session.id] = session
        return {"session_id": session.id, "tick_rate": session.tick_rate,
                "lockstep": session.lockstep}

    @app.get("/health")
    async def health():
        return {
            "v": WIRE_SCHEMA_VERSION,
            "sessions": [
                {
                    "id": s.id,
                    "tick": s.runner.state.tick,
                    "stage": s.runner.stage.kind.value,
                    "connected": bool(s.clients),
                    "lockstep": s.lockstep,
                    "frames_received": s.stats.frames_received,
                    "frames_dropped": s.stats.frames_dropped,
                }
                for s in sessions.values() if not s.closed
            ],
        }

    @app.delete("/sessions/{session_id}")
    async def close_session(session_id: str):
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="no such session")
        session.close()
        del sessions[session_id]
        return {"closed": session_id}

    @app.websocket("/sessions/{session_id}/ws")
    async def session_socket(websocket: WebSocket, session_id: str):
        session = sessions.get(session_id)
        if session is None or session.closed:
            await websocket.close(code=4004)
            return
        await websocket.accept()
        session.clients.append(websocket)
        await websocket.send_text(json.dumps(session.init_frame()))
        if not session.lockstep and session._loop_task is None:
            session._loop_task = asyncio.create_task(session.run_paced())
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    doc = json.loads(raw)
                    if session.lockstep:
                        frame = session.consume_frame(doc)
                        if frame is not None:
                            frames = session.tick(frame)
                            await session.broadcast(frames)
                    else:
                        async with session._lock:
                            session.mailbox = doc
                except (json.JSONDecodeError, SchemaError) as exc:
                    await websocket.send_text(json.dumps({
                        "v": WIRE_SCHEMA_VERSION, "type": "event",
                        "event": "error", "detail": str(exc)}))
        except WebSocketDisconnect:
            pass
        finally:
            if websocket in session.clients:
                session.clients.remove(websocket)
            if session.lockstep:
                session.flush()

    return app


def serve(config: ServerConfig, host: str = "127.0.0.1", port: int = 8765) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=port, log_level="warning")
