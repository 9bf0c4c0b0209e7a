"""Per-tick telemetry records, canonical state hashing, and JSONL logs.

Floats are serialized via ``repr`` (what ``json`` does natively), which
round-trips float64 exactly, so a replayed episode reproduces hashes
bit-for-bit.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .control import TickResult, UserFrame
from .schemas import TELEMETRY_SCHEMA_VERSION
from .world import World, WorldState


def _vec(v) -> list[float]:
    return [float(c) for c in np.asarray(v, dtype=float)]


def pose_doc(pose) -> dict:
    return {"position": _vec(pose.position), "orientation": _vec(pose.orientation)}


def state_doc(state: WorldState) -> dict:
    """Canonical, JSON-stable document of one world state."""
    return {
        "tick": state.tick,
        "eef": pose_doc(state.eef),
        "gripper_closed": state.gripper_closed,
        "attached": state.attached_id,
        "attach_transform": pose_doc(state.attach_transform)
        if state.attach_transform is not None else None,
        "objects": [[i, pose_doc(state.object_poses[i])]
                    for i in sorted(state.object_poses)],
        "success": [[i, state.success[i]] for i in sorted(state.success)],
    }


def state_hash(state: WorldState) -> str:
    doc = json.dumps(state_doc(state), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(doc.encode("utf-8")).hexdigest()


def tick_record(tick: int, frame: UserFrame, result: TickResult,
                pre_state: WorldState, post_state: WorldState) -> dict:
    belief = None
    if result.belief is not None:
        belief = {str(g): p for g, p in result.belief.probabilities().items()}
    record = {
        "v": TELEMETRY_SCHEMA_VERSION,
        "type": "tick",
        "tick": tick,
        "stage": result.stage.kind.value,
        "u_h": _vec(frame.u_h),
        "gripper": frame.gripper,
        "u_r": _vec(result.command.rotation),
        "belief": belief,
        "argmax": result.argmax_id,
        "eef": pose_doc(pre_state.eef),
        "hash": state_hash(post_state),
    }
    if result.diagnostics:
        record["diag"] = list(result.diagnostics)
    return record


def header_record(scenario_doc: dict, task: Optional[dict], method: str,
                  seed: int, config: dict) -> dict:
    return {
        "v": TELEMETRY_SCHEMA_VERSION,
        "type": "header",
        "scenario": scenario_doc,
        "task": task,
        "method": method,
        "seed": seed,
        "config": config,
    }


def write_jsonl(path, records: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def read_jsonl(path) -> list[dict]:
    out = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
