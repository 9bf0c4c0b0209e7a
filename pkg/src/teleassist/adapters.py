"""Boundary contracts for the three external capabilities the engine
consumes: interaction-triplet extraction, axis-constraint prediction, and
grasp candidate generation. Each has a deterministic fixture backend and a
live HTTP backend, plus the pinhole grounding math that turns masks and
depth into world-frame point clouds.

Fixture mode is the acceptance path (bit-reproducible); live mode speaks an
OpenAI-compatible chat-completions endpoint with JSON-schema-constrained
responses and is explicitly best-effort on semantics.
"""

from __future__ import annotations

import io
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .control import GraspCandidate
from .geometry import (
    AlignmentConstraint,
    OrientedBox,
    Pose,
    ValidationError,
    quat_from_matrix,
)
from .graph import ObjectNode
from .schemas import SchemaError, validate_payload

MAX_GRIPPER_WIDTH = 0.08     # m, parallel-jaw opening
MIN_DENSE_GRASPS = 16        # analytic sampler emits at least this many when feasible
WIDTH_MARGIN = 0.005         # jaw clearance added to the spanned extent
SPHERE_LIKE_RATIO = 1.10     # extents within this ratio are treated as a sphere

ENV_ENDPOINT = "TELEASSIST_VLM_ENDPOINT"
ENV_API_KEY = "TELEASSIST_VLM_API_KEY"
ENV_MODEL = "TELEASSIST_VLM_MODEL"

SCHEMA_RETRIES = 2

# Axis-overlay color legend used on constraint-prompt renders.
AXIS_COLORS = {"X": (220, 40, 40), "Y": (40, 180, 40), "Z": (40, 80, 220)}


class AdapterError(RuntimeError):
    """An adapter call failed after retries; carries the raw transcript."""

    def __init__(self, message: str, transcript: Optional[str] = None):
        super().__init__(message)
        self.transcript = transcript


class DegenerateGroundingError(ValueError):
    """A mask had no valid depth to back-project."""


@dataclass(frozen=True)
class AdapterResponse:
    payload: Any
    provenance: str
    latency_ms: float
    transcript: Optional[str] = None


@dataclass(frozen=True)
class SceneDescription:
    """RGB-D observation bundle: image (or path), per-object masks, metric
    depth, pinhole intrinsics and camera-to-world extrinsics."""

    depth: np.ndarray
    intrinsics: tuple[float, float, float, float]   # fx, fy, cx, cy (pixels)
    extrinsics: Pose
    rgb: Optional[np.ndarray] = None
    masks: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        depth = np.asarray(self.depth, dtype=float)
        if depth.ndim != 2:
            raise ValidationError("depth must be a 2D grid")
        object.__setattr__(self, "depth", depth)
        for name, mask in self.masks.items():
            if np.asarray(mask).shape != depth.shape:
                raise ValidationError(f"mask {name!r} does not match the depth grid")


# ---------------------------------------------------------------------------
# pinhole grounding
# ---------------------------------------------------------------------------

def ground_mask(scene: SceneDescription, mask) -> tuple[np.ndarray, np.ndarray]:
    """Back-project a boolean mask through the depth grid into the world
    frame. Returns (centroid, point cloud); pixels with non-positive or
    non-finite depth are skipped."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != scene.depth.shape:
        raise ValidationError("mask shape does not match depth")
    if not mask.any():
        raise ValidationError("mask is empty")
    fx, fy, cx, cy = scene.intrinsics
    if fx <= 0 or fy <= 0:
        raise ValidationError("focal lengths must be positive")
    vv, uu = np.nonzero(mask)
    z = scene.depth[vv, uu]
    valid = np.isfinite(z) & (z > 0)
    if not valid.any():
        raise DegenerateGroundingError("no valid depth under the mask")
    uu, vv, z = uu[valid], vv[valid], z[valid]
    cam = np.stack([(uu - cx) * z / fx, (vv - cy) * z / fy, z], axis=1)
    world = scene.extrinsics.transform_points(cam)
    return world.mean(axis=0), world


# ---------------------------------------------------------------------------
# fixture backend
# ---------------------------------------------------------------------------

class FixtureStore:
    """Deterministic adapter backend serving authored/recorded responses from
    a fixture directory: ``triplets.json``, ``constraints.json`` and an
    optional ``grasps.json``. Payloads are schema-validated on every read, so
    identical inputs yield byte-identical responses."""

    def __init__(self, root):
        self.root = Path(root)
        if not self.root.is_dir():
            raise AdapterError(f"fixture directory {self.root} does not exist")

    def _load(self, name: str, kind: str) -> tuple[dict, str]:
        path = self.root / name
        if not path.is_file():
            raise AdapterError(f"fixture file {path} is missing")
        raw = path.read_text()
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise AdapterError(f"fixture {path} is not valid JSON: {exc}",
                               transcript=raw) from exc
        try:
            validate_payload(kind, doc)
        except SchemaError as exc:
            raise AdapterError(f"fixture {path}: {exc}", transcript=raw) from exc
        return doc, str(path)

    def triplets(self) -> AdapterResponse:
        t0 = time.perf_counter()
        doc, path = self._load("triplets.json", "triplets")
        return AdapterResponse(payload=doc, provenance=path,
                               latency_ms=(time.perf_counter() - t0) * 1e3)

    def constraints(self, name_a: str, name_b: str) -> AdapterResponse:
        t0 = time.perf_counter()
        doc, path = self._load("constraints.json", "constraint_fixture")
        a, b = name_a.casefold(), name_b.casefold()
        for pair in doc["pairs"]:
            if pair["a"].casefold() == a and pair["b"].casefold() == b:
                payload = {"constraints": pair["constraints"]}
                return AdapterResponse(payload=payload, provenance=f"{path}#{a}->{b}",
                                       latency_ms=(time.perf_counter() - t0) * 1e3)
        # Pair never recorded: the model offered no constraints -> no assist.
        return AdapterResponse(payload={"constraints": []},
                               provenance=f"{path}#{a}->{b}:absent",
                               latency_ms=(time.perf_counter() - t0) * 1e3)

    def grasps(self, name: str) -> Optional[AdapterResponse]:
        path = self.root / "grasps.json"
        if not path.is_file():
            return None
        t0 = time.perf_counter()
        doc, path_str = self._load("grasps.json", "grasp_fixture")
        folded = name.casefold()
        for entry in doc["objects"]:
            if entry["name"].casefold() == folded:
                return AdapterResponse(payload=entry, provenance=f"{path_str}#{folded}",
                                       latency_ms=(time.perf_counter() - t0) * 1e3)
        return None


# ---------------------------------------------------------------------------
# live backend (OpenAI-compatible chat completions)
# ---------------------------------------------------------------------------

_TRIPLET_PROMPT = (
    "You see a tabletop workspace. List only the functionally relevant objects "
    "and every functional interaction between them as (a, verb, b) triplets, "
    "where object a acts on object b. Respond with JSON only."
)

_CONSTRAINT_PROMPT = (
    "Two objects are shown with their canonical axes overlaid (X red, Y green, "
    "Z blue, orthographic projection). The first object will be held and used "
    "on the second. Which axes of the held object should be aligned (sign 1) "
    "or anti-aligned (sign -1) with which axes of the target for the "
    "interaction to succeed? Respond with JSON only."
)


class VlmClient:
    """Live adapter backend. Configuration comes from the environment unless
    passed explicitly; schema violations are retried with the violation
    appended to the follow-up prompt, then raised as AdapterError."""

    def __init__(self, endpoint: Optional[str] = None, api_key: Optional[str] = None,
                 model: Optional[str] = None, timeout: float = 30.0,
                 retries: int = SCHEMA_RETRIES, session=None):
        self.endpoint = endpoint or os.environ.get(ENV_ENDPOINT)
        self.api_key = api_key or os.environ.get(ENV_API_KEY)
        self.model = model or os.environ.get(ENV_MODEL)
        self.timeout = timeout
        self.retries = retries
        if session is None:
            import requests
            session = requests.Session()
        self._session = session
        if not self.endpoint or not self.model:
            raise AdapterError(
                f"live adapter needs {ENV_ENDPOINT} and {ENV_MODEL} configured")

    def _chat(self, prompt: str, images: list[bytes], schema_kind: str,
              schema_name: str) -> AdapterResponse:
        import base64

        content: list[dict] = [{"type": "text", "text": prompt}]
        for img in images:
            b64 = base64.b64encode(img).decode("ascii")
            content.append({"type": "image_url",
                            "image_url": {"url": f"data:image/png;base64,{b64}"}})
        messages = [{"role": "user", "content": content}]
        transcript_parts: list[str] = []
        last_error = "no attempts made"
        for _ in range(self.retries + 1):
            body = {
                "model": self.model,
                "messages": messages,
                "response_format": {"type": "json_object"},
            }
            headers = {"Content-Type": "application/json"}
            if self.api_key:
                headers["Authorization"] = f"Bearer {self.api_key}"
            t0 = time.perf_counter()
            resp = self._session.post(f"{self.endpoint.rstrip('/')}/chat/completions",
                                      json=body, headers=headers, timeout=self.timeout)
            latency = (time.perf_counter() - t0) * 1e3
            resp.raise_for_status()
            raw = resp.json()["choices"][0]["message"]["content"]
            transcript_parts.append(raw)
            try:
                doc = json.loads(raw)
                validate_payload(schema_kind, doc)
                return AdapterResponse(payload=doc, provenance=f"{self.endpoint}:{self.model}",
                                       latency_ms=latency, transcript="\n".join(transcript_parts))
            except (json.JSONDecodeError, SchemaError) as exc:
                last_error = str(exc)
                messages.append({"role": "assistant", "content": raw})
                messages.append({"role": "user", "content":
                                 f"That response violated the {schema_name} schema: "
                                 f"{last_error}. Respond again with valid JSON only."})
        raise AdapterError(f"schema violation after {self.retries + 1} attempts: {last_error}",
                           transcript="\n".join(transcript_parts))

    def triplets(self, image: Optional[bytes] = None) -> AdapterResponse:
        return self._chat(_TRIPLET_PROMPT, [image] if image else [],
                          "triplets", "triplet response")

    def constraints(self, render_a: bytes, render_b: bytes,
                    name_a: str = "", name_b: str = "") -> AdapterResponse:
        prompt = _CONSTRAINT_PROMPT
        if name_a and name_b:
            prompt += f" The held object is a {name_a}; the target is a {name_b}."
        return self._chat(prompt, [render_a, render_b], "constraints",
                          "constraint response")


# ---------------------------------------------------------------------------
# adapter operations
# ---------------------------------------------------------------------------

def extract_triplets(source) -> tuple[list[str], list[tuple[str, str, str]]]:
    """Object names and (a, verb, b) triplets from a fixture store or live
    client. The payload is schema-validated before anything is returned."""
    response = source.triplets()
    doc = response.payload
    names = [str(n) for n in doc["objects"]]
    triplets = [(t["a"], t["verb"], t["b"]) for t in doc["triplets"]]
    return names, triplets


def parse_constraints(payload: dict) -> list[AlignmentConstraint]:
    validate_payload("constraints", payload)
    return [AlignmentConstraint.from_names(c["axis_a"], c["axis_b"], c["sign"])
            for c in payload["constraints"]]


def extract_constraints(source, name_a: str, name_b: str,
                        render_a: Optional[bytes] = None,
                        render_b: Optional[bytes] = None) -> list[AlignmentConstraint]:
    """Alignment constraints for a (held, target) object pair. An empty list
    is a valid answer and means "no assistance for this pair"."""
    if isinstance(source, FixtureStore):
        response = source.constraints(name_a, name_b)
    else:
        response = source.constraints(render_a or b"", render_b or b"", name_a, name_b)
    return parse_constraints(response.payload)


def grasps_from_fixture(entry: dict) -> list[GraspCandidate]:
    return [
        GraspCandidate(pose=Pose(np.asarray(g["position"], dtype=float),
                                 np.asarray(g["quaternion"], dtype=float)),
                       width=float(g["width"]), score=float(g["score"]))
        for g in entry["grasps"]
    ]


def generate_grasps(node: ObjectNode, max_width: float = MAX_GRIPPER_WIDTH,
                    fixture: Optional[FixtureStore] = None) -> list[GraspCandidate]:
    """Candidate grasps for an object.

    Fixture mode returns recorded poses when the store has an entry for this
    object. Otherwise grasps are sampled analytically on the oriented box:
    antipodal pinches approaching along the two shortest axes, jaws spanning
    the remaining short extent, slid along the long axis. Objects too wide
    for the gripper in every direction yield an empty list (the controller's
    no-assist path), not an error.
    """
    if fixture is not None:
        entry = fixture.grasps(node.name)
        if entry is not None:
            return grasps_from_fixture(entry.payload)
    obb = node.obb
    order = np.argsort(obb.half_extents)[::-1]
    long_i, mid_i, short_i = (int(i) for i in order)
    extents = obb.half_extents

    # Near-equal extents: no meaningful long axis. Approach from above by
    # convention, jaws across the smallest extent, fanned about vertical.
    if extents[long_i] <= extents[short_i] * SPHERE_LIKE_RATIO:
        span = 2.0 * extents[short_i]
        if span > max_width:
            return []
        out = []
        for j in range(MIN_DENSE_GRASPS):
            theta = 2.0 * math.pi * j / MIN_DENSE_GRASPS
            close_dir = np.array([math.cos(theta), math.sin(theta), 0.0])
            approach = np.array([0.0, 0.0, -1.0])
            rot = np.column_stack([close_dir, np.cross(approach, close_dir), approach])
            out.append(GraspCandidate(
                pose=Pose(obb.center, quat_from_matrix(rot)),
                width=min(span + WIDTH_MARGIN, max_width),
                score=1.0 - 0.5 * j / MIN_DENSE_GRASPS))
        return out

    feasible_dirs = []
    for approach_i, close_i in ((mid_i, short_i), (short_i, mid_i)):
        span = 2.0 * extents[close_i]
        if span <= max_width:
            for sign in (1.0, -1.0):
                feasible_dirs.append((approach_i, close_i, sign))
    if not feasible_dirs:
        return []

    per_line = max(5, -(-MIN_DENSE_GRASPS // len(feasible_dirs)))
    long_axis = obb.axis(long_i)
    out = []
    for approach_i, close_i, sign in feasible_dirs:
        approach = -sign * obb.axis(approach_i)
        close_dir = obb.axis(close_i)
        rot = np.column_stack([close_dir, np.cross(approach, close_dir), approach])
        q = quat_from_matrix(rot)
        span = 2.0 * extents[close_i]
        for t in np.linspace(-0.8, 0.8, per_line):
            position = obb.center + t * extents[long_i] * long_axis
            out.append(GraspCandidate(
                pose=Pose(position, q),
                width=min(span + WIDTH_MARGIN, max_width),
                score=1.0 - 0.5 * abs(float(t))))
    return out


def render_axis_overlay(obb: OrientedBox, cloud: np.ndarray, size: int = 256) -> bytes:
    """Orthographic top-down sketch of an object with its canonical axes
    drawn in the fixed color legend (X red, Y green, Z blue). PNG bytes."""
    from PIL import Image, ImageDraw

    pts = np.asarray(cloud, dtype=float)
    xy = pts[:, :2]
    lo = xy.min(axis=0)
    hi = xy.max(axis=0)
    span = max(float(np.max(hi - lo)), 1e-3) * 1.4

    def to_px(p):
        centered = (np.asarray(p[:2]) - (lo + hi) / 2.0) / span + 0.5
        return (int(centered[0] * (size - 1)), int((1.0 - centered[1]) * (size - 1)))

    img = Image.new("RGB", (size, size), (255, 255, 255))
    draw = ImageDraw.Draw(img)
    for p in pts[:: max(1, len(pts) // 800)]:
        px = to_px(p)
        draw.point(px, fill=(120, 120, 120))
    origin = to_px(obb.center)
    for i, name in enumerate(("X", "Y", "Z")):
        tip = obb.center + obb.axis(i) * obb.half_extents[i] * 1.3
        draw.line([origin, to_px(tip)], fill=AXIS_COLORS[name], width=3)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
