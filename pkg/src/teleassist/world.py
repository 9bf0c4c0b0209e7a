"""Deterministic tabletop kinematic world: primitive-shaped objects sampled
into point clouds, a free-flying EEF frame, rigid attachment, scripted
operators, and per-task success checkers.

Everything is seeded and side-effect free: (scenario, seed) fully determine
object placement and geometry, and ``world_step`` is a pure function of the
previous state and the tick's commands. The table surface is the z = 0 plane.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .control import GRIPPER_CLOSE, GRIPPER_OPEN, StageKind
from .geometry import (
    OrientedBox,
    Pose,
    obb_from_points,
    quat_from_axis_angle,
    quat_multiply,
    quat_rotate,
    quat_to_matrix,
)
from .graph import ObjectNode
from .schemas import validate_payload

# Surface sampling density for synthesized clouds, points per square meter.
CLOUD_DENSITY = 40000
MIN_CLOUD_POINTS = 200
# Placement rejection budget before the scenario is declared infeasible.
MAX_PLACEMENT_ATTEMPTS = 50
PLACEMENT_MARGIN = 0.02

TASK_PLACE = "place"
TASK_INSERT = "insert"
TASK_HAMMER = "hammer"

# Success tolerances. The hammer orientation bound is the task definition's
# explicit number; the insert uprightness bound interprets "nearly upright".
INSERT_UPRIGHT_TOL = math.radians(15.0)
INSERT_RIM_MARGIN = 0.05
HAMMER_CONTACT_TOL = 0.015
HAMMER_ANGLE_TOL = math.radians(10.0)

_UP = np.array([0.0, 0.0, 1.0])


class ScenarioError(ValueError):
    """The scenario file is invalid or cannot be instantiated."""


# ---------------------------------------------------------------------------
# scenario specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PartSpec:
    kind: str                      # "box" or "cylinder"
    dimensions: tuple[float, ...]  # box: (x, y, z); cylinder: (radius, height)
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ObjectSpec:
    name: str
    parts: tuple[PartSpec, ...]
    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    region: tuple[float, float] = (0.0, 0.0)   # xy randomization half-ranges
    yaw_random: bool = False
    keypoints: dict[str, tuple[float, float, float]] = field(default_factory=dict)


@dataclass(frozen=True)
class Task:
    kind: str
    tool: str
    target: str


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int
    tick_rate: float
    workspace_min: tuple[float, float, float]
    workspace_max: tuple[float, float, float]
    eef_start: Pose
    objects: tuple[ObjectSpec, ...]
    tasks: tuple[Task, ...] = ()
    name: str = ""

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioSpec":
        validate_payload("scenario", doc)
        objects = []
        names = set()
        for obj in doc["objects"]:
            if obj["name"].casefold() in names:
                raise ScenarioError(f"duplicate object name {obj['name']!r}")
            names.add(obj["name"].casefold())
            if obj["shape"] == "composite":
                if "parts" not in obj:
                    raise ScenarioError(f"composite {obj['name']!r} needs parts")
                parts = tuple(PartSpec(p["kind"], tuple(p["dimensions"]),
                                       tuple(p.get("offset", (0, 0, 0))))
                              for p in obj["parts"])
            else:
                if "dimensions" not in obj:
                    raise ScenarioError(f"object {obj['name']!r} needs dimensions")
                parts = (PartSpec(obj["shape"], tuple(obj["dimensions"])),)
            objects.append(ObjectSpec(
                name=obj["name"],
                parts=parts,
                position=tuple(obj["position"]),
                orientation=tuple(obj.get("orientation", (1, 0, 0, 0))),
                region=tuple(obj.get("region", (0, 0))),
                yaw_random=bool(obj.get("yaw_random", False)),
                keypoints={k: tuple(v) for k, v in obj.get("keypoints", {}).items()},
            ))
        tasks = tuple(Task(t["kind"], t["tool"], t["target"])
                      for t in doc.get("tasks", []))
        ws_min = tuple(doc["workspace"]["min"])
        ws_max = tuple(doc["workspace"]["max"])
        if any(a >= b for a, b in zip(ws_min, ws_max)):
            raise ScenarioError("workspace min must be strictly below max")
        eef = doc["eef_start"]
        spec = cls(seed=int(doc["seed"]), tick_rate=float(doc["tick_rate"]),
                   workspace_min=ws_min, workspace_max=ws_max,
                   eef_start=Pose(np.asarray(eef["position"], dtype=float),
                                  np.asarray(eef.get("orientation", (1, 0, 0, 0)), dtype=float)),
                   objects=tuple(objects), tasks=tasks, name=doc.get("name", ""))
        for task in tasks:
            for ref in (task.tool, task.target):
                if ref.casefold() not in names:
                    raise ScenarioError(f"task references unknown object {ref!r}")
        return spec

    @classmethod
    def from_path(cls, path) -> "ScenarioSpec":
        doc = json.loads(Path(path).read_text())
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "name": self.name,
            "seed": self.seed,
            "tick_rate": self.tick_rate,
            "workspace": {"min": list(self.workspace_min), "max": list(self.workspace_max)},
            "eef_start": {"position": [float(c) for c in self.eef_start.position],
                          "orientation": [float(c) for c in self.eef_start.orientation]},
            "objects": [
                {
                    "name": o.name,
                    "shape": "composite" if len(o.parts) > 1 else o.parts[0].kind,
                    **({"parts": [{"kind": p.kind, "dimensions": list(p.dimensions),
                                   "offset": list(p.offset)} for p in o.parts]}
                       if len(o.parts) > 1 else
                       {"dimensions": list(o.parts[0].dimensions)}),
                    "position": list(o.position),
                    "orientation": list(o.orientation),
                    "region": list(o.region),
                    "yaw_random": o.yaw_random,
                    **({"keypoints": {k: list(v) for k, v in o.keypoints.items()}}
                       if o.keypoints else {}),
                }
                for o in self.objects
            ],
            "tasks": [{"kind": t.kind, "tool": t.tool, "target": t.target}
                      for t in self.tasks],
        }


# ---------------------------------------------------------------------------
# point cloud synthesis
# ---------------------------------------------------------------------------

def _sample_box(dims, rng: np.random.Generator) -> np.ndarray:
    sx, sy, sz = dims
    areas = np.array([sy * sz, sy * sz, sx * sz, sx * sz, sx * sy, sx * sy])
    total = float(areas.sum())
    n = max(MIN_CLOUD_POINTS, int(CLOUD_DENSITY * total))
    faces = rng.choice(6, size=n, p=areas / total)
    u = rng.uniform(-0.5, 0.5, size=n)
    v = rng.uniform(-0.5, 0.5, size=n)
    pts = np.empty((n, 3))
    half = np.array([sx, sy, sz]) / 2.0
    for f in range(6):
        idx = faces == f
        axis = f // 2
        side = 1.0 if f % 2 == 0 else -1.0
        others = [a for a in range(3) if a != axis]
        pts[idx, axis] = side * half[axis]
        pts[idx, others[0]] = u[idx] * 2.0 * half[others[0]]
        pts[idx, others[1]] = v[idx] * 2.0 * half[others[1]]
    return pts


def _sample_cylinder(dims, rng: np.random.Generator) -> np.ndarray:
    radius, height = dims
    lateral = 2.0 * math.pi * radius * height
    caps = 2.0 * math.pi * radius * radius
    total = lateral + caps
    n = max(MIN_CLOUD_POINTS, int(CLOUD_DENSITY * total))
    n_lat = int(n * lateral / total)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    pts = np.empty((n, 3))
    pts[:n_lat, 0] = radius * np.cos(theta[:n_lat])
    pts[:n_lat, 1] = radius * np.sin(theta[:n_lat])
    pts[:n_lat, 2] = rng.uniform(-height / 2.0, height / 2.0, size=n_lat)
    n_cap = n - n_lat
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, size=n_cap))
    pts[n_lat:, 0] = r * np.cos(theta[n_lat:])
    pts[n_lat:, 1] = r * np.sin(theta[n_lat:])
    pts[n_lat:, 2] = np.where(rng.uniform(size=n_cap) < 0.5, height / 2.0, -height / 2.0)
    return pts


def sample_object_cloud(spec: ObjectSpec, rng: np.random.Generator) -> np.ndarray:
    """Surface point cloud of an object in its local frame."""
    clouds = []
    for part in spec.parts:
        pts = _sample_box(part.dimensions, rng) if part.kind == "box" \
            else _sample_cylinder(part.dimensions, rng)
        clouds.append(pts + np.asarray(part.offset))
    return np.vstack(clouds)


def _footprint_radius(spec: ObjectSpec) -> float:
    r = 0.0
    for part in spec.parts:
        if part.kind == "box":
            ext = math.hypot(part.dimensions[0], part.dimensions[1]) / 2.0
        else:
            ext = part.dimensions[0]
        r = max(r, math.hypot(part.offset[0], part.offset[1]) + ext)
    return r


# ---------------------------------------------------------------------------
# world
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WorldObject:
    """Static per-object geometry: local-frame cloud, local OBB and catalog
    data. Poses live in WorldState."""

    id: int
    name: str
    spec: ObjectSpec
    cloud_local: np.ndarray
    center_local: np.ndarray
    obb_local: OrientedBox
    long_axis_local: np.ndarray


@dataclass(frozen=True)
class WorldState:
    tick: int
    eef: Pose
    gripper_closed: bool
    attached_id: Optional[int]
    attach_transform: Optional[Pose]
    object_poses: dict[int, Pose]
    success: dict[int, bool]            # task index -> satisfied this tick
    diagnostics: tuple[str, ...] = ()


class World:
    """Holds the immutable scene geometry and implements the kinematics."""

    def __init__(self, spec: ScenarioSpec, objects: Sequence[WorldObject],
                 attach_radius: float = 0.05):
        self.spec = spec
        self.objects = list(objects)
        self.by_id = {o.id: o for o in self.objects}
        self.by_name = {o.name.casefold(): o for o in self.objects}
        self.attach_radius = attach_radius

    # -- queries ------------------------------------------------------------

    def object_center(self, state: WorldState, obj_id: int) -> np.ndarray:
        obj = self.by_id[obj_id]
        return state.object_poses[obj_id].transform_point(obj.center_local)

    def object_obb(self, state: WorldState, obj_id: int) -> OrientedBox:
        obj = self.by_id[obj_id]
        pose = state.object_poses[obj_id]
        rot = quat_to_matrix(pose.orientation)
        return OrientedBox(center=pose.transform_point(obj.obb_local.center),
                           half_extents=obj.obb_local.half_extents,
                           axes=rot @ obj.obb_local.axes)

    def object_cloud(self, state: WorldState, obj_id: int) -> np.ndarray:
        obj = self.by_id[obj_id]
        return state.object_poses[obj_id].transform_points(obj.cloud_local)

    def keypoint(self, state: WorldState, obj_id: int, name: str) -> np.ndarray:
        obj = self.by_id[obj_id]
        if name not in obj.spec.keypoints:
            raise ScenarioError(f"object {obj.name!r} has no keypoint {name!r}")
        return state.object_poses[obj_id].transform_point(obj.spec.keypoints[name])

    def centers(self, state: WorldState) -> dict[int, np.ndarray]:
        return {o.id: self.object_center(state, o.id) for o in self.objects}

    def obbs(self, state: WorldState) -> dict[int, OrientedBox]:
        return {o.id: self.object_obb(state, o.id) for o in self.objects}

    def task_index(self, task: Task) -> int:
        for i, t in enumerate(self.spec.tasks):
            if t == task:
                return i
        raise ScenarioError(f"task {task} is not declared in the scenario")

    # -- stepping -----------------------------------------------------------

    def step(self, state: WorldState, u_h, u_r, gripper: Optional[str] = None) -> WorldState:
        """Advance one tick: translate (clamped to the workspace), rotate,
        handle gripper events, and keep any attached object rigidly locked to
        the EEF and above the table."""
        u_h = np.asarray(u_h, dtype=float)
        diagnostics: list[str] = []
        position = np.clip(state.eef.position + u_h,
                           np.asarray(self.spec.workspace_min),
                           np.asarray(self.spec.workspace_max))
        orientation = quat_multiply(np.asarray(u_r, dtype=float), state.eef.orientation)
        eef = Pose(position, orientation)

        gripper_closed = state.gripper_closed
        attached_id = state.attached_id
        attach_transform = state.attach_transform
        object_poses = dict(state.object_poses)

        if attached_id is not None:
            obj_pose = eef.compose(attach_transform)
            # Keep the held object above the table: lift the EEF by any
            # penetration depth so the rigid transform stays exact.
            lift = self._table_penetration(attached_id, obj_pose)
            if lift > 0.0:
                eef = Pose(eef.position + np.array([0.0, 0.0, lift]), eef.orientation)
                obj_pose = eef.compose(attach_transform)
            object_poses[attached_id] = obj_pose

        if gripper == GRIPPER_CLOSE and not gripper_closed:
            gripper_closed = True
            if attached_id is None:
                candidate = self._nearest_object(eef.position, object_poses)
                if candidate is not None:
                    attached_id = candidate
                    attach_transform = eef.inverse().compose(object_poses[candidate])
                else:
                    diagnostics.append("gripper closed on nothing: no object within "
                                       f"{self.attach_radius} m")
        elif gripper == GRIPPER_OPEN and gripper_closed:
            gripper_closed = False
            attached_id = None
            attach_transform = None

        new_state = WorldState(tick=state.tick + 1, eef=eef,
                               gripper_closed=gripper_closed,
                               attached_id=attached_id,
                               attach_transform=attach_transform,
                               object_poses=object_poses,
                               success={}, diagnostics=tuple(diagnostics))
        success = {i: self.check_success(new_state, t)
                   for i, t in enumerate(self.spec.tasks)}
        return replace(new_state, success=success)

    def _table_penetration(self, obj_id: int, pose: Pose) -> float:
        obb = self.by_id[obj_id].obb_local
        rot = quat_to_matrix(pose.orientation)
        world_obb = OrientedBox(center=pose.transform_point(obb.center),
                                half_extents=obb.half_extents, axes=rot @ obb.axes)
        lowest = float(world_obb.corners()[:, 2].min())
        return -lowest if lowest < 0.0 else 0.0

    def _nearest_object(self, position: np.ndarray,
                        object_poses: dict[int, Pose]) -> Optional[int]:
        best = None
        best_dist = self.attach_radius
        for obj in self.objects:
            cloud = object_poses[obj.id].transform_points(obj.cloud_local)
            dist = float(np.min(np.linalg.norm(cloud - position, axis=1)))
            if dist <= best_dist:
                best, best_dist = obj.id, dist
        return best

    # -- success ------------------------------------------------------------

    def check_success(self, state: WorldState, task: Task) -> bool:
        tool = self.by_name[task.tool.casefold()]
        target = self.by_name[task.target.casefold()]
        released = state.attached_id != tool.id
        tool_center = self.object_center(state, tool.id)
        target_center = self.object_center(state, target.id)

        if task.kind == TASK_PLACE:
            radius = _disc_radius(target.spec)
            horiz = float(np.linalg.norm((tool_center - target_center)[:2]))
            return released and horiz < radius

        if task.kind == TASK_INSERT:
            axis = quat_rotate(state.object_poses[tool.id].orientation,
                               tool.long_axis_local)
            tilt = _line_angle_to_vertical(axis)
            radius, height = _opening_dims(target.spec)
            horiz = float(np.linalg.norm((tool_center - target_center)[:2]))
            base_z = float(target_center[2]) - height / 2.0
            rim_z = float(target_center[2]) + height / 2.0
            inside = (horiz < radius
                      and base_z <= float(tool_center[2]) <= rim_z + INSERT_RIM_MARGIN)
            return released and inside and tilt < INSERT_UPRIGHT_TOL

        if task.kind == TASK_HAMMER:
            head = self.keypoint(state, tool.id, "head_center")
            strike_local = np.asarray(tool.spec.keypoints.get("strike_axis", (0, 1, 0)),
                                      dtype=float)
            strike = quat_rotate(state.object_poses[tool.id].orientation, strike_local)
            peg_top = self.keypoint(state, target.id, "top")
            contact = float(np.linalg.norm(head - peg_top)) < HAMMER_CONTACT_TOL
            return contact and _line_angle_to_vertical(strike) < HAMMER_ANGLE_TOL

        raise ScenarioError(f"unknown task kind {task.kind!r}")


def _line_angle_to_vertical(axis: np.ndarray) -> float:
    """Angle between a line (sign-free direction) and the vertical."""
    axis = np.asarray(axis, dtype=float)
    n = float(np.linalg.norm(axis))
    c = abs(float(np.dot(axis, _UP))) / n
    return math.acos(min(1.0, c))


def _disc_radius(spec: ObjectSpec) -> float:
    part = spec.parts[0]
    return part.dimensions[0] if part.kind == "cylinder" \
        else max(part.dimensions[0], part.dimensions[1]) / 2.0


def _opening_dims(spec: ObjectSpec) -> tuple[float, float]:
    part = spec.parts[0]
    if part.kind == "cylinder":
        return part.dimensions[0], part.dimensions[1]
    return min(part.dimensions[0], part.dimensions[1]) / 2.0, part.dimensions[2]


# ---------------------------------------------------------------------------
# scenario loading
# ---------------------------------------------------------------------------

def load_scenario(spec: ScenarioSpec, seed: Optional[int] = None,
                  attach_radius: float = 0.05) -> tuple[World, WorldState, list[ObjectNode]]:
    """Instantiate a scenario: synthesize seeded point clouds, place objects
    (randomized within their regions, rejection-resampled on overlap), and
    build the grounded object nodes. Deterministic for a fixed seed."""
    seed = spec.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    ws_min = np.asarray(spec.workspace_min)
    ws_max = np.asarray(spec.workspace_max)

    objects: list[WorldObject] = []
    poses: dict[int, Pose] = {}
    placed: list[tuple[np.ndarray, float]] = []
    for idx, ospec in enumerate(spec.objects):
        cloud_local = sample_object_cloud(ospec, rng)
        radius = _footprint_radius(ospec)
        nominal = np.asarray(ospec.position, dtype=float)
        base_q = np.asarray(ospec.orientation, dtype=float)

        for attempt in range(MAX_PLACEMENT_ATTEMPTS + 1):
            offset = np.array([rng.uniform(-ospec.region[0], ospec.region[0]),
                               rng.uniform(-ospec.region[1], ospec.region[1]), 0.0]) \
                if (ospec.region[0] > 0 or ospec.region[1] > 0) else np.zeros(3)
            yaw = rng.uniform(0.0, 2.0 * math.pi) if ospec.yaw_random else 0.0
            position = nominal + offset
            if np.any(position[:2] - radius < ws_min[:2]) or \
               np.any(position[:2] + radius > ws_max[:2]):
                continue
            clash = any(np.linalg.norm(position[:2] - p[:2]) < radius + r + PLACEMENT_MARGIN
                        for p, r in placed)
            if not clash:
                break
        else:
            raise ScenarioError(f"could not place {ospec.name!r} without overlap "
                                f"after {MAX_PLACEMENT_ATTEMPTS} attempts")
        orientation = quat_multiply(quat_from_axis_angle(_UP, yaw), base_q)
        pose = Pose(position, orientation)
        placed.append((position, radius))
        poses[idx] = pose

        obb_local = obb_from_points(cloud_local)
        long_axis = obb_local.axes[:, int(np.argmax(obb_local.half_extents))]
        objects.append(WorldObject(
            id=idx, name=ospec.name, spec=ospec, cloud_local=cloud_local,
            center_local=cloud_local.mean(axis=0), obb_local=obb_local,
            long_axis_local=long_axis))

    world = World(spec, objects, attach_radius=attach_radius)
    state = WorldState(tick=0, eef=spec.eef_start, gripper_closed=False,
                       attached_id=None, attach_transform=None,
                       object_poses=poses, success={})
    state = replace(state, success={i: world.check_success(state, t)
                                    for i, t in enumerate(spec.tasks)})
    nodes = [ObjectNode(id=o.id, name=o.name,
                        center=world.object_center(state, o.id),
                        point_cloud=world.object_cloud(state, o.id))
             for o in objects]
    return world, state, nodes


# ---------------------------------------------------------------------------
# scripted operators
# ---------------------------------------------------------------------------

VARIANT_STRAIGHT = "straight"
VARIANT_WAYPOINT = "waypoint"
VARIANT_IDLE = "idle"
VARIANT_REDIRECT = "redirect"

# The scripted operator presses close when this near the assist target (or
# the object center when unassisted), and releases inside these tolerances.
PRESS_RADIUS = 0.03
PLACE_RELEASE_TOL = 0.03
INSERT_RELEASE_TOL = 0.015
INSERT_RELEASE_TILT = math.radians(12.0)


@dataclass(frozen=True)
class UserConfig:
    variant: str = VARIANT_STRAIGHT
    max_step: float = 0.01
    sigma: float = 0.0
    redirect_tick: int = 0
    waypoints: tuple[tuple[float, float, float], ...] = ()


@dataclass(frozen=True)
class AssistFeedback:
    """What the operator can observe of the assistance: the current stage,
    the believed goal, and where the grasp target marker sits."""

    stage: StageKind = StageKind.GRASPING
    argmax_id: Optional[int] = None
    target_position: Optional[np.ndarray] = None


class ScriptedUser:
    """Translation-only synthetic operator. Emits u_h steps and gripper
    events, never rotations; jitter is seeded and deterministic."""

    def __init__(self, config: UserConfig, task: Optional[Task], seed: int,
                 redirect_task: Optional[Task] = None):
        self.config = config
        self.task = task
        self.redirect_task = redirect_task
        self.rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA51157]))
        self._waypoint_index = 0

    def active_task(self, tick: int) -> Task:
        if (self.config.variant == VARIANT_REDIRECT and self.redirect_task is not None
                and tick >= self.config.redirect_tick):
            return self.redirect_task
        return self.task

    def step(self, world: World, state: WorldState,
             feedback: AssistFeedback) -> tuple[np.ndarray, Optional[str]]:
        cfg = self.config
        if cfg.variant == VARIANT_IDLE:
            return np.zeros(3), None
        if cfg.variant == VARIANT_WAYPOINT:
            return self._waypoint_step(state), None
        if feedback.stage == StageKind.AUTO_GRASP:
            return np.zeros(3), None

        task = self.active_task(state.tick)
        tool = world.by_name[task.tool.casefold()]
        target = world.by_name[task.target.casefold()]

        if feedback.stage == StageKind.GRASPING and state.attached_id is None:
            aim, press_ok = self._grasp_aim(world, state, feedback, tool.id)
            u_h = self._move_toward(state, aim)
            # Pressing is not latched: an ignored press (the assist target
            # moved between ticks) is simply retried on arrival.
            if press_ok and float(np.linalg.norm(state.eef.position - aim)) < PRESS_RADIUS:
                return u_h, GRIPPER_CLOSE
            return u_h, None

        # Interaction: steer the held object's task point onto the target,
        # releasing when the task allows it.
        held = state.attached_id
        if held is None:
            return np.zeros(3), None
        desired_obj, release_ok = self._interaction_goal(world, state, task,
                                                         tool.id, target.id)
        carried_point = self._carried_point(world, state, task, held)
        aim = desired_obj + (state.eef.position - carried_point)
        u_h = self._move_toward(state, aim)
        error = float(np.linalg.norm(carried_point - desired_obj))
        if release_ok and error < release_ok:
            return u_h, GRIPPER_OPEN
        return u_h, None

    def _grasp_aim(self, world, state, feedback, tool_id) -> tuple[np.ndarray, bool]:
        if feedback.argmax_id == tool_id and feedback.target_position is not None:
            return np.asarray(feedback.target_position, dtype=float), True
        center = world.object_center(state, tool_id)
        # Unassisted: head for the object itself and grab it there.
        press_ok = feedback.target_position is None
        return center, press_ok

    def _carried_point(self, world, state, task, held_id) -> np.ndarray:
        if task.kind == TASK_HAMMER and "head_center" in world.by_id[held_id].spec.keypoints:
            return world.keypoint(state, held_id, "head_center")
        return world.object_center(state, held_id)

    def _interaction_goal(self, world, state, task, tool_id,
                          target_id) -> tuple[np.ndarray, Optional[float]]:
        target_center = world.object_center(state, target_id)
        target_spec = world.by_id[target_id].spec
        if task.kind == TASK_PLACE:
            top_z = float(target_center[2]) + target_spec.parts[0].dimensions[-1] / 2.0
            goal = np.array([target_center[0], target_center[1], top_z + 0.03])
            return goal, PLACE_RELEASE_TOL
        if task.kind == TASK_INSERT:
            radius, height = _opening_dims(target_spec)
            tool = world.by_id[tool_id]
            half_len = float(tool.obb_local.half_extents.max())
            base_z = float(target_center[2]) - height / 2.0
            goal = np.array([target_center[0], target_center[1],
                             base_z + half_len + 0.005])
            axis = quat_rotate(state.object_poses[tool_id].orientation,
                               tool.long_axis_local)
            upright = _line_angle_to_vertical(axis) < INSERT_RELEASE_TILT
            return goal, INSERT_RELEASE_TOL if upright else None
        if task.kind == TASK_HAMMER:
            peg_top = world.keypoint(state, target_id, "top")
            return peg_top + np.array([0.0, 0.0, 0.003]), None
        raise ScenarioError(f"unknown task kind {task.kind!r}")

    def _waypoint_step(self, state: WorldState) -> np.ndarray:
        if self._waypoint_index >= len(self.config.waypoints):
            return np.zeros(3)
        goal = np.asarray(self.config.waypoints[self._waypoint_index], dtype=float)
        if float(np.linalg.norm(goal - state.eef.position)) < 1e-3:
            self._waypoint_index += 1
            return self._waypoint_step(state)
        return self._move_toward(state, goal)

    def _move_toward(self, state: WorldState, goal: np.ndarray) -> np.ndarray:
        offset = goal - state.eef.position
        dist = float(np.linalg.norm(offset))
        step = offset if dist <= self.config.max_step else \
            offset * (self.config.max_step / dist)
        if self.config.sigma > 0.0:
            step = step + self.rng.normal(0.0, self.config.sigma, size=3)
            norm = float(np.linalg.norm(step))
            if norm > self.config.max_step:
                step = step * (self.config.max_step / norm)
        return step


def scripted_user_step(user: ScriptedUser, world: World, state: WorldState,
                       feedback: Optional[AssistFeedback] = None):
    """One operator tick: (u_h, gripper event or None)."""
    return user.step(world, state, feedback or AssistFeedback())
