"""Staged assistance policy: grasp-target selection and rotation blending
while reaching, autonomous completion of the final approach, and
axis-alignment rotation assistance while interacting with a held object.

The controller owns the stage machine

    GRASPING -> AUTO_GRASP -> INTERACTION -> DONE

(with GRASPING -> INTERACTION when assistance is off and the operator grasps
manually). It never touches translation outside AUTO_GRASP and never rotates
an idle operator's wrist: every emitted rotation step is capped by
``omega_max`` and, outside AUTO_GRASP, by ``kappa * |u_h|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import (
    AlignmentConstraint,
    OrientedBox,
    Pose,
    ValidationError,
    flip_about_approach,
    geodesic_distance,
    quat_identity,
    quat_from_matrix,
    quat_inverse,
    quat_multiply,
    rotate_towards,
    solve_alignment,
)
from .graph import InteractionGraph, grasp_stage_goals, interaction_stage_goals
from .inference import (
    GRASPING as TAG_GRASPING,
    INTERACTION as TAG_INTERACTION,
    CostParams,
    GoalBelief,
    InputSample,
    argmax_goal,
    reset_belief,
    update_belief,
)


class StageKind(str, Enum):
    GRASPING = "grasping"
    AUTO_GRASP = "auto_grasp"
    INTERACTION = "interaction"
    DONE = "done"


# Observed stage transitions must stay inside this relation. The direct
# GRASPING -> INTERACTION hop exists only for the no-assist method, where the
# operator closes the gripper manually and AUTO_GRASP never runs.
LEGAL_TRANSITIONS = {
    (StageKind.GRASPING, StageKind.GRASPING),
    (StageKind.GRASPING, StageKind.AUTO_GRASP),
    (StageKind.GRASPING, StageKind.INTERACTION),
    (StageKind.AUTO_GRASP, StageKind.AUTO_GRASP),
    (StageKind.AUTO_GRASP, StageKind.INTERACTION),
    (StageKind.INTERACTION, StageKind.INTERACTION),
    (StageKind.INTERACTION, StageKind.DONE),
    (StageKind.DONE, StageKind.DONE),
}

METHOD_FULL = "assisted"        # graph-filtered goals, full assistance
METHOD_UNFILTERED = "unfiltered"  # assistance without graph filtering
METHOD_TELEOP = "teleop"        # no assistance at all
METHODS = (METHOD_FULL, METHOD_UNFILTERED, METHOD_TELEOP)

GRIPPER_CLOSE = "close"
GRIPPER_OPEN = "open"


@dataclass(frozen=True)
class GraspCandidate:
    """One candidate gripper pose (+Z approach), opening width and quality."""

    pose: Pose
    width: float
    score: float = 0.0

    def __post_init__(self):
        if self.width <= 0:
            raise ValidationError("grasp width must be positive")


@dataclass(frozen=True)
class AssistParams:
    grasps_per_object: int = 8            # kept per object after FPS
    kappa: float = 3.0                    # rad of assist per meter of |u_h|
    omega_max: float = 0.15               # hard cap on any rotation step, rad/tick
    grasp_trigger_radius: float = 0.08    # close press accepted within this of the target
    attach_radius: float = 0.05           # world attaches objects within this
    auto_translation_step: float = 0.01   # m/tick during autonomous approach
    auto_arrive_position: float = 0.002   # arrival: position error below this
    auto_arrive_angle: float = math.radians(1.0)  # arrival: angle error below this
    auto_budget_ticks: int = 600          # autonomous approach must finish within this

    def __post_init__(self):
        values = (self.grasps_per_object, self.kappa, self.omega_max,
                  self.grasp_trigger_radius, self.attach_radius,
                  self.auto_translation_step, self.auto_arrive_position,
                  self.auto_arrive_angle, self.auto_budget_ticks)
        if any(v <= 0 for v in values):
            raise ValidationError("assist parameters must all be positive")


@dataclass(frozen=True)
class StageState:
    kind: StageKind
    entered_tick: int = 0
    # AUTO_GRASP payload: the frozen target pose and the object it belongs to.
    target: Optional[Pose] = None
    object_id: Optional[int] = None
    # INTERACTION payload: what is held and the current assist target object.
    grasped_id: Optional[int] = None
    target_id: Optional[int] = None

    @classmethod
    def initial(cls) -> "StageState":
        return cls(kind=StageKind.GRASPING, entered_tick=0)


@dataclass(frozen=True)
class SceneView:
    """What the controller sees of the world on one tick (pre-step state)."""

    tick: int
    eef: Pose
    centers: dict[int, np.ndarray]
    obbs: dict[int, OrientedBox]
    attached_id: Optional[int] = None
    gripper_closed: bool = False
    success: bool = False


@dataclass(frozen=True)
class UserFrame:
    """The operator's command for one tick: translation plus gripper event."""

    u_h: np.ndarray
    gripper: Optional[str] = None

    def __post_init__(self):
        u = np.asarray(self.u_h, dtype=float)
        if u.shape != (3,) or not np.all(np.isfinite(u)):
            raise ValidationError("u_h must be a finite 3-vector")
        object.__setattr__(self, "u_h", u)
        if self.gripper not in (None, GRIPPER_CLOSE, GRIPPER_OPEN):
            raise ValidationError(f"unknown gripper event {self.gripper!r}")


@dataclass(frozen=True)
class TickCommand:
    """What the world should execute this tick."""

    translation: np.ndarray
    rotation: np.ndarray          # world-frame delta quaternion (wxyz)
    gripper: Optional[str] = None


@dataclass(frozen=True)
class TickResult:
    command: TickCommand
    stage: StageState
    belief: Optional[GoalBelief]
    argmax_id: Optional[int]
    assist_target: Optional[Pose]
    diagnostics: tuple[str, ...] = ()
    failure: Optional[str] = None


@dataclass(frozen=True)
class ControllerConfig:
    method: str = METHOD_FULL
    assist: AssistParams = field(default_factory=AssistParams)
    cost: CostParams = field(default_factory=CostParams)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}")


# ---------------------------------------------------------------------------
# grasp selection
# ---------------------------------------------------------------------------

def sample_grasps_fps(candidates: Sequence[GraspCandidate], m: int) -> list[GraspCandidate]:
    """Greedy farthest-point sampling on grasp positions, seeded from the
    highest-score candidate. Deterministic; ties break toward lower index."""
    cands = list(candidates)
    if not cands:
        raise ValidationError("candidate list must be non-empty")
    if m <= 0:
        raise ValidationError("m must be positive")
    if len(cands) <= m:
        return cands
    positions = np.array([c.pose.position for c in cands])
    seed = int(np.argmax([c.score for c in cands]))
    chosen = [seed]
    min_dist = np.linalg.norm(positions - positions[seed], axis=1)
    while len(chosen) < m:
        nxt = int(np.argmax(min_dist))
        chosen.append(nxt)
        min_dist = np.minimum(min_dist, np.linalg.norm(positions - positions[nxt], axis=1))
    return [cands[i] for i in chosen]


def select_grasp_target(eef: Pose, grasps: Sequence[GraspCandidate]) -> Optional[Pose]:
    """Pick the translationally nearest candidate, then whichever of it and
    its 180°-about-approach flip needs less rotation from the current EEF
    orientation. Returns None when the object has no feasible grasps."""
    if not grasps:
        return None
    dists = [float(np.linalg.norm(g.pose.position - eef.position)) for g in grasps]
    nearest = grasps[int(np.argmin(dists))]
    flipped = flip_about_approach(nearest.pose)
    keep = geodesic_distance(eef.orientation, nearest.pose.orientation)
    flip = geodesic_distance(eef.orientation, flipped.orientation)
    return nearest.pose if keep <= flip else flipped


# ---------------------------------------------------------------------------
# rotation assistance steps
# ---------------------------------------------------------------------------

def assist_rotation_step(current_orientation, target_orientation,
                         u_h, params: AssistParams) -> np.ndarray:
    """World-frame rotation delta toward the target orientation with angle
    min(kappa*|u_h|, omega_max, remaining). Identity while the user is idle."""
    speed = float(np.linalg.norm(u_h))
    if speed == 0.0:
        return quat_identity()
    remaining = geodesic_distance(current_orientation, target_orientation)
    step = min(params.kappa * speed, params.omega_max, remaining)
    if step <= 0.0:
        return quat_identity()
    advanced = rotate_towards(current_orientation, target_orientation, step)
    return quat_multiply(advanced, quat_inverse(current_orientation))


def grasp_assist_step(eef: Pose, target: Pose, u_h, params: AssistParams) -> np.ndarray:
    """Rotation-only assistance toward the selected grasp pose."""
    return assist_rotation_step(eef.orientation, target.orientation, u_h, params)


def auto_grasp_step(eef: Pose, target: Pose,
                    params: AssistParams) -> tuple[np.ndarray, np.ndarray, bool]:
    """Autonomous final approach: capped straight-line translation plus capped
    geodesic rotation toward the frozen target. Returns (translation,
    rotation delta, arrived); arrival means both errors are already inside
    the thresholds, in which case the twist is zero."""
    offset = target.position - eef.position
    dist = float(np.linalg.norm(offset))
    angle = geodesic_distance(eef.orientation, target.orientation)
    if dist < params.auto_arrive_position and angle < params.auto_arrive_angle:
        return np.zeros(3), quat_identity(), True
    translation = offset if dist <= params.auto_translation_step else \
        offset * (params.auto_translation_step / dist)
    advanced = rotate_towards(eef.orientation, target.orientation,
                              min(params.omega_max, angle))
    rotation = quat_multiply(advanced, quat_inverse(eef.orientation))
    return translation, rotation, False


def interaction_assist_target(grasped_obb: OrientedBox, target_obb: OrientedBox,
                              constraints: Sequence[AlignmentConstraint],
                              eef: Pose) -> Optional[Pose]:
    """Orientation-only assist target: the EEF orientation composed with the
    world-frame rotation that best aligns the held object's axes with the
    target's per the constraint set. Position is copied from the EEF."""
    if not constraints:
        return None
    rot = solve_alignment(constraints, grasped_obb.axes, target_obb.axes)
    target_q = quat_multiply(quat_from_matrix(rot), eef.orientation)
    return Pose(eef.position, target_q)


# ---------------------------------------------------------------------------
# the per-tick policy
# ---------------------------------------------------------------------------

ConstraintProvider = Callable[[int, int], list[AlignmentConstraint]]


@dataclass
class ScenePolicy:
    """Static per-episode context the controller consults: candidate grasps,
    the interaction graph, and a (memoizing) constraint provider."""

    graph: InteractionGraph
    grasp_sets: dict[int, list[GraspCandidate]]
    constraint_provider: ConstraintProvider
    _constraint_cache: dict[tuple[int, int], list[AlignmentConstraint]] = field(
        default_factory=dict)

    def constraints(self, grasped_id: int, target_id: int) -> list[AlignmentConstraint]:
        key = (grasped_id, target_id)
        if key not in self._constraint_cache:
            self._constraint_cache[key] = list(self.constraint_provider(*key))
        return self._constraint_cache[key]

    def grasping_goal_ids(self, method: str) -> list[int]:
        if method == METHOD_UNFILTERED:
            return sorted(g for g, grasps in self.grasp_sets.items() if grasps)
        return grasp_stage_goals(self.graph)

    def interaction_goal_ids(self, method: str, grasped_id: int) -> list[int]:
        if method == METHOD_UNFILTERED:
            return sorted(n.id for n in self.graph.nodes if n.id != grasped_id)
        return interaction_stage_goals(self.graph, grasped_id)


def _passthrough(view: SceneView, frame: UserFrame, stage: StageState,
                 belief, diagnostics=()) -> TickResult:
    cmd = TickCommand(translation=frame.u_h, rotation=quat_identity(),
                      gripper=frame.gripper)
    return TickResult(command=cmd, stage=stage, belief=belief,
                      argmax_id=argmax_goal(belief) if belief else None,
                      assist_target=None, diagnostics=tuple(diagnostics))


def _refreshed_belief(belief: Optional[GoalBelief], goal_ids: list[int],
                      tag: str) -> GoalBelief:
    if belief is None or belief.stage_tag != tag or set(belief.log_probs) != set(goal_ids):
        return reset_belief(goal_ids, stage_tag=tag)
    return belief


def controller_tick(stage: StageState, belief: Optional[GoalBelief],
                    policy: ScenePolicy, view: SceneView, frame: UserFrame,
                    config: ControllerConfig) -> TickResult:
    """Advance the shared controller by one tick.

    Pure function of its inputs (the policy's constraint cache only memoizes
    provider results); the session loop owns sequencing. Returns the command
    for the world, the next stage, the updated belief and telemetry fields.
    """
    if stage.kind == StageKind.DONE:
        return _passthrough(view, frame, stage, belief)

    if config.method == METHOD_TELEOP:
        return _teleop_tick(stage, view, frame)

    if stage.kind == StageKind.GRASPING:
        return _grasping_tick(stage, belief, policy, view, frame, config)
    if stage.kind == StageKind.AUTO_GRASP:
        return _auto_grasp_tick(stage, belief, policy, view, frame, config)
    return _interaction_tick(stage, belief, policy, view, frame, config)


def _teleop_tick(stage: StageState, view: SceneView, frame: UserFrame) -> TickResult:
    """No assistance: pass input through, but keep the stage annotation in
    step with what the world reports so telemetry stays comparable."""
    next_stage = stage
    if stage.kind == StageKind.GRASPING and view.attached_id is not None:
        next_stage = StageState(kind=StageKind.INTERACTION, entered_tick=view.tick,
                                grasped_id=view.attached_id)
    elif stage.kind == StageKind.INTERACTION and view.success:
        next_stage = StageState(kind=StageKind.DONE, entered_tick=view.tick)
    cmd = TickCommand(translation=frame.u_h, rotation=quat_identity(),
                      gripper=frame.gripper)
    return TickResult(command=cmd, stage=next_stage, belief=None, argmax_id=None,
                      assist_target=None)


def _grasping_tick(stage, belief, policy, view, frame, config) -> TickResult:
    diagnostics: list[str] = []
    goals = policy.grasping_goal_ids(config.method)
    if not goals:
        return _passthrough(view, frame, stage, None,
                            ["no candidate goals; passing input through"])

    belief = _refreshed_belief(belief, goals, TAG_GRASPING)
    sample = InputSample(eef_position=view.eef.position, u_h=frame.u_h, tick=view.tick)
    belief = update_belief(belief, sample, view.centers, config.cost)
    goal_id = argmax_goal(belief)

    target = select_grasp_target(view.eef, policy.grasp_sets.get(goal_id, []))
    if target is None:
        diagnostics.append(f"goal {goal_id} has no feasible grasps; no assist")
        rotation = quat_identity()
    else:
        rotation = grasp_assist_step(view.eef, target, frame.u_h, config.assist)

    next_stage = stage
    gripper_cmd = None
    if frame.gripper == GRIPPER_CLOSE:
        if target is not None and (np.linalg.norm(view.eef.position - target.position)
                                   <= config.assist.grasp_trigger_radius):
            next_stage = StageState(kind=StageKind.AUTO_GRASP, entered_tick=view.tick,
                                    target=target, object_id=goal_id)
            # Takeover starts on the trigger tick itself.
            return _auto_grasp_tick(next_stage, belief, policy, view, frame, config)
        diagnostics.append("gripper close ignored: no grasp target within trigger radius")
    elif frame.gripper == GRIPPER_OPEN:
        gripper_cmd = GRIPPER_OPEN

    cmd = TickCommand(translation=frame.u_h, rotation=rotation, gripper=gripper_cmd)
    return TickResult(command=cmd, stage=next_stage, belief=belief, argmax_id=goal_id,
                      assist_target=target, diagnostics=tuple(diagnostics))


def _auto_grasp_tick(stage, belief, policy, view, frame, config) -> TickResult:
    if view.attached_id is not None:
        goals = policy.interaction_goal_ids(config.method, view.attached_id)
        next_stage = StageState(kind=StageKind.INTERACTION, entered_tick=view.tick,
                                grasped_id=view.attached_id)
        next_belief = reset_belief(goals, stage_tag=TAG_INTERACTION) if goals else None
        return _interaction_tick(next_stage, next_belief, policy, view, frame, config)

    failure = None
    if view.tick - stage.entered_tick > config.assist.auto_budget_ticks:
        failure = "auto_grasp_timeout"
    translation, rotation, arrived = auto_grasp_step(view.eef, stage.target, config.assist)
    cmd = TickCommand(translation=translation, rotation=rotation,
                      gripper=GRIPPER_CLOSE if arrived else None)
    return TickResult(command=cmd, stage=stage, belief=belief,
                      argmax_id=argmax_goal(belief) if belief else None,
                      assist_target=stage.target, failure=failure)


def _interaction_tick(stage, belief, policy, view, frame, config) -> TickResult:
    if view.success:
        done = StageState(kind=StageKind.DONE, entered_tick=view.tick)
        return _passthrough(view, frame, done, belief)

    diagnostics: list[str] = []
    if view.attached_id != stage.grasped_id:
        return _passthrough(view, frame, stage, belief,
                            ["held object released before task success; no assist"])

    goals = policy.interaction_goal_ids(config.method, stage.grasped_id)
    if not goals:
        return _passthrough(view, frame, stage, None,
                            ["no interaction goals; passing input through"])

    belief = _refreshed_belief(belief, goals, TAG_INTERACTION)
    sample = InputSample(eef_position=view.eef.position, u_h=frame.u_h, tick=view.tick)
    belief = update_belief(belief, sample, view.centers, config.cost)
    goal_id = argmax_goal(belief)
    next_stage = replace(stage, target_id=goal_id)

    constraints = policy.constraints(stage.grasped_id, goal_id)
    target = None
    rotation = quat_identity()
    if not constraints:
        diagnostics.append(f"no alignment constraints for pair "
                           f"({stage.grasped_id}, {goal_id}); no assist")
    else:
        target = interaction_assist_target(view.obbs[stage.grasped_id],
                                           view.obbs[goal_id], constraints, view.eef)
        rotation = assist_rotation_step(view.eef.orientation, target.orientation,
                                        frame.u_h, config.assist)

    cmd = TickCommand(translation=frame.u_h, rotation=rotation, gripper=frame.gripper)
    return TickResult(command=cmd, stage=next_stage, belief=belief, argmax_id=goal_id,
                      assist_target=target, diagnostics=tuple(diagnostics))
