"""Headless episode harness: wires the world, the perception adapters, the
shared controller and a scripted operator into one deterministic loop, and
re-executes logged episodes for verification.

The same ``EpisodeRunner.tick`` drives both this harness and the live session
service, which is what makes wire-driven runs hash-identical to headless ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import assets
from .adapters import FixtureStore, extract_constraints, extract_triplets, generate_grasps
from .control import (
    AssistParams,
    ControllerConfig,
    GoalBelief,
    GraspCandidate,
    ScenePolicy,
    SceneView,
    StageKind,
    StageState,
    TickResult,
    UserFrame,
    controller_tick,
    sample_grasps_fps,
)
from .geometry import ValidationError
from .graph import InteractionGraph, build_graph
from .inference import CostParams
from .telemetry import header_record, read_jsonl, state_hash, tick_record, write_jsonl
from .world import (
    AssistFeedback,
    ScenarioSpec,
    ScriptedUser,
    Task,
    UserConfig,
    World,
    WorldState,
    load_scenario,
)

DEFAULT_TICK_BUDGET = 3000


@dataclass(frozen=True)
class EpisodeConfig:
    method: str = "assisted"
    assist: AssistParams = field(default_factory=AssistParams)
    cost: CostParams = field(default_factory=CostParams)
    adapter_mode: str = "fixture"
    fixture_dir: Optional[str] = None
    tick_budget: int = DEFAULT_TICK_BUDGET

    def controller(self) -> ControllerConfig:
        return ControllerConfig(method=self.method, assist=self.assist, cost=self.cost)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "assist": {k: getattr(self.assist, k) for k in
                       ("grasps_per_object", "kappa", "omega_max", "grasp_trigger_radius",
                        "attach_radius", "auto_translation_step", "auto_arrive_position",
                        "auto_arrive_angle", "auto_budget_ticks")},
            "cost": {k: getattr(self.cost, k) for k in ("c0", "delta", "k", "b", "eta")},
            "adapter_mode": self.adapter_mode,
            "tick_budget": self.tick_budget,
        }


@dataclass
class TaskContext:
    """Everything an episode or live session needs, built once per seed."""

    spec: ScenarioSpec
    seed: int
    world: World
    state: WorldState
    graph: InteractionGraph
    policy: ScenePolicy
    config: EpisodeConfig


def _constraint_provider(source, graph: InteractionGraph) -> Callable:
    def provider(grasped_id: int, target_id: int):
        name_a = graph.node(grasped_id).name
        name_b = graph.node(target_id).name
        return extract_constraints(source, name_a, name_b)
    return provider


def build_task_context(spec: ScenarioSpec, config: EpisodeConfig,
                       seed: Optional[int] = None) -> TaskContext:
    """Load the world and ground it through the adapters: triplets build the
    interaction graph, the grasp generator is sampled down per object, and
    constraints are served lazily (memoized per object pair)."""
    if config.adapter_mode != "fixture":
        raise ValidationError("headless episodes support fixture adapter mode only; "
                              "live mode is for interactive sessions")
    fixture_dir = config.fixture_dir or str(assets.fixture_dir("tabletop_six"))
    source = FixtureStore(fixture_dir)
    seed = spec.seed if seed is None else seed
    world, state, nodes = load_scenario(spec, seed=seed,
                                        attach_radius=config.assist.attach_radius)
    _, triplets = extract_triplets(source)
    graph = build_graph(nodes, triplets)

    grasp_sets: dict[int, list[GraspCandidate]] = {}
    for node in graph.nodes:
        dense = generate_grasps(node, fixture=source)
        grasp_sets[node.id] = sample_grasps_fps(dense, config.assist.grasps_per_object) \
            if dense else []

    policy = ScenePolicy(graph=graph, grasp_sets=grasp_sets,
                         constraint_provider=_constraint_provider(source, graph))
    return TaskContext(spec=spec, seed=seed, world=world, state=state,
                       graph=graph, policy=policy, config=config)


class EpisodeRunner:
    """Owns one episode's mutable loop state and advances it tick by tick."""

    def __init__(self, context: TaskContext, task: Optional[Task]):
        self.context = context
        self.world = context.world
        self.state = context.state
        self.task = task
        self.task_index = self.world.task_index(task) if task is not None else None
        self.stage = StageState.initial()
        self.belief: Optional[GoalBelief] = None
        self.records: list[dict] = []
        self.failure: Optional[str] = None
        self._controller_cfg = context.config.controller()

    # -- per-tick -----------------------------------------------------------

    def view(self) -> SceneView:
        success = bool(self.state.success.get(self.task_index, False)) \
            if self.task_index is not None else False
        return SceneView(tick=self.state.tick, eef=self.state.eef,
                         centers=self.world.centers(self.state),
                         obbs=self.world.obbs(self.state),
                         attached_id=self.state.attached_id,
                         gripper_closed=self.state.gripper_closed,
                         success=success)

    def tick(self, frame: UserFrame) -> TickResult:
        view = self.view()
        result = controller_tick(self.stage, self.belief, self.context.policy,
                                 view, frame, self._controller_cfg)
        pre_state = self.state
        self.state = self.world.step(pre_state, result.command.translation,
                                     result.command.rotation, result.command.gripper)
        self.stage = result.stage
        self.belief = result.belief
        if result.failure and self.failure is None:
            self.failure = result.failure
        self.records.append(tick_record(pre_state.tick, frame, result,
                                        pre_state, self.state))
        return result

    def feedback(self, result: Optional[TickResult]) -> AssistFeedback:
        if result is None:
            return AssistFeedback()
        return AssistFeedback(
            stage=result.stage.kind,
            argmax_id=result.argmax_id,
            target_position=result.assist_target.position
            if result.assist_target is not None else None)

    @property
    def done(self) -> bool:
        return self.stage.kind == StageKind.DONE

    @property
    def succeeded(self) -> bool:
        return self.task_index is not None and \
            bool(self.state.success.get(self.task_index, False))


@dataclass(frozen=True)
class EpisodeReport:
    task: Optional[Task]
    method: str
    seed: int
    success: bool
    reason: str
    ticks: int
    time_s: float
    trajectory_length: float
    input_count: int
    stage_sequence: tuple[str, ...]
    final_hash: str
    records: tuple[dict, ...]

    def to_row(self) -> dict:
        return {
            "task": self.task.kind if self.task is not None else "none",
            "method": self.method,
            "seed": self.seed,
            "success": self.success,
            "time_s": self.time_s,
            "trajectory_m": self.trajectory_length,
            "inputs": self.input_count,
            "ticks": self.ticks,
            "reason": self.reason,
        }

    def write_telemetry(self, path) -> None:
        write_jsonl(path, self.records)


def _metrics(records) -> tuple[float, int]:
    # Path length over the logged pre-step positions; replay recomputation
    # from a telemetry file uses the same convention.
    trajectory = 0.0
    inputs = 0
    prev = None
    for rec in records:
        if rec["type"] != "tick":
            continue
        pos = np.asarray(rec["eef"]["position"])
        if prev is not None:
            trajectory += float(np.linalg.norm(pos - prev))
        prev = pos
        if float(np.linalg.norm(rec["u_h"])) > 0.0:
            inputs += 1
        if rec["gripper"] is not None:
            inputs += 1
    return trajectory, inputs


def _stage_sequence(records) -> tuple[str, ...]:
    seq: list[str] = []
    for rec in records:
        if rec["type"] == "tick" and (not seq or seq[-1] != rec["stage"]):
            seq.append(rec["stage"])
    return tuple(seq)


def run_episode(spec: ScenarioSpec, task: Optional[Task], config: EpisodeConfig,
                user_config: UserConfig, seed: int,
                redirect_task: Optional[Task] = None) -> EpisodeReport:
    """Run one scripted episode to success, failure or budget exhaustion.
    A redirecting operator is scored against the task they switch to."""
    context = build_task_context(spec, config, seed=seed)
    runner = EpisodeRunner(context, redirect_task if redirect_task is not None else task)
    user = ScriptedUser(user_config, task, seed=seed, redirect_task=redirect_task)

    task_doc = {"kind": task.kind, "tool": task.tool, "target": task.target} \
        if task is not None else None
    header = header_record(spec.to_dict(), task_doc, config.method, seed,
                           config.to_dict())
    result: Optional[TickResult] = None
    reason = "tick budget exhausted"
    for _ in range(config.tick_budget):
        u_h, gripper = user.step(context.world, runner.state, runner.feedback(result))
        result = runner.tick(UserFrame(u_h=u_h, gripper=gripper))
        if runner.failure is not None:
            reason = runner.failure
            break
        if runner.done:
            reason = "task complete"
            break

    # The EEF trajectory plus active-input ticks and gripper events.
    records = [header] + runner.records
    trajectory, inputs = _metrics(records)
    success = runner.succeeded and runner.failure is None
    return EpisodeReport(
        task=task, method=config.method, seed=seed, success=success,
        reason=reason if not success else "task complete",
        ticks=runner.state.tick,
        time_s=runner.state.tick / spec.tick_rate,
        trajectory_length=trajectory, input_count=inputs,
        stage_sequence=_stage_sequence(records),
        final_hash=state_hash(runner.state),
        records=tuple(records))


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReplayReport:
    match: bool
    ticks_checked: int
    first_divergence: Optional[int]
    belief_series: tuple[dict, ...]   # per tick: {"tick", "argmax", goal_id: prob}

    def belief_csv_rows(self) -> list[dict]:
        return [dict(row) for row in self.belief_series]


def replay_records(records: list[dict]) -> ReplayReport:
    """Re-execute an episode from its logged inputs and compare per-tick
    state hashes. Divergence reports the first mismatching tick."""
    if not records or records[0].get("type") != "header":
        raise ValidationError("telemetry must start with a header record")
    header = records[0]
    spec = ScenarioSpec.from_dict(header["scenario"])
    cfg_doc = header.get("config", {})
    config = EpisodeConfig(
        method=header["method"],
        assist=AssistParams(**cfg_doc["assist"]) if "assist" in cfg_doc else AssistParams(),
        cost=CostParams(**cfg_doc["cost"]) if "cost" in cfg_doc else CostParams(),
        adapter_mode=cfg_doc.get("adapter_mode", "fixture"),
        tick_budget=cfg_doc.get("tick_budget", DEFAULT_TICK_BUDGET))
    task = Task(**header["task"]) if header.get("task") else None

    context = build_task_context(spec, config, seed=header["seed"])
    runner = EpisodeRunner(context, task)

    belief_series: list[dict] = []
    first_divergence = None
    checked = 0
    for rec in records[1:]:
        if rec.get("type") != "tick":
            continue
        frame = UserFrame(u_h=np.asarray(rec["u_h"], dtype=float), gripper=rec["gripper"])
        runner.tick(frame)
        checked += 1
        replayed = runner.records[-1]
        row = {"tick": rec["tick"], "argmax": rec["argmax"]}
        if rec["belief"]:
            row.update({k: v for k, v in sorted(rec["belief"].items())})
        belief_series.append(row)
        if replayed["hash"] != rec["hash"] and first_divergence is None:
            first_divergence = rec["tick"]
    return ReplayReport(match=first_divergence is None, ticks_checked=checked,
                        first_divergence=first_divergence,
                        belief_series=tuple(belief_series))


def replay_path(path) -> ReplayReport:
    return replay_records(read_jsonl(path))
