"""Task-aware shared-control teleoperation.

Infers a user's multi-step manipulation intent from translational input via
a recursive Bayesian belief over an interaction graph, and supplies assistive
end-effector rotations during grasping and post-grasp object interaction.
Ships with a deterministic tabletop kinematic simulator, scripted operators,
a live WebSocket session service, and a batch CLI.
"""

from .geometry import (
    AlignmentConstraint,
    DegenerateGeometryError,
    OrientedBox,
    Pose,
    ValidationError,
    alignment_residual,
    flip_about_approach,
    geodesic_distance,
    obb_from_points,
    rotate_towards,
    solve_alignment,
)
from .graph import (
    InteractionEdge,
    InteractionGraph,
    ObjectNode,
    build_graph,
    grasp_stage_goals,
    interaction_stage_goals,
)
from .inference import (
    CostParams,
    GoalBelief,
    InputSample,
    argmax_goal,
    reset_belief,
    running_cost,
    step_log_likelihood,
    update_belief,
    value_to_go,
)
from .control import (
    AssistParams,
    ControllerConfig,
    GraspCandidate,
    SceneView,
    ScenePolicy,
    StageKind,
    StageState,
    UserFrame,
    auto_grasp_step,
    controller_tick,
    grasp_assist_step,
    interaction_assist_target,
    sample_grasps_fps,
    select_grasp_target,
)
from .world import (
    ScenarioSpec,
    ScriptedUser,
    Task,
    UserConfig,
    World,
    WorldState,
    load_scenario,
)
from .episode import (
    EpisodeConfig,
    EpisodeReport,
    build_task_context,
    replay_path,
    replay_records,
    run_episode,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentConstraint", "DegenerateGeometryError", "OrientedBox", "Pose",
    "ValidationError", "alignment_residual", "flip_about_approach",
    "geodesic_distance", "obb_from_points", "rotate_towards", "solve_alignment",
    "InteractionEdge", "InteractionGraph", "ObjectNode", "build_graph",
    "grasp_stage_goals", "interaction_stage_goals",
    "CostParams", "GoalBelief", "InputSample", "argmax_goal", "reset_belief",
    "running_cost", "step_log_likelihood", "update_belief", "value_to_go",
    "AssistParams", "ControllerConfig", "GraspCandidate", "SceneView",
    "ScenePolicy", "StageKind", "StageState", "UserFrame", "auto_grasp_step",
    "controller_tick", "grasp_assist_step", "interaction_assist_target",
    "sample_grasps_fps", "select_grasp_target",
    "ScenarioSpec", "ScriptedUser", "Task", "UserConfig", "World", "WorldState",
    "load_scenario",
    "EpisodeConfig", "EpisodeReport", "build_task_context", "replay_path",
    "replay_records", "run_episode",
    "__version__",
]
