"""Method comparison on the insert task: full graph-filtered assistance vs
assistance without graph filtering vs no assistance at all.

Mirrors the batch CLI (``teleassist run-batch``) in a few lines of library
code. The rotation-free operator cannot finish the insert without assistance,
and filtering the candidate goals through the interaction graph lowers the
input count and path length of the assisted runs.
"""

from teleassist import EpisodeConfig, ScenarioSpec, UserConfig, run_episode
from teleassist import assets

scenario = ScenarioSpec.from_path(assets.scenario_path("tabletop_six"))
task = scenario.tasks[1]  # marker -> mug
seeds = range(5)

print(f"task: {task.kind} ({task.tool} -> {task.target}), {len(list(seeds))} seeds\n")
print(f"{'method':<12} {'success':>8} {'mean inputs':>12} {'mean traj (m)':>14}")
for method in ("assisted", "unfiltered", "teleop"):
    wins, inputs, traj = 0, 0.0, 0.0
    for seed in seeds:
        rep = run_episode(scenario, task,
                          EpisodeConfig(method=method, tick_budget=1500),
                          UserConfig(sigma=0.002), seed=seed)
        wins += rep.success
        inputs += rep.input_count
        traj += rep.trajectory_length
    n = len(list(seeds))
    print(f"{method:<12} {wins:>5}/{n:<2} {inputs / n:>12.1f} {traj / n:>14.3f}")
