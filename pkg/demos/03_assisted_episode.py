"""End-to-end assisted episode: a rotation-free scripted operator completes
the hammer task with the full shared controller, then the telemetry log is
replayed and hash-verified.

The operator only translates; every wrist rotation in the log came from the
assistance policy.
"""

import tempfile
from pathlib import Path

from teleassist import EpisodeConfig, ScenarioSpec, UserConfig, run_episode, replay_path
from teleassist import assets

scenario = ScenarioSpec.from_path(assets.scenario_path("tabletop_six"))
task = scenario.tasks[2]  # hammer -> peg block
print(f"task: {task.kind} ({task.tool} -> {task.target})")

report = run_episode(scenario, task, EpisodeConfig(method="assisted"),
                     UserConfig(sigma=0.002), seed=3)

print(f"success: {report.success} in {report.ticks} ticks "
      f"({report.time_s:.1f} model-seconds)")
print(f"stages: {' -> '.join(report.stage_sequence)}")
print(f"trajectory: {report.trajectory_length:.2f} m, "
      f"user inputs: {report.input_count}")

stage_changes = []
last = None
for rec in report.records:
    if rec["type"] == "tick" and rec["stage"] != last:
        stage_changes.append((rec["tick"], rec["stage"]))
        last = rec["stage"]
print("stage transitions at ticks:", stage_changes)

with tempfile.TemporaryDirectory() as tmp:
    log = Path(tmp) / "episode.jsonl"
    report.write_telemetry(log)
    verification = replay_path(log)
    print(f"replay: {verification.ticks_checked} ticks checked, "
          f"hashes match: {verification.match}")
