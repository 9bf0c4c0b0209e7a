"""Belief convergence demo: watch the posterior over candidate goals as a
scripted operator drives straight at one of them.

Prints a per-tick timeline of the goal distribution, the kind of trace the
UI renders as live probability bars.
"""

import numpy as np

from teleassist import CostParams, InputSample, argmax_goal, reset_belief, update_belief

rng = np.random.default_rng(3)
params = CostParams()

goals = {
    0: np.array([-0.25, 0.25, 0.02]),   # banana
    2: np.array([-0.25, 0.00, 0.02]),   # marker
    4: np.array([-0.25, -0.25, 0.02]),  # hammer
}
names = {0: "banana", 2: "marker", 4: "hammer"}
intended = 4

belief = reset_belief(sorted(goals))
pos = np.array([0.0, 0.0, 0.35])

print("tick  " + "  ".join(f"{names[g]:>7}" for g in sorted(goals)) + "   argmax")
for tick in range(60):
    direction = goals[intended] - pos
    dist = np.linalg.norm(direction)
    step = direction / dist * min(0.01, dist) + rng.normal(0, 0.002, size=3)
    belief = update_belief(belief, InputSample(pos, step, tick), goals, params)
    pos = pos + step
    if tick % 5 == 0 or dist < 0.02:
        probs = belief.probabilities()
        row = "  ".join(f"{probs[g]:7.3f}" for g in sorted(goals))
        print(f"{tick:4d}  {row}   {names[argmax_goal(belief)]}")
    if dist < 0.02:
        break

print(f"\nconverged to: {names[argmax_goal(belief)]} (intended: {names[intended]})")
