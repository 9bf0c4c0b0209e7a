"""Geometry walkthrough: oriented boxes and the axis-alignment solve.

Builds a synthetic rod and cup, recovers their canonical axes from point
clouds, and solves for the minimal rotation that stands the rod upright in
the cup, the core move behind post-grasp rotation assistance.
"""

import math

import numpy as np

from teleassist import (
    AlignmentConstraint,
    alignment_residual,
    obb_from_points,
    solve_alignment,
)
from teleassist.geometry import rotation_angle

rng = np.random.default_rng(0)

# A rod lying flat along world X, and an upright cup.
theta = rng.uniform(0, 2 * math.pi, size=800)
rod = np.stack([rng.uniform(-0.08, 0.08, size=800),
                0.006 * np.cos(theta), 0.006 * np.sin(theta)], axis=1)
cup = np.stack([0.035 * np.cos(theta), 0.035 * np.sin(theta),
                rng.uniform(-0.05, 0.05, size=800)], axis=1) + [0.3, 0.0, 0.05]

rod_obb = obb_from_points(rod)
cup_obb = obb_from_points(cup)
print("rod axes (columns):\n", np.round(rod_obb.axes, 3))
print("rod half extents:", np.round(rod_obb.half_extents, 4))
print("cup long axis (should be vertical):", np.round(cup_obb.axes[:, 0], 3))

# Ask for the rod's long axis (X) to align with the cup's long axis (X).
constraint = AlignmentConstraint.from_names("X", "X", sign=1)
rotation = solve_alignment([constraint], rod_obb.axes, cup_obb.axes)

print("\nsolved rotation angle: %.1f degrees" % math.degrees(rotation_angle(rotation)))
print("residual before: %.4f" % alignment_residual(np.eye(3), [constraint],
                                                   rod_obb.axes, cup_obb.axes))
print("residual after:  %.2e" % alignment_residual(rotation, [constraint],
                                                   rod_obb.axes, cup_obb.axes))

rotated_axis = rotation @ rod_obb.axes[:, 0]
print("rod long axis after rotation:", np.round(rotated_axis, 4))
