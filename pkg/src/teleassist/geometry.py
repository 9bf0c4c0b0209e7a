"""Pose algebra, rotation utilities, oriented bounding boxes, and the
axis-alignment rotation solver shared by every other module.

Conventions
-----------
- Quaternions are scalar-first unit arrays ``[w, x, y, z]``.
- Rotation matrices act on column vectors; their columns are frame axes.
- Distances are meters, angles are radians.
- Composition ``compose(p, q)`` applies ``q`` in the frame of ``p``.

Tolerances are fixed here and exported as named constants so every caller
agrees on what "unit" and "orthonormal" mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Input validation bound for unit quaternions / orthonormal axes.
UNIT_NORM_TOL = 1e-6
# Composition / interpolation exactness guarantee.
COMPOSE_TOL = 1e-9
# Orthonormality guarantee on solver outputs.
ORTHONORMAL_TOL = 1e-6
# Grasp frame +Z is the approach direction; every grasp generator emits this.
APPROACH_AXIS = np.array([0.0, 0.0, 1.0])

AXIS_NAMES = ("X", "Y", "Z")


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class DegenerateGeometryError(ValueError):
    """Raised when point geometry does not span 3D. Carries the observed rank."""

    def __init__(self, message: str, rank: int):
        super().__init__(message)
        self.rank = rank


# ---------------------------------------------------------------------------
# quaternion primitives
# ---------------------------------------------------------------------------

def _as_vec3(v, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ValidationError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite components")
    return arr


def _as_quat(q, name: str = "quaternion") -> np.ndarray:
    arr = np.asarray(q, dtype=float)
    if arr.shape != (4,):
        raise ValidationError(f"{name} must be a wxyz quaternion, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite components")
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > UNIT_NORM_TOL:
        raise ValidationError(f"{name} is not unit (norm {norm:.9f})")
    return arr / norm


def quat_canonical(q: np.ndarray) -> np.ndarray:
    """Resolve the double cover: first nonzero component made positive."""
    for c in q:
        if c != 0.0:
            return -q if c < 0.0 else q
    return q


def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_multiply(qa, qb) -> np.ndarray:
    """Hamilton product qa ⊗ qb, renormalized and sign-canonicalized."""
    w1, x1, y1, z1 = qa
    w2, x2, y2, z2 = qb
    out = np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])
    return quat_canonical(out / np.linalg.norm(out))


def quat_inverse(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q, v) -> np.ndarray:
    """Rotate 3-vector v by unit quaternion q."""
    w = q[0]
    u = np.asarray(q[1:], dtype=float)
    v = np.asarray(v, dtype=float)
    return v + 2.0 * np.cross(u, np.cross(u, v) + w * v)


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_matrix(R) -> np.ndarray:
    """Rotation matrix -> unit quaternion (Shepperd's method, canonical sign)."""
    R = np.asarray(R, dtype=float)
    t = R[0, 0] + R[1, 1] + R[2, 2]
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array([(R[2, 1] - R[1, 2]) / s,
                      0.25 * s,
                      (R[0, 1] + R[1, 0]) / s,
                      (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] > R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array([(R[0, 2] - R[2, 0]) / s,
                      (R[0, 1] + R[1, 0]) / s,
                      0.25 * s,
                      (R[1, 2] + R[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array([(R[1, 0] - R[0, 1]) / s,
                      (R[0, 2] + R[2, 0]) / s,
                      (R[1, 2] + R[2, 1]) / s,
                      0.25 * s])
    return quat_canonical(q / np.linalg.norm(q))


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    if norm < 1e-12:
        return quat_identity()
    axis = axis / norm
    half = 0.5 * float(angle)
    return quat_canonical(np.concatenate(([math.cos(half)], math.sin(half) * axis)))


def quat_to_axis_angle(q) -> tuple[np.ndarray, float]:
    """Unit quaternion -> (unit axis, angle in [0, pi])."""
    q = quat_canonical(np.asarray(q, dtype=float))
    w = min(1.0, max(-1.0, float(q[0])))
    angle = 2.0 * math.acos(abs(w))
    s = math.sqrt(max(0.0, 1.0 - w * w))
    if s < 1e-12:
        return np.array([1.0, 0.0, 0.0]), 0.0
    axis = q[1:] / s
    if w < 0.0:
        axis = -axis
    return axis, angle


def geodesic_distance(qa, qb) -> float:
    """Rotation angle between two orientations, in [0, pi].

    Symmetric, zero iff the rotations are equal up to the quaternion double
    cover. Inputs whose norm deviates from 1 by more than ``UNIT_NORM_TOL``
    are rejected. Computed from the smaller quaternion chord (exact at zero,
    well-conditioned at pi, unlike the acos-of-dot form).
    """
    qa = _as_quat(qa, "qa")
    qb = _as_quat(qb, "qb")
    chord = min(float(np.linalg.norm(qa - qb)), float(np.linalg.norm(qa + qb)))
    return 4.0 * math.asin(min(1.0, 0.5 * chord))


def rotate_towards(current, target, max_step: float) -> np.ndarray:
    """Advance ``current`` along the shortest geodesic to ``target``.

    The result lies on the arc between the two orientations and satisfies
    ``geodesic_distance(result, target) == max(0, dist - max_step)`` within
    ``COMPOSE_TOL``.
    """
    current = _as_quat(current, "current")
    target = _as_quat(target, "target")
    if max_step < 0.0:
        raise ValidationError("max_step must be >= 0")
    if float(np.dot(current, target)) < 0.0:
        target = -target
    delta = quat_multiply(target, quat_inverse(current))
    axis, angle = quat_to_axis_angle(delta)
    if angle <= max_step or angle < 1e-12:
        return quat_canonical(target)
    step = quat_from_axis_angle(axis, max_step)
    return quat_multiply(step, current)


def rotation_angle(R) -> float:
    """Angle of a rotation matrix, in [0, pi]."""
    c = (float(np.trace(R)) - 1.0) / 2.0
    return math.acos(min(1.0, max(-1.0, c)))


# ---------------------------------------------------------------------------
# pose
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform: position (m) plus unit wxyz orientation."""

    position: np.ndarray
    orientation: np.ndarray = field(default_factory=quat_identity)

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position, "position"))
        object.__setattr__(self, "orientation", _as_quat(self.orientation, "orientation"))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.zeros(3), quat_identity())

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)

    def compose(self, other: "Pose") -> "Pose":
        """self ∘ other: apply ``other`` in this pose's frame."""
        return Pose(self.position + quat_rotate(self.orientation, other.position),
                    quat_multiply(self.orientation, other.orientation))

    def inverse(self) -> "Pose":
        q_inv = quat_inverse(self.orientation)
        return Pose(-quat_rotate(q_inv, self.position), quat_canonical(q_inv))

    def transform_point(self, p) -> np.ndarray:
        return self.position + quat_rotate(self.orientation, np.asarray(p, dtype=float))

    def transform_points(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ self.rotation_matrix().T + self.position

    def approx_equal(self, other: "Pose", pos_tol: float = COMPOSE_TOL,
                     ang_tol: float = COMPOSE_TOL) -> bool:
        return (np.linalg.norm(self.position - other.position) <= pos_tol
                and geodesic_distance(self.orientation, other.orientation) <= ang_tol)


# ---------------------------------------------------------------------------
# oriented bounding boxes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OrientedBox:
    """Box with orthonormal axes (columns of ``axes``) and positive half extents."""

    center: np.ndarray
    half_extents: np.ndarray
    axes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vec3(self.center, "center"))
        he = np.asarray(self.half_extents, dtype=float)
        if he.shape != (3,) or np.any(he <= 0.0):
            raise ValidationError("half_extents must be three positive lengths")
        object.__setattr__(self, "half_extents", he)
        axes = np.asarray(self.axes, dtype=float)
        if axes.shape != (3, 3):
            raise ValidationError("axes must be a 3x3 matrix")
        if np.max(np.abs(axes.T @ axes - np.eye(3))) > ORTHONORMAL_TOL:
            raise ValidationError("axes must be orthonormal")
        if np.linalg.det(axes) < 0.0:
            raise ValidationError("axes must be right-handed (det +1)")
        object.__setattr__(self, "axes", axes)

    def axis(self, index: int) -> np.ndarray:
        return self.axes[:, index]

    def corners(self) -> np.ndarray:
        """The 8 world-frame corner points, shape (8, 3)."""
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
        return self.center + (signs * self.half_extents) @ self.axes.T

    def contains(self, points: np.ndarray, slack: float = 1e-6) -> np.ndarray:
        local = (np.asarray(points, dtype=float) - self.center) @ self.axes
        return np.all(np.abs(local) <= self.half_extents + slack, axis=1)


def _canonicalize_axes(axes: np.ndarray) -> np.ndarray:
    """Flip each axis so its largest-magnitude world component is positive,
    then restore det +1 by flipping the last axis if needed."""
    out = axes.copy()
    for i in range(3):
        col = out[:, i]
        if col[int(np.argmax(np.abs(col)))] < 0.0:
            out[:, i] = -col
    if np.linalg.det(out) < 0.0:
        out[:, 2] = -out[:, 2]
    return out


def obb_from_points(points) -> OrientedBox:
    """Covariance-PCA oriented bounding box of a 3D point set.

    Axes are covariance eigenvectors sorted by descending eigenvalue and
    sign-canonicalized (see ``_canonicalize_axes``); the box contains every
    input point. Points that do not span 3D raise ``DegenerateGeometryError``
    carrying the observed rank.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 4:
        raise ValidationError("need at least 4 points of shape (n, 3)")
    mean = pts.mean(axis=0)
    centered = pts - mean
    cov = centered.T @ centered / pts.shape[0]
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(-evals, kind="stable")
    evals = evals[order]
    axes = evecs[:, order]
    top = max(float(evals[0]), 0.0)
    rank = int(np.sum(evals > top * 1e-12)) if top > 0.0 else 0
    if rank < 3:
        raise DegenerateGeometryError(f"points span only {rank} dimensions", rank=rank)
    axes = _canonicalize_axes(axes)
    proj = centered @ axes
    lo = proj.min(axis=0)
    hi = proj.max(axis=0)
    half = (hi - lo) / 2.0
    center = mean + axes @ ((hi + lo) / 2.0)
    return OrientedBox(center=center, half_extents=half, axes=axes)


# ---------------------------------------------------------------------------
# axis-alignment constraints and the rotation solve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlignmentConstraint:
    """Require axis ``axis_a`` of the held object to be aligned (sign +1) or
    anti-aligned (sign -1) with axis ``axis_b`` of the target object."""

    axis_a: int
    axis_b: int
    sign: int

    def __post_init__(self):
        if self.axis_a not in (0, 1, 2) or self.axis_b not in (0, 1, 2):
            raise ValidationError("axis indices must be 0 (X), 1 (Y) or 2 (Z)")
        if self.sign not in (1, -1):
            raise ValidationError("sign must be +1 or -1")

    @classmethod
    def from_names(cls, axis_a: str, axis_b: str, sign: int) -> "AlignmentConstraint":
        try:
            return cls(AXIS_NAMES.index(axis_a.upper()), AXIS_NAMES.index(axis_b.upper()), int(sign))
        except ValueError as exc:
            raise ValidationError(f"unknown axis name: {axis_a!r}/{axis_b!r}") from exc


def _validate_axes_matrix(axes, name: str) -> np.ndarray:
    axes = np.asarray(axes, dtype=float)
    if axes.shape != (3, 3):
        raise ValidationError(f"{name} must be 3x3")
    if np.max(np.abs(axes.T @ axes - np.eye(3))) > ORTHONORMAL_TOL:
        raise ValidationError(f"{name} must be orthonormal")
    return axes


def _shortest_arc(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimal rotation taking unit vector a onto unit vector b.

    Antipodal inputs rotate 180° about the canonical perpendicular: world +Z
    projected orthogonal to a, or world +X if a is parallel to Z.
    """
    dot = float(np.dot(a, b))
    cross = np.cross(a, b)
    norm = float(np.linalg.norm(cross))
    if norm < 1e-12:
        if dot > 0.0:
            return np.eye(3)
        perp = np.array([0.0, 0.0, 1.0]) - a * a[2]
        if np.linalg.norm(perp) < 1e-6:
            perp = np.array([1.0, 0.0, 0.0]) - a * a[0]
        perp = perp / np.linalg.norm(perp)
        return quat_to_matrix(quat_from_axis_angle(perp, math.pi))
    axis = cross / norm
    angle = math.atan2(norm, dot)
    return quat_to_matrix(quat_from_axis_angle(axis, angle))


def solve_alignment(constraints, axes_a, axes_b) -> np.ndarray:
    """Rotation R minimizing sum_i ||R a_i - s_i b_i||^2 over SO(3).

    ``a_i``/``b_i`` are world-frame columns of ``axes_a``/``axes_b`` selected
    by each constraint. Among minimizers, the returned rotation has minimal
    angle from identity: the full-rank case is the unique orthogonal
    Procrustes optimum (SVD with determinant correction); a rank-1 direction
    bundle reduces to the shortest arc between the effective directions; a
    fully conflicting (rank-0) set returns identity.
    """
    constraints = list(constraints)
    if not constraints:
        raise ValidationError("constraint list must be non-empty")
    A = _validate_axes_matrix(axes_a, "axes_a")
    B = _validate_axes_matrix(axes_b, "axes_b")
    corr = np.zeros((3, 3))
    for c in constraints:
        a = A[:, c.axis_a]
        b = c.sign * B[:, c.axis_b]
        corr += np.outer(b, a)
    U, s, Vt = np.linalg.svd(corr)
    if s[0] < 1e-12:
        return np.eye(3)
    rank = int(np.sum(s > s[0] * 1e-9))
    if rank == 1:
        return _shortest_arc(Vt[0], U[:, 0])
    D = np.diag([1.0, 1.0, float(np.sign(np.linalg.det(U @ Vt)))])
    return U @ D @ Vt


def alignment_residual(R, constraints, axes_a, axes_b) -> float:
    """The alignment objective sum_i ||R a_i - s_i b_i||^2 at rotation R."""
    A = np.asarray(axes_a, dtype=float)
    B = np.asarray(axes_b, dtype=float)
    R = np.asarray(R, dtype=float)
    total = 0.0
    for c in constraints:
        diff = R @ A[:, c.axis_a] - c.sign * B[:, c.axis_b]
        total += float(np.dot(diff, diff))
    return total


_HALF_TURN_Z = np.array([0.0, 0.0, 0.0, 1.0])


def flip_about_approach(grasp: Pose) -> Pose:
    """The equivalent grasp rotated 180° about its own approach (+Z) axis."""
    return Pose(grasp.position, quat_multiply(grasp.orientation, _HALF_TURN_Z))
