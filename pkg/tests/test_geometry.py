import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from teleassist.geometry import (
    AlignmentConstraint,
    DegenerateGeometryError,
    OrientedBox,
    Pose,
    ValidationError,
    alignment_residual,
    flip_about_approach,
    geodesic_distance,
    obb_from_points,
    quat_from_axis_angle,
    quat_from_matrix,
    quat_identity,
    quat_multiply,
    quat_rotate,
    quat_to_matrix,
    rotate_towards,
    rotation_angle,
    solve_alignment,
    _canonicalize_axes,
)


def random_quat(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# quaternion basics
# ---------------------------------------------------------------------------

class TestQuaternionOps:
    def test_multiply_matches_matrix_product(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            qa, qb = random_quat(rng), random_quat(rng)
            got = quat_to_matrix(quat_multiply(qa, qb))
            want = quat_to_matrix(qa) @ quat_to_matrix(qb)
            assert np.allclose(got, want, atol=1e-12)

    def test_rotate_matches_matrix(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            q = random_quat(rng)
            v = rng.normal(size=3)
            assert np.allclose(quat_rotate(q, v), quat_to_matrix(q) @ v, atol=1e-12)

    def test_matrix_round_trip(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            q = random_quat(rng)
            back = quat_from_matrix(quat_to_matrix(q))
            assert geodesic_distance(q, back) < 1e-9

    def test_from_matrix_against_scipy(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            R = Rotation.random(random_state=rng).as_matrix()
            q = quat_from_matrix(R)
            assert np.allclose(quat_to_matrix(q), R, atol=1e-12)


class TestGeodesicDistance:
    def test_identity_case(self):
        q = quat_from_axis_angle([0, 1, 0], 0.7)
        assert geodesic_distance(q, q) == 0.0

    def test_quarter_turn(self):
        q = quat_from_axis_angle([0, 0, 1], math.pi / 2)
        assert geodesic_distance(quat_identity(), q) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_against_axis_angle_oracle(self):
        # Independent oracle: angle of qa^-1 qb via explicit axis-angle
        # conversion of the relative rotation matrix.
        rng = np.random.default_rng(4)
        for _ in range(200):
            qa, qb = random_quat(rng), random_quat(rng)
            rel = quat_to_matrix(qa).T @ quat_to_matrix(qb)
            expected = math.acos(np.clip((np.trace(rel) - 1.0) / 2.0, -1.0, 1.0))
            assert geodesic_distance(qa, qb) == pytest.approx(expected, abs=1e-9)

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            qa, qb = random_quat(rng), random_quat(rng)
            assert geodesic_distance(qa, qb) == geodesic_distance(qb, qa)

    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_double_cover(self, seed):
        q = random_quat(np.random.default_rng(seed))
        assert geodesic_distance(q, -q) == 0.0

    def test_rejects_non_unit(self):
        with pytest.raises(ValidationError):
            geodesic_distance(np.array([1.0, 0.0, 0.0, 0.01]), quat_identity())


class TestRotateTowards:
    def test_partial_step_leaves_expected_remainder(self):
        rng = np.random.default_rng(6)
        current = random_quat(rng)
        axis = unit(rng.normal(size=3))
        target = quat_multiply(quat_from_axis_angle(axis, 0.5), current)
        moved = rotate_towards(current, target, 0.2)
        assert geodesic_distance(moved, target) == pytest.approx(0.3, abs=1e-9)

    def test_zero_step_is_identity_op(self):
        rng = np.random.default_rng(7)
        current, target = random_quat(rng), random_quat(rng)
        assert geodesic_distance(rotate_towards(current, target, 0.0), current) < 1e-12

    def test_overshoot_clamps_to_target(self):
        rng = np.random.default_rng(8)
        current, target = random_quat(rng), random_quat(rng)
        moved = rotate_towards(current, target, math.pi)
        assert geodesic_distance(moved, target) < 1e-12

    def test_result_on_geodesic(self):
        # dist(current, result) + dist(result, target) == dist(current, target)
        rng = np.random.default_rng(9)
        for _ in range(50):
            current, target = random_quat(rng), random_quat(rng)
            total = geodesic_distance(current, target)
            step = total * 0.37
            moved = rotate_towards(current, target, step)
            assert geodesic_distance(current, moved) == pytest.approx(step, abs=1e-9)
            assert geodesic_distance(moved, target) == pytest.approx(total - step, abs=1e-9)

    def test_negative_step_rejected(self):
        with pytest.raises(ValidationError):
            rotate_towards(quat_identity(), quat_identity(), -0.1)


# ---------------------------------------------------------------------------
# pose
# ---------------------------------------------------------------------------

class TestPose:
    def test_compose_associative(self):
        rng = np.random.default_rng(10)
        poses = [Pose(rng.normal(size=3), random_quat(rng)) for _ in range(3)]
        a, b, c = poses
        left = a.compose(b).compose(c)
        right = a.compose(b.compose(c))
        assert left.approx_equal(right, pos_tol=1e-9, ang_tol=1e-9)

    def test_inverse_composes_to_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            p = Pose(rng.normal(size=3), random_quat(rng))
            ident = p.compose(p.inverse())
            assert np.linalg.norm(ident.position) < 1e-9
            assert geodesic_distance(ident.orientation, quat_identity()) < 1e-9

    def test_transform_point_matches_compose(self):
        rng = np.random.default_rng(12)
        p = Pose(rng.normal(size=3), random_quat(rng))
        v = rng.normal(size=3)
        assert np.allclose(p.transform_point(v),
                           p.compose(Pose(v)).position, atol=1e-12)

    def test_rejects_non_unit_orientation(self):
        with pytest.raises(ValidationError):
            Pose(np.zeros(3), np.array([1.0, 0.0, 0.1, 0.0]))


# ---------------------------------------------------------------------------
# oriented bounding boxes
# ---------------------------------------------------------------------------

def box_grid(half_extents, n=5):
    axes = [np.linspace(-h, h, n) for h in half_extents]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    return pts


class TestObbFromPoints:
    def test_axis_aligned_unit_cube(self):
        corners = box_grid((0.5, 0.5, 0.5), n=2)
        obb = obb_from_points(corners)
        assert np.allclose(np.abs(obb.axes), np.eye(3), atol=1e-9)
        assert np.allclose(sorted(obb.half_extents), [0.5, 0.5, 0.5], atol=1e-9)
        assert np.allclose(obb.center, 0.0, atol=1e-12)

    def test_recovers_known_rotation(self):
        # Construct-then-recover: rotate a distinct-extent box by a known R;
        # the recovered axes must match R's columns after the same
        # canonicalization rule is applied to the ground truth.
        rng = np.random.default_rng(13)
        half = np.array([0.10, 0.05, 0.02])
        base = box_grid(half, n=4)
        for _ in range(25):
            R = Rotation.random(random_state=rng).as_matrix()
            obb = obb_from_points(base @ R.T)
            expected = _canonicalize_axes(R)
            assert np.allclose(obb.axes, expected, atol=1e-6)
            assert np.allclose(obb.half_extents, half, atol=1e-9)

    def test_sampled_bar_long_axis(self):
        # 1000 points in a 0.2 x 0.05 x 0.05 box: the dominant axis must lie
        # within 2 degrees of the 0.2 m direction.
        rng = np.random.default_rng(42)
        pts = rng.uniform(-1.0, 1.0, size=(1000, 3)) * [0.1, 0.025, 0.025]
        obb = obb_from_points(pts)
        angle = math.acos(min(1.0, abs(float(obb.axes[0, 0]))))
        assert math.degrees(angle) < 2.0

    def test_contains_all_points(self):
        rng = np.random.default_rng(14)
        pts = rng.normal(size=(500, 3)) * [0.2, 0.1, 0.04] + [0.3, -0.2, 0.5]
        obb = obb_from_points(pts)
        assert obb.contains(pts).all()

    def test_translation_invariance(self):
        rng = np.random.default_rng(15)
        pts = rng.normal(size=(200, 3)) * [0.2, 0.1, 0.04]
        shift = np.array([1.5, -0.3, 0.8])
        a = obb_from_points(pts)
        b = obb_from_points(pts + shift)
        assert np.allclose(a.axes, b.axes, atol=1e-9)
        assert np.allclose(a.half_extents, b.half_extents, atol=1e-9)
        assert np.allclose(b.center - a.center, shift, atol=1e-9)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(16)
        pts = rng.normal(size=(300, 3)) * [0.2, 0.1, 0.04]
        perm = rng.permutation(len(pts))
        a = obb_from_points(pts)
        b = obb_from_points(pts[perm])
        assert np.allclose(a.axes, b.axes, atol=1e-12)
        assert np.allclose(a.center, b.center, atol=1e-12)

    def test_planar_points_degenerate(self):
        rng = np.random.default_rng(17)
        pts = np.zeros((100, 3))
        pts[:, :2] = rng.normal(size=(100, 2))
        with pytest.raises(DegenerateGeometryError) as err:
            obb_from_points(pts)
        assert err.value.rank == 2

    def test_collinear_points_degenerate(self):
        t = np.linspace(0, 1, 50)
        pts = np.outer(t, [1.0, 2.0, 3.0])
        with pytest.raises(DegenerateGeometryError) as err:
            obb_from_points(pts)
        assert err.value.rank == 1

    def test_too_few_points(self):
        with pytest.raises(ValidationError):
            obb_from_points(np.zeros((3, 3)))


# ---------------------------------------------------------------------------
# alignment solve
# ---------------------------------------------------------------------------

class TestSolveAlignment:
    def test_identity_when_already_aligned(self):
        c = [AlignmentConstraint(0, 0, 1)]
        R = solve_alignment(c, np.eye(3), np.eye(3))
        assert np.allclose(R, np.eye(3), atol=1e-12)

    def test_antipodal_canonical_rotation(self):
        # a = +X must map to -X; the documented tie-break is a half turn
        # about world +Z (Z projected orthogonal to X is Z itself).
        c = [AlignmentConstraint(0, 0, -1)]
        R = solve_alignment(c, np.eye(3), np.eye(3))
        expected = quat_to_matrix(quat_from_axis_angle([0, 0, 1], math.pi))
        assert np.allclose(R, expected, atol=1e-9)

    def test_antipodal_z_axis_falls_back_to_x(self):
        # a parallel to Z: the perpendicular tie-break falls back to world +X.
        c = [AlignmentConstraint(2, 2, -1)]
        R = solve_alignment(c, np.eye(3), np.eye(3))
        expected = quat_to_matrix(quat_from_axis_angle([1, 0, 0], math.pi))
        assert np.allclose(R, expected, atol=1e-9)

    def test_single_constraint_minimal_angle(self):
        # The rotation angle must equal the angle between a and s*b.
        rng = np.random.default_rng(18)
        for _ in range(100):
            axes_a = Rotation.random(random_state=rng).as_matrix()
            axes_b = Rotation.random(random_state=rng).as_matrix()
            c = [AlignmentConstraint(int(rng.integers(3)), int(rng.integers(3)),
                                     int(rng.choice([-1, 1])))]
            a = axes_a[:, c[0].axis_a]
            b = c[0].sign * axes_b[:, c[0].axis_b]
            R = solve_alignment(c, axes_a, axes_b)
            expected = math.acos(np.clip(float(np.dot(a, b)), -1.0, 1.0))
            assert rotation_angle(R) == pytest.approx(expected, abs=1e-9)
            assert np.allclose(R @ a, b, atol=1e-9)

    def test_two_constraint_recovery(self):
        rng = np.random.default_rng(19)
        for _ in range(200):
            axes_a = Rotation.random(random_state=rng).as_matrix()
            R_true = Rotation.random(random_state=rng).as_matrix()
            axes_b = R_true @ axes_a
            cons = [AlignmentConstraint(0, 0, 1), AlignmentConstraint(1, 1, 1)]
            R = solve_alignment(cons, axes_a, axes_b)
            assert rotation_angle(R.T @ R_true) < 1e-6

    def test_output_always_in_so3(self):
        rng = np.random.default_rng(20)
        for _ in range(200):
            axes_a = Rotation.random(random_state=rng).as_matrix()
            axes_b = Rotation.random(random_state=rng).as_matrix()
            k = int(rng.integers(1, 4))
            cons = [AlignmentConstraint(int(rng.integers(3)), int(rng.integers(3)),
                                        int(rng.choice([-1, 1]))) for _ in range(k)]
            R = solve_alignment(cons, axes_a, axes_b)
            assert np.max(np.abs(R.T @ R - np.eye(3))) < 1e-6
            assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-6)

    def test_conflicting_constraints_beat_random_search(self):
        # Least-squares optimum must not be beaten by 10k random rotations.
        rng = np.random.default_rng(21)
        axes_a = np.eye(3)
        axes_b = np.eye(3)
        cons = [AlignmentConstraint(0, 0, 1), AlignmentConstraint(0, 1, 1),
                AlignmentConstraint(1, 2, -1)]
        R = solve_alignment(cons, axes_a, axes_b)
        best = alignment_residual(R, cons, axes_a, axes_b)
        samples = Rotation.random(10_000, random_state=rng).as_matrix()
        for Rr in samples:
            assert best <= alignment_residual(Rr, cons, axes_a, axes_b) + 1e-9

    def test_parallel_constraints_rank_one_fallback(self):
        # Two constraints sharing one effective direction behave like k=1:
        # minimal rotation, no spurious twist about the aligned axis.
        axes_a = np.eye(3)
        axes_b = quat_to_matrix(quat_from_axis_angle([0, 0, 1], math.pi / 3))
        cons = [AlignmentConstraint(0, 0, 1), AlignmentConstraint(0, 0, 1)]
        R = solve_alignment(cons, axes_a, axes_b)
        a, b = axes_a[:, 0], axes_b[:, 0]
        assert np.allclose(R @ a, b, atol=1e-9)
        assert rotation_angle(R) == pytest.approx(math.pi / 3, abs=1e-9)

    def test_fully_cancelling_constraints_return_identity(self):
        cons = [AlignmentConstraint(0, 0, 1), AlignmentConstraint(0, 0, -1)]
        R = solve_alignment(cons, np.eye(3), np.eye(3))
        assert np.allclose(R, np.eye(3), atol=1e-12)

    def test_empty_constraints_rejected(self):
        with pytest.raises(ValidationError):
            solve_alignment([], np.eye(3), np.eye(3))

    def test_bad_axis_index_rejected(self):
        with pytest.raises(ValidationError):
            AlignmentConstraint(3, 0, 1)
        with pytest.raises(ValidationError):
            AlignmentConstraint(0, 0, 2)

    def test_from_names(self):
        c = AlignmentConstraint.from_names("y", "Z", -1)
        assert (c.axis_a, c.axis_b, c.sign) == (1, 2, -1)


# ---------------------------------------------------------------------------
# approach-axis flip
# ---------------------------------------------------------------------------

class TestFlipAboutApproach:
    def test_identity_grasp_flips_about_z(self):
        grasp = Pose(np.array([0.1, 0.2, 0.3]))
        flipped = flip_about_approach(grasp)
        expected = quat_from_axis_angle([0, 0, 1], math.pi)
        assert np.allclose(flipped.position, grasp.position)
        assert geodesic_distance(flipped.orientation, expected) < 1e-12

    def test_involution(self):
        rng = np.random.default_rng(22)
        for _ in range(50):
            grasp = Pose(rng.normal(size=3), random_quat(rng))
            twice = flip_about_approach(flip_about_approach(grasp))
            assert np.allclose(twice.position, grasp.position)
            assert geodesic_distance(twice.orientation, grasp.orientation) < 1e-9

    def test_flip_is_half_turn(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            grasp = Pose(rng.normal(size=3), random_quat(rng))
            flipped = flip_about_approach(grasp)
            assert geodesic_distance(grasp.orientation, flipped.orientation) == \
                pytest.approx(math.pi, abs=1e-9)

    def test_rotates_about_own_approach_axis(self):
        # The grasp frame's +Z direction is unchanged by the flip.
        rng = np.random.default_rng(24)
        grasp = Pose(np.zeros(3), random_quat(rng))
        flipped = flip_about_approach(grasp)
        assert np.allclose(quat_rotate(grasp.orientation, [0, 0, 1]),
                           quat_rotate(flipped.orientation, [0, 0, 1]), atol=1e-12)


class TestOrientedBoxType:
    def test_rejects_nonpositive_extents(self):
        with pytest.raises(ValidationError):
            OrientedBox(np.zeros(3), np.array([0.1, 0.0, 0.1]), np.eye(3))

    def test_rejects_left_handed_axes(self):
        axes = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(ValidationError):
            OrientedBox(np.zeros(3), np.ones(3), axes)

    def test_corners_count_and_containment(self):
        obb = OrientedBox(np.array([1.0, 0.0, 0.0]), np.array([0.2, 0.1, 0.05]),
                          quat_to_matrix(quat_from_axis_angle([0, 0, 1], 0.4)))
        corners = obb.corners()
        assert corners.shape == (8, 3)
        assert obb.contains(corners).all()
