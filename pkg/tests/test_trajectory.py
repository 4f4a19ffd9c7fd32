import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.spatial.transform import Rotation

from oracles import random_rotation
from topo_lidar.errors import AlignmentError, DegenerateAlignmentError
from topo_lidar.evaluation.trajectory import (
    PoseTrajectory,
    RigidTransform,
    align_umeyama,
    ate,
    rpe,
)


def random_trajectory(rng, n=20):
    R = np.stack([random_rotation(rng) for _ in range(n)])
    return PoseTrajectory(R, np.cumsum(rng.normal(size=(n, 3)), axis=0))


def random_transform(rng):
    return RigidTransform(random_rotation(rng), rng.normal(size=3) * 10)


def straight_line(n, speed):
    t = np.zeros((n, 3))
    t[:, 0] = speed * np.arange(n)
    return PoseTrajectory(np.tile(np.eye(3), (n, 1, 1)), t)


def test_alignment_recovers_a_rigid_motion(rng):
    P = random_trajectory(rng)
    S0 = random_transform(rng)
    S = align_umeyama(P, P.transformed(S0))
    assert_allclose(S.R, S0.R, atol=1e-9)
    assert_allclose(S.t, S0.t, atol=1e-9)


def test_alignment_of_identical_trajectories_is_identity(rng):
    P = random_trajectory(rng)
    S = align_umeyama(P, P)
    assert_allclose(S.R, np.eye(3), atol=1e-12)
    assert_allclose(S.t, 0.0, atol=1e-12)


def test_degenerate_alignment():
    t = np.column_stack([np.arange(5.0), np.zeros(5), np.zeros(5)])
    P = PoseTrajectory(np.tile(np.eye(3), (5, 1, 1)), t)
    with pytest.raises(DegenerateAlignmentError, match="degenerate alignment"):
        align_umeyama(P, P)
    still = PoseTrajectory(np.tile(np.eye(3), (4, 1, 1)), np.ones((4, 3)))
    with pytest.raises(DegenerateAlignmentError):
        ate(still, still)


def test_alignment_input_errors(rng):
    P = random_trajectory(rng, 5)
    with pytest.raises(AlignmentError):
        align_umeyama(P, random_trajectory(rng, 6))
    short = random_trajectory(rng, 2)
    with pytest.raises(AlignmentError):
        align_umeyama(short, short)


def test_ate_is_zero_for_matching_trajectories(rng):
    Q = random_trajectory(rng)
    assert ate(Q, Q) == pytest.approx(0.0, abs=1e-10)
    assert ate(Q.transformed(random_transform(rng)), Q) == pytest.approx(0.0, abs=1e-9)


def test_ate_invariant_to_a_global_transform_of_the_estimate(rng):
    Q = random_trajectory(rng)
    P = PoseTrajectory(Q.R, Q.t + rng.normal(size=Q.t.shape) * 0.3)
    assert ate(P.transformed(random_transform(rng)), Q) == pytest.approx(ate(P, Q), abs=1e-9)


def test_ate_with_fixed_magnitude_noise(rng):
    eps = 0.05
    n = 30
    Q = PoseTrajectory(np.tile(np.eye(3), (n, 1, 1)), rng.normal(size=(n, 3)) * 10)
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    P = PoseTrajectory(Q.R, Q.t + eps * dirs)

    value = ate(P, Q)
    assert value <= eps + 1e-12

    Pc, Qc = P.t - P.t.mean(axis=0), Q.t - Q.t.mean(axis=0)
    rot, _ = Rotation.align_vectors(Qc, Pc)
    resid = rot.apply(Pc) - Qc
    assert value == pytest.approx(np.sqrt(np.mean(np.sum(resid**2, axis=1))), rel=1e-8)


def test_rpe_of_identical_trajectories(rng):
    Q = random_trajectory(rng)
    trans, rot = rpe(Q, Q)
    assert trans == pytest.approx(0.0, abs=1e-12)
    assert rot == pytest.approx(0.0, abs=1e-7)


def test_rpe_speed_mismatch():
    trans, rot = rpe(straight_line(10, 1.1), straight_line(10, 1.0), delta=1)
    assert trans == pytest.approx(0.1)
    assert rot == 0.0


def naive_rpe(P, Q, delta):
    def mat(traj, i):
        M = np.eye(4)
        M[:3, :3], M[:3, 3] = traj.R[i], traj.t[i]
        return M

    trans, rot = [], []
    for i in range(len(P) - delta):
        rel_p = np.linalg.inv(mat(P, i)) @ mat(P, i + delta)
        rel_q = np.linalg.inv(mat(Q, i)) @ mat(Q, i + delta)
        E = np.linalg.inv(rel_p) @ rel_q
        trans.append(np.linalg.norm(E[:3, 3]))
        rot.append(np.arccos(np.clip((np.trace(E[:3, :3]) - 1) / 2, -1, 1)))
    return np.sqrt(np.mean(np.square(trans))), np.sqrt(np.mean(np.square(rot)))


@pytest.mark.parametrize("delta", [1, 3, 7])
def test_rpe_matches_explicit_inverses(rng, delta):
    P, Q = random_trajectory(rng), random_trajectory(rng)
    trans, rot = rpe(P, Q, delta)
    expected_trans, expected_rot = naive_rpe(P, Q, delta)
    assert trans == pytest.approx(expected_trans, abs=1e-10)
    assert rot == pytest.approx(expected_rot, abs=1e-9)


def test_rpe_ignores_global_frames(rng):
    P, Q = random_trajectory(rng), random_trajectory(rng)
    base = rpe(P, Q, 2)
    moved = rpe(P.transformed(random_transform(rng)), Q.transformed(random_transform(rng)), 2)
    assert_allclose(moved, base, atol=1e-10)


def test_rpe_delta_range(rng):
    P = random_trajectory(rng, 5)
    with pytest.raises(AlignmentError):
        rpe(P, P, delta=0)
    with pytest.raises(AlignmentError):
        rpe(P, P, delta=5)


def test_kitti_rows_and_matrices(rng):
    P = random_trajectory(rng, 4)
    rows = P.kitti_rows()
    assert rows.shape == (4, 12)
    again = PoseTrajectory.from_matrices(rows)
    assert_allclose(again.R, P.R)
    assert_allclose(again.t, P.t)
    homogeneous = np.tile(np.eye(4), (4, 1, 1))
    homogeneous[:, :3, :] = rows.reshape(4, 3, 4)
    assert_allclose(PoseTrajectory.from_matrices(homogeneous).t, P.t)


def test_rotations_must_be_proper():
    with pytest.raises(AlignmentError):
        RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
    with pytest.raises(AlignmentError):
        PoseTrajectory(np.tile(2 * np.eye(3), (2, 1, 1)), np.zeros((2, 3)))


def test_rigid_transform_inverse(rng):
    S = random_transform(rng)
    x = rng.normal(size=(5, 3))
    assert_allclose(S.inverse().apply(S.apply(x)), x, atol=1e-12)
    assert_allclose(S.R @ S.inverse().R, np.eye(3), atol=1e-12)
    assert_allclose(S.apply(S.inverse().t), np.zeros(3), atol=1e-12)


@pytest.mark.slow
def test_ate_invariant_to_a_global_transform_full_sweep():
    rng = np.random.default_rng(8)
    for _ in range(20):
        Q = random_trajectory(rng, 100)
        P = PoseTrajectory(Q.R, Q.t + rng.normal(size=Q.t.shape) * 0.3)
        assert ate(P.transformed(random_transform(rng)), Q) == pytest.approx(ate(P, Q), abs=1e-9)
