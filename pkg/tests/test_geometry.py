import math

import numpy as np
import pytest

from polemap.geometry import PoseSE3, circular_diff_deg, rotation_about_z


def random_pose(rng):
    quat = rng.standard_normal(4)
    quat /= np.linalg.norm(quat)
    return PoseSE3.from_quaternion(rng.uniform(-10, 10, 3), quat)


def test_identity_is_noop():
    pose = PoseSE3.identity()
    p = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(pose.apply(p), p)
    assert pose.is_valid()


def test_compose_matches_matrix_product(rng):
    for _ in range(50):
        a, b = random_pose(rng), random_pose(rng)
        combined = a @ b
        expected = a.as_matrix() @ b.as_matrix()
        assert np.allclose(combined.as_matrix(), expected, atol=1e-12)


def test_compose_then_apply_equals_sequential(rng):
    a, b = random_pose(rng), random_pose(rng)
    pts = rng.uniform(-5, 5, (40, 3))
    assert np.allclose((a @ b).apply(pts), a.apply(b.apply(pts)), atol=1e-12)


def test_inverse_roundtrip(rng):
    for _ in range(20):
        pose = random_pose(rng)
        back = pose.inverse() @ pose
        assert np.allclose(back.rotation, np.eye(3), atol=1e-12)
        assert np.allclose(back.translation, 0.0, atol=1e-12)


def test_apply_single_and_batch_agree(rng):
    pose = random_pose(rng)
    pts = rng.uniform(-5, 5, (7, 3))
    batch = pose.apply(pts)
    for k in range(7):
        assert np.allclose(batch[k], pose.apply(pts[k]), atol=1e-12)


def test_matrix_roundtrip(rng):
    pose = random_pose(rng)
    again = PoseSE3.from_matrix(pose.as_matrix())
    assert np.array_equal(again.rotation, pose.rotation)
    assert np.array_equal(again.translation, pose.translation)


def test_quaternion_roundtrip_and_sign(rng):
    for _ in range(30):
        pose = random_pose(rng)
        q = pose.quaternion_xyzw()
        assert q[3] >= 0.0
        again = PoseSE3.from_quaternion(pose.translation, q)
        assert np.allclose(again.rotation, pose.rotation, atol=1e-12)


def test_rotation_about_z_quarter_turn():
    rot = rotation_about_z(math.pi / 2)
    assert np.allclose(rot @ np.array([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-15)
    assert np.allclose(rot @ np.array([0.0, 1.0, 0.0]), [-1.0, 0.0, 0.0], atol=1e-15)


def test_invalid_rotation_rejected():
    bad = PoseSE3(np.eye(3) * 2.0, np.zeros(3))
    assert not bad.is_valid()
    with pytest.raises(ValueError, match="orthonormal"):
        bad.require_valid()
    scaled = PoseSE3(np.full((3, 3), np.nan), np.zeros(3))
    assert not scaled.is_valid()


def test_renormalized_repairs_drift(rng):
    pose = random_pose(rng)
    # accumulate round-off by composing many small rotations
    step = PoseSE3(rotation_about_z(1e-3), np.zeros(3))
    for _ in range(20000):
        pose = pose @ step
    repaired = pose.renormalized()
    assert repaired.is_valid()
    assert np.allclose(repaired.rotation, pose.rotation, atol=1e-9)


def test_post_init_copies_and_reshapes():
    rot = np.eye(3)
    pose = PoseSE3(rot, [1.0, 2.0, 3.0])
    rot[0, 0] = 99.0
    assert pose.rotation[0, 0] == 1.0
    assert pose.translation.shape == (3,)


def test_circular_diff_wraps():
    assert circular_diff_deg(10.0, 350.0) == 20.0
    assert circular_diff_deg(350.0, 10.0) == 20.0
    assert circular_diff_deg(0.0, 180.0) == 180.0
    assert circular_diff_deg(90.0, 90.0) == 0.0
    assert circular_diff_deg(-170.0, 170.0) == 20.0
