import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import fk_recursive, rotation_by_quaternion, shape_offsets_loop
from phd.errors import InvalidArgumentError
from phd.kinematics import (SkeletonTemplate, apply_shape, bone_lengths, build_default_skeleton,
                            forward_kinematics, load_skeleton, rodrigues)

finite_aa = arrays(np.float64, 3, elements=st.floats(-4.0, 4.0))


def test_rodrigues_zero_is_identity():
    assert np.array_equal(rodrigues(np.zeros(3)), np.eye(3))


def test_rodrigues_half_turn_about_x():
    np.testing.assert_allclose(rodrigues([np.pi, 0, 0]), np.diag([1.0, -1.0, -1.0]), atol=1e-12)


def test_rodrigues_matches_quaternion_oracle():
    aa = np.array([0.3, -0.2, 0.1])
    np.testing.assert_allclose(rodrigues(aa), rotation_by_quaternion(aa), atol=1e-12)


def test_rodrigues_random_vs_quaternion(rng):
    for aa in rng.uniform(-3, 3, size=(200, 3)):
        np.testing.assert_allclose(rodrigues(aa), rotation_by_quaternion(aa), atol=1e-12)


def test_rodrigues_small_angle_branch():
    aa = np.array([3e-9, -1e-9, 2e-9])
    r = rodrigues(aa)
    np.testing.assert_allclose(r, rotation_by_quaternion(aa), atol=1e-15)


@given(finite_aa)
def test_rodrigues_orthonormal(aa):
    r = rodrigues(aa)
    np.testing.assert_allclose(r.T @ r, np.eye(3), atol=1e-12)
    assert abs(np.linalg.det(r) - 1.0) < 1e-12


@given(finite_aa)
def test_rodrigues_negation_is_transpose(aa):
    np.testing.assert_allclose(rodrigues(-aa), rodrigues(aa).T, atol=1e-12)


def test_rodrigues_rejects_non_finite():
    with pytest.raises(InvalidArgumentError):
        rodrigues([np.nan, 0, 0])


def test_fixture_matches_builder(skel):
    ref = build_default_skeleton()
    assert np.array_equal(skel.parent, ref.parent)
    assert np.array_equal(skel.rest_offsets, ref.rest_offsets)
    assert np.array_equal(skel.shape_basis, ref.shape_basis)
    assert skel.num_joints == 14 and skel.num_betas == 4


def test_skeleton_json_round_trip(skel):
    again = SkeletonTemplate.from_json(skel.to_json())
    assert np.array_equal(again.shape_basis, skel.shape_basis)
    assert again.joint_names == skel.joint_names


def test_skeleton_rejects_bad_parent(skel):
    with pytest.raises(InvalidArgumentError):
        SkeletonTemplate(np.array([-1, 2, 0]), np.zeros((3, 3)), np.zeros((3, 3, 1)), ("a", "b", "c"))


def test_apply_shape_zero_and_unit(skel):
    assert np.array_equal(apply_shape(np.zeros(4), skel), skel.rest_offsets)
    e1 = np.array([1.0, 0, 0, 0])
    np.testing.assert_allclose(apply_shape(e1, skel), skel.rest_offsets + skel.shape_basis[:, :, 0], atol=1e-15)


def test_apply_shape_matches_loop(skel, rng):
    for beta in rng.normal(size=(20, 4)):
        np.testing.assert_allclose(apply_shape(beta, skel), shape_offsets_loop(beta, skel), atol=1e-14)


def test_apply_shape_linear(skel, rng):
    b1, b2 = rng.normal(size=(2, 4))
    a, b = 0.7, -1.3
    d1 = apply_shape(b1, skel) - skel.rest_offsets
    d2 = apply_shape(b2, skel) - skel.rest_offsets
    np.testing.assert_allclose(apply_shape(a * b1 + b * b2, skel), a * d1 + b * d2 + skel.rest_offsets, atol=1e-14)


def test_apply_shape_dimension_mismatch(skel):
    with pytest.raises(InvalidArgumentError):
        apply_shape(np.zeros(3), skel)


def test_fk_zero_pose_is_cumulative_offsets(skel):
    joints = forward_kinematics(np.zeros((14, 3)), np.zeros(4), skel)
    expected = np.zeros((14, 3))
    for i in range(14):
        p = skel.parent[i]
        expected[i] = skel.rest_offsets[i] + (expected[p] if p >= 0 else 0.0)
    np.testing.assert_allclose(joints, expected, atol=1e-15)


def test_fk_matches_recursive_oracle(skel, rng):
    for _ in range(50):
        pose = rng.uniform(-1.5, 1.5, size=(14, 3))
        beta = rng.normal(size=4)
        np.testing.assert_allclose(forward_kinematics(pose, beta, skel), fk_recursive(pose, beta, skel), atol=1e-10)


def test_fk_root_rotation_equivariance(skel, rng):
    for _ in range(50):
        pose = rng.uniform(-1.5, 1.5, size=(14, 3))
        beta = rng.normal(size=4)
        root = pose[0].copy()
        pose[0] = 0.0
        base = forward_kinematics(pose, beta, skel)
        pose[0] = root
        np.testing.assert_allclose(forward_kinematics(pose, beta, skel), base @ rodrigues(root).T, atol=1e-10)


def test_fk_batched_equals_single(skel, rng):
    pose = rng.uniform(-1, 1, size=(5, 14, 3))
    beta = rng.normal(size=(5, 4))
    batch = forward_kinematics(pose, beta, skel)
    for i in range(5):
        np.testing.assert_allclose(batch[i], forward_kinematics(pose[i], beta[i], skel), atol=1e-14)


def test_bone_lengths_pose_independent(skel, rng):
    beta = rng.normal(size=4)
    ref = bone_lengths(forward_kinematics(np.zeros((14, 3)), beta, skel), skel)
    poses = rng.uniform(-np.pi, np.pi, size=(1000, 14, 3))
    lengths = bone_lengths(forward_kinematics(poses, beta, skel), skel)
    assert np.max(np.abs(lengths - ref)) < 1e-10


def test_fk_dimension_mismatch(skel):
    with pytest.raises(InvalidArgumentError):
        forward_kinematics(np.zeros((13, 3)), np.zeros(4), skel)
