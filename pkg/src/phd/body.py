"""Differentiable counterparts of the kinematics and camera functions, plus the
flat pose-vector layout shared by the regressor, the pose-space autoregressor
and the losses.

Layout of a pose vector: ``J*3`` axis-angle components (joint-major) followed
by ``B`` shape coefficients. A full state vector appends the camera
``[s, tx, ty]``.
"""
from __future__ import annotations

import numpy as np

from .autodiff import Tensor, as_tensor, concat, rodrigues, stack, tsum
from .autodiff.tensor import matmul
from .kinematics import SkeletonTemplate


class PoseLayout:
    def __init__(self, num_joints: int, num_betas: int):
        self.num_joints = num_joints
        self.num_betas = num_betas

    @property
    def pose_dim(self) -> int:
        return 3 * self.num_joints + self.num_betas

    @property
    def state_dim(self) -> int:
        return self.pose_dim + 3

    def split_pose(self, vec):
        """``(..., pose_dim)`` -> theta ``(..., J, 3)``, beta ``(..., B)``; works on arrays and Tensors."""
        j3 = 3 * self.num_joints
        lead = vec.shape[:-1]
        theta = vec[..., :j3].reshape(lead + (self.num_joints, 3))
        beta = vec[..., j3:j3 + self.num_betas]
        return theta, beta

    def split_state(self, vec):
        theta, beta = self.split_pose(vec[..., :self.pose_dim])
        return theta, beta, vec[..., self.pose_dim:self.pose_dim + 3]

    def join_pose(self, theta, beta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        lead = theta.shape[:-2]
        return np.concatenate([theta.reshape(lead + (-1,)), np.asarray(beta, dtype=np.float64)], axis=-1)

    def mean_state(self) -> np.ndarray:
        """Zero pose, zero shape, camera (1, 0, 0)."""
        out = np.zeros(self.state_dim)
        out[self.pose_dim] = 1.0
        return out


def forward_kinematics(pose, beta, skel: SkeletonTemplate) -> Tensor:
    """Tensor FK over a flat batch: pose ``(N, J, 3)``, beta ``(N, B)`` -> joints ``(N, J, 3)``."""
    pose, beta = as_tensor(pose), as_tensor(beta)
    n, nj = pose.shape[0], skel.num_joints
    basis = skel.shape_basis.reshape(nj * 3, skel.num_betas)
    offsets = (beta @ Tensor(basis.T)).reshape((n, nj, 3)) + skel.rest_offsets
    rot = rodrigues(pose)
    acc = [None] * nj
    pos = [None] * nj
    acc[0] = rot[:, 0]
    pos[0] = matmul(acc[0], offsets[:, 0].reshape((n, 3, 1))).reshape((n, 3))
    for i in range(1, nj):
        p = int(skel.parent[i])
        pos[i] = pos[p] + matmul(acc[p], offsets[:, i].reshape((n, 3, 1))).reshape((n, 3))
        acc[i] = matmul(acc[p], rot[:, i])
    return stack(pos, axis=1)


def project(joints, cam) -> Tensor:
    """joints ``(N, J, 3)``, cam ``(N, 3)`` -> keypoints ``(N, J, 2)``."""
    joints, cam = as_tensor(joints), as_tensor(cam)
    n = cam.shape[0]
    return joints[:, :, 0:2] * cam[:, 0:1].reshape((n, 1, 1)) + cam[:, 1:3].reshape((n, 1, 2))


def fit_camera(x_orth, x_gt, vis, eps=1e-12):
    """Closed-form visible-point camera fit, differentiable in ``x_orth``.

    Returns the camera ``(N, 3)`` and the fitted keypoints ``(N, J, 2)``.
    ``x_gt`` and ``vis`` are constants.
    """
    x = as_tensor(x_orth)
    x_gt = np.asarray(x_gt, dtype=np.float64)
    w = np.asarray(vis, dtype=np.float64)[..., None]
    count = np.maximum(w.sum(axis=1, keepdims=True), 1.0)
    mean_b = (w * x_gt).sum(axis=1, keepdims=True) / count
    bc = (x_gt - mean_b) * w
    mean_a = tsum(x * w, axis=1, keepdims=True) / count
    ac = (x - mean_a) * w
    num = tsum(tsum(ac * bc, axis=2), axis=1, keepdims=True)
    den = tsum(tsum(ac * ac, axis=2), axis=1, keepdims=True) + eps
    s = num / den                                   # (N, 1)
    t = mean_b[:, 0, :] - mean_a.reshape((x.shape[0], 2)) * s
    fitted = x * s.reshape((x.shape[0], 1, 1)) + t.reshape((x.shape[0], 1, 2))
    return concat([s, t], axis=1), fitted
