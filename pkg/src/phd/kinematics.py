"""Skeletal body model: axis-angle rotations, linear shape offsets and forward kinematics.

Joint 0 is the root. Pose arrays have shape ``(..., 1+K, 3)``, shape coefficient
arrays ``(..., B)``; leading batch axes are broadcast through every function.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import InvalidArgumentError

SMALL_ANGLE = 1e-8

JOINT_NAMES = (
    "pelvis", "neck",
    "l_hip", "l_knee", "l_ankle",
    "r_hip", "r_knee", "r_ankle",
    "l_shoulder", "l_elbow", "l_wrist",
    "r_shoulder", "r_elbow", "r_wrist",
)
PARENTS = (-1, 0, 0, 2, 3, 0, 5, 6, 1, 8, 9, 1, 11, 12)
REST_OFFSETS = (
    (0.0, 0.0, 0.0),
    (0.0, 0.55, 0.0),
    (0.10, -0.06, 0.0), (0.0, -0.42, 0.0), (0.0, -0.40, 0.0),
    (-0.10, -0.06, 0.0), (0.0, -0.42, 0.0), (0.0, -0.40, 0.0),
    (0.18, -0.03, 0.0), (0.0, -0.28, 0.0), (0.0, -0.25, 0.0),
    (-0.18, -0.03, 0.0), (0.0, -0.28, 0.0), (0.0, -0.25, 0.0),
)


@dataclass(frozen=True)
class SkeletonTemplate:
    parent: np.ndarray        # (J,) int
    rest_offsets: np.ndarray  # (J, 3) meters
    shape_basis: np.ndarray   # (J, 3, B) meters per unit coefficient
    joint_names: tuple

    def __post_init__(self):
        parent = np.asarray(self.parent)
        n = len(parent)
        if n == 0 or parent[0] != -1:
            raise InvalidArgumentError("parent[0] must be -1")
        if any(not (0 <= parent[i] < i) for i in range(1, n)):
            raise InvalidArgumentError("parents must be topologically ordered")
        if self.rest_offsets.shape != (n, 3):
            raise InvalidArgumentError("rest_offsets must be (J, 3)")
        if self.shape_basis.ndim != 3 or self.shape_basis.shape[:2] != (n, 3):
            raise InvalidArgumentError("shape_basis must be (J, 3, B)")
        if len(self.joint_names) != n:
            raise InvalidArgumentError("one name per joint required")

    @property
    def num_joints(self) -> int:
        return len(self.parent)

    @property
    def num_betas(self) -> int:
        return self.shape_basis.shape[2]

    def to_json(self) -> str:
        doc = {
            "parent": [int(p) for p in self.parent],
            "rest_offsets": self.rest_offsets.tolist(),
            "shape_basis": self.shape_basis.tolist(),
            "joint_names": list(self.joint_names),
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "SkeletonTemplate":
        doc = json.loads(text)
        return cls(
            parent=np.asarray(doc["parent"], dtype=np.int64),
            rest_offsets=np.asarray(doc["rest_offsets"], dtype=np.float64),
            shape_basis=np.asarray(doc["shape_basis"], dtype=np.float64),
            joint_names=tuple(doc["joint_names"]),
        )


def build_default_skeleton(num_betas: int = 4, seed: int = 0, effect: float = 0.05) -> SkeletonTemplate:
    """Hand-authored 14-joint tree with a seeded orthogonal shape basis.

    Each basis direction is scaled so its largest per-coordinate effect is
    ``effect`` meters. The root row is zero so the root stays at the origin.
    """
    n = len(PARENTS)
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((3 * (n - 1), num_betas)))
    q = q / np.abs(q).max(axis=0) * effect
    basis = np.zeros((n, 3, num_betas))
    basis[1:] = q.reshape(n - 1, 3, num_betas)
    return SkeletonTemplate(
        parent=np.asarray(PARENTS, dtype=np.int64),
        rest_offsets=np.asarray(REST_OFFSETS, dtype=np.float64),
        shape_basis=basis,
        joint_names=JOINT_NAMES,
    )


def load_skeleton() -> SkeletonTemplate:
    """The checked-in skeleton fixture."""
    text = resources.files("phd.fixtures").joinpath("skeleton.json").read_text()
    return SkeletonTemplate.from_json(text)


def _check_finite(x, name):
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError(f"{name} contains non-finite values")


def skew(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def rodrigues_coefficients(theta_sq: np.ndarray):
    """``sin(t)/t`` and ``(1-cos(t))/t**2`` as functions of ``t**2``.

    Below ``SMALL_ANGLE`` the second-order Taylor expansion is used.
    """
    theta_sq = np.asarray(theta_sq, dtype=np.float64)
    small = theta_sq < SMALL_ANGLE ** 2
    safe = np.where(small, 1.0, theta_sq)
    theta = np.sqrt(safe)
    a = np.where(small, 1.0 - theta_sq / 6.0, np.sin(theta) / theta)
    b = np.where(small, 0.5 - theta_sq / 24.0, (1.0 - np.cos(theta)) / safe)
    return a, b


def rodrigues(aa: np.ndarray) -> np.ndarray:
    """Axis-angle ``(..., 3)`` to rotation matrices ``(..., 3, 3)``."""
    aa = np.asarray(aa, dtype=np.float64)
    if aa.shape[-1:] != (3,):
        raise InvalidArgumentError("axis-angle vectors must have a trailing dimension of 3")
    _check_finite(aa, "axis-angle")
    a, b = rodrigues_coefficients(np.sum(aa * aa, axis=-1))
    k = skew(aa)
    eye = np.broadcast_to(np.eye(3), k.shape)
    return eye + a[..., None, None] * k + b[..., None, None] * (k @ k)


def apply_shape(beta: np.ndarray, skel: SkeletonTemplate) -> np.ndarray:
    """Shaped bone offsets ``(..., J, 3)``: rest offsets plus the basis combination."""
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape[-1:] != (skel.num_betas,):
        raise InvalidArgumentError(
            f"expected {skel.num_betas} shape coefficients, got {beta.shape[-1:]}")
    return skel.rest_offsets + np.einsum("jcb,...b->...jc", skel.shape_basis, beta)


def forward_kinematics(pose: np.ndarray, beta: np.ndarray, skel: SkeletonTemplate) -> np.ndarray:
    """Root-relative joint positions ``(..., J, 3)``.

    ``pose`` holds one axis-angle per joint, index 0 being the global rotation.
    Joint ``i`` sits at its parent's accumulated transform applied to its
    shaped offset; the root's own offset is rotated by the global rotation.
    """
    pose = np.asarray(pose, dtype=np.float64)
    n = skel.num_joints
    if pose.shape[-2:] != (n, 3):
        raise InvalidArgumentError(f"pose must be (..., {n}, 3), got {pose.shape}")
    offsets = apply_shape(beta, skel)
    batch = np.broadcast_shapes(pose.shape[:-2], offsets.shape[:-2])
    rot = np.broadcast_to(rodrigues(pose), batch + (n, 3, 3))
    offsets = np.broadcast_to(offsets, batch + (n, 3))

    acc = [None] * n
    pos = [None] * n
    acc[0] = rot[..., 0, :, :]
    pos[0] = np.einsum("...ij,...j->...i", acc[0], offsets[..., 0, :])
    for i in range(1, n):
        p = skel.parent[i]
        pos[i] = pos[p] + np.einsum("...ij,...j->...i", acc[p], offsets[..., i, :])
        acc[i] = acc[p] @ rot[..., i, :, :]
    return np.stack(pos, axis=-2)


def bone_lengths(joints: np.ndarray, skel: SkeletonTemplate) -> np.ndarray:
    """``(..., J-1)`` distances from each non-root joint to its parent."""
    child = np.arange(1, skel.num_joints)
    diff = joints[..., child, :] - joints[..., skel.parent[child], :]
    return np.linalg.norm(diff, axis=-1)
