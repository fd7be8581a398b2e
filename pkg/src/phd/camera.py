"""Weak-perspective projection and the closed-form camera fit."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, InsufficientDataError, InvalidArgumentError


@dataclass(frozen=True)
class WeakPerspectiveCamera:
    s: float
    t: tuple  # (tx, ty)

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.t[0], self.t[1]], dtype=np.float64)

    @classmethod
    def from_array(cls, arr) -> "WeakPerspectiveCamera":
        arr = np.asarray(arr, dtype=np.float64)
        return cls(float(arr[0]), (float(arr[1]), float(arr[2])))


def project(joints: np.ndarray, cam) -> np.ndarray:
    """Drop depth, scale and translate. ``cam`` is a camera or ``(..., 3)`` array [s, tx, ty]."""
    joints = np.asarray(joints, dtype=np.float64)
    cam = cam.as_array() if isinstance(cam, WeakPerspectiveCamera) else np.asarray(cam, dtype=np.float64)
    if not (np.all(np.isfinite(joints)) and np.all(np.isfinite(cam))):
        raise InvalidArgumentError("non-finite projection input")
    s = cam[..., 0, None, None]
    t = cam[..., None, 1:3]
    return s * joints[..., :2] + t


def fit_camera(x_orth, x_gt, vis) -> WeakPerspectiveCamera:
    """Least-squares scale and translation mapping visible ``x_orth`` onto ``x_gt``.

    Hidden keypoints do not enter the objective at all, whatever their values.
    """
    x_orth = np.asarray(x_orth, dtype=np.float64)
    x_gt = np.asarray(x_gt, dtype=np.float64)
    vis = np.asarray(vis, dtype=bool)
    if x_orth.shape != x_gt.shape or x_orth.shape[:-1] != vis.shape or x_orth.shape[-1] != 2:
        raise InvalidArgumentError("expected (J, 2) keypoints and (J,) visibility")
    if vis.sum() < 2:
        raise InsufficientDataError("camera fit needs at least two visible keypoints")
    a = x_orth[vis]
    b = x_gt[vis]
    mean_a = a.mean(axis=0)
    mean_b = b.mean(axis=0)
    ac = a - mean_a
    denom = np.sum(ac * ac)
    if denom <= 1e-300:
        raise DegenerateGeometryError("visible orthographic keypoints are all identical")
    s = np.sum((b - mean_b) * ac) / denom
    t = mean_b - s * mean_a
    return WeakPerspectiveCamera(float(s), (float(t[0]), float(t[1])))


def fit_camera_batch(x_orth, x_gt, vis) -> np.ndarray:
    """Vectorised ``fit_camera`` over leading axes; returns ``(..., 3)`` [s, tx, ty].

    Frames with fewer than two visible points or zero spread get the identity camera.
    """
    x_orth = np.asarray(x_orth, dtype=np.float64)
    x_gt = np.asarray(x_gt, dtype=np.float64)
    w = np.asarray(vis, dtype=np.float64)[..., None]
    n = w.sum(axis=-2)
    safe_n = np.maximum(n, 1.0)
    mean_a = (w * x_orth).sum(axis=-2) / safe_n
    mean_b = (w * x_gt).sum(axis=-2) / safe_n
    ac = (x_orth - mean_a[..., None, :]) * w
    bc = (x_gt - mean_b[..., None, :]) * w
    denom = np.sum(ac * ac, axis=(-2, -1))
    ok = (n[..., 0] >= 2) & (denom > 1e-300)
    s = np.where(ok, np.sum(ac * bc, axis=(-2, -1)) / np.where(ok, denom, 1.0), 1.0)
    t = np.where(ok[..., None], mean_b - s[..., None] * mean_a, 0.0)
    return np.concatenate([s[..., None], t], axis=-1)


def camera_objective(cam, x_orth, x_gt, vis) -> float:
    cam = cam.as_array() if isinstance(cam, WeakPerspectiveCamera) else np.asarray(cam, dtype=np.float64)
    vis = np.asarray(vis, dtype=bool)
    r = cam[0] * np.asarray(x_orth)[vis] + cam[1:3] - np.asarray(x_gt)[vis]
    return float(np.sum(r * r))
