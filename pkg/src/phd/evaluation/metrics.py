"""Procrustes-aligned reconstruction error, MPJPE and PCK."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateGeometryError, InvalidArgumentError


@dataclass(frozen=True)
class SimilarityTransform:
    rotation: np.ndarray   # (3, 3)
    scale: float
    translation: np.ndarray  # (3,)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.scale * np.asarray(x) @ self.rotation.T + self.translation


def _procrustes_batch(x, y):
    """Similarity fit of ``x`` onto ``y`` over leading axes: returns (R, s, t, aligned)."""
    mx = x.mean(axis=-2, keepdims=True)
    my = y.mean(axis=-2, keepdims=True)
    x0 = x - mx
    y0 = y - my
    var_x = np.sum(x0 * x0, axis=(-2, -1))
    h = np.swapaxes(x0, -1, -2) @ y0                   # (..., 3, 3)
    u, sv, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(np.swapaxes(vt, -1, -2) @ np.swapaxes(u, -1, -2)))
    d = np.where(d == 0, 1.0, d)
    fix = np.ones(sv.shape)
    fix[..., -1] = d
    rot = np.swapaxes(vt, -1, -2) @ (fix[..., :, None] * np.swapaxes(u, -1, -2))
    scale = np.sum(sv * fix, axis=-1) / np.where(var_x > 0, var_x, 1.0)
    trans = my[..., 0, :] - scale[..., None] * np.einsum("...ij,...j->...i", rot, mx[..., 0, :])
    aligned = scale[..., None, None] * x @ np.swapaxes(rot, -1, -2) + trans[..., None, :]
    return rot, scale, trans, aligned


def _check_points(x, name):
    x0 = x - x.mean(axis=-2, keepdims=True)
    sv = np.linalg.svd(x0, compute_uv=False)
    if np.any(sv[..., 0] <= 1e-12) or np.any(sv[..., 1] <= 1e-9 * sv[..., 0]):
        raise DegenerateGeometryError(f"{name} points are coincident or collinear")


def procrustes_align(x, y):
    """Similarity transform ``s R x + t`` best matching ``y`` in least squares.

    Returns ``(transform, aligned_x, error)`` where ``error`` is the mean
    per-joint distance after alignment (input units).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 2 or x.shape[1] != 3:
        raise InvalidArgumentError(f"procrustes_align expects two (J, 3) arrays, got {x.shape} and {y.shape}")
    if x.shape[0] < 3:
        raise DegenerateGeometryError("need at least 3 points")
    _check_points(x, "source")
    rot, scale, trans, aligned = _procrustes_batch(x, y)
    err = float(np.linalg.norm(aligned - y, axis=-1).mean())
    return SimilarityTransform(rot, float(scale), trans), aligned, err


def reconstruction_error(pred, gt) -> np.ndarray:
    """Mean per-joint error in millimeters after Procrustes alignment (meters in).

    Accepts ``(J, 3)`` or stacked ``(..., J, 3)``; returns a float or an array
    over the leading axes.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.shape[-1] != 3:
        raise InvalidArgumentError(f"shape mismatch {pred.shape} vs {gt.shape}")
    _check_points(pred, "predicted")
    _, _, _, aligned = _procrustes_batch(pred, gt)
    err = np.linalg.norm(aligned - gt, axis=-1).mean(axis=-1) * 1000.0
    return float(err) if err.ndim == 0 else err


def mpjpe(pred, gt) -> np.ndarray:
    """Mean per-joint error in millimeters without alignment."""
    err = np.linalg.norm(np.asarray(pred) - np.asarray(gt), axis=-1).mean(axis=-1) * 1000.0
    return float(err) if np.ndim(err) == 0 else err


def pck_scale(gt, vis) -> np.ndarray:
    """Max of bounding-box height and width of the visible ground-truth keypoints."""
    gt = np.asarray(gt, dtype=np.float64)
    vis = np.asarray(vis, dtype=bool)
    big = np.where(vis[..., None], gt, np.inf)
    small = np.where(vis[..., None], gt, -np.inf)
    extent = small.max(axis=-2) - big.min(axis=-2)
    extent = np.where(np.isfinite(extent), extent, 0.0)
    return extent.max(axis=-1)


def pck(pred, gt, vis, alpha=0.05, scale=None):
    """Percentage of visible keypoints within ``alpha * scale`` of ground truth.

    Works on ``(J, 2)`` or stacked inputs; ``scale`` defaults to :func:`pck_scale`.
    Frames without visible keypoints give NaN.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    vis = np.asarray(vis, dtype=bool)
    if pred.shape != gt.shape or vis.shape != gt.shape[:-1]:
        raise InvalidArgumentError(f"shape mismatch {pred.shape}, {gt.shape}, {vis.shape}")
    scale = pck_scale(gt, vis) if scale is None else np.asarray(scale, dtype=np.float64)
    count = vis.sum(axis=-1)
    if np.any(scale[count > 0] <= 0) if np.ndim(scale) else (scale <= 0 and np.any(count > 0)):
        raise InvalidArgumentError("PCK scale must be positive")
    dist = np.linalg.norm(pred - gt, axis=-1)
    thr = alpha * np.asarray(scale)[..., None]
    hit = (dist <= thr) & vis
    with np.errstate(invalid="ignore", divide="ignore"):
        out = 100.0 * hit.sum(axis=-1) / count
    out = np.where(count > 0, out, np.nan)
    return float(out) if out.ndim == 0 else out
