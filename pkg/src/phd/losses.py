"""Training objectives. Every term is mean-reduced over its elements so that
magnitudes stay comparable across skeleton, shape and strip sizes."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from . import body
from .autodiff import Tensor, as_tensor, concat, masked_mse, mse, norm, relu, square, tsum
from .errors import InvalidArgumentError
from .kinematics import SkeletonTemplate

POSE_DECAY = 1e-3


@dataclass(frozen=True)
class LossWeights:
    w_3d: float = 1.0
    w_2d: float = 1.0
    w_prior_pose: float = 0.1
    w_prior_beta: float = 0.1
    w_const: float = 1.0
    w_strip: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v < 0:
                raise InvalidArgumentError(f"loss weight {f.name} must be finite and >= 0, got {v}")

    @classmethod
    def from_dict(cls, d: dict) -> "LossWeights":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidArgumentError(f"unknown loss weights: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FrameTargets:
    """Ground truth for a block of frames, leading shape ``(N, T)``.

    ``joints``/``pose``/``shape`` may be ``None`` when 3D supervision is absent.
    """
    keypoints: np.ndarray              # (N, T, J, 2)
    visibility: np.ndarray             # (N, T, J)
    joints: Optional[np.ndarray] = None  # (N, T, J, 3)
    pose: Optional[np.ndarray] = None    # (N, T, J, 3)
    shape: Optional[np.ndarray] = None   # (N, T, B)

    def frames(self, start, stop) -> "FrameTargets":
        def cut(a):
            return None if a is None else a[:, start:stop]
        return FrameTargets(cut(self.keypoints), cut(self.visibility), cut(self.joints),
                            cut(self.pose), cut(self.shape))

    @property
    def has_3d(self) -> bool:
        return self.joints is not None and self.pose is not None and self.shape is not None


# ---------------------------------------------------------------- individual terms

def loss_3d(pred_joints, pred_theta, pred_beta, gt_joints, gt_theta, gt_beta):
    if gt_joints is None or gt_theta is None or gt_beta is None:
        return None
    return (mse(pred_joints, np.asarray(gt_joints)) + mse(pred_theta, np.asarray(gt_theta))
            + mse(pred_beta, np.asarray(gt_beta)))


def loss_2d(pred_kp, gt_kp, vis):
    """Mean squared error over the coordinates of visible keypoints."""
    vis = np.asarray(vis, dtype=np.float64)
    pred_kp = as_tensor(pred_kp)
    if vis.shape != pred_kp.shape[:-1]:
        raise InvalidArgumentError(f"visibility shape {vis.shape} does not match keypoints {pred_kp.shape}")
    return masked_mse(pred_kp, np.asarray(gt_kp, dtype=np.float64), vis[..., None])


def loss_const(betas):
    """``sum_t mean_b (beta_t - beta_{t+1})**2`` over ``(N, T, B)`` (or ``(T, B)``), averaged over N."""
    betas = as_tensor(betas)
    if betas.ndim == 2:
        betas = betas.reshape((1,) + betas.shape)
    n, t, b = betas.shape
    if t < 2:
        warnings.warn("loss_const needs at least two frames; returning 0", stacklevel=2)
        return Tensor(0.0)
    d = betas[:, 1:] - betas[:, :-1]
    return tsum(square(d)) * (1.0 / (n * b))


def loss_strip(pred, target, squared=False, normalize=True):
    """Mean over steps of ``||target_t - pred_t||`` (squared norm if ``squared``).

    With ``normalize`` the distance is taken per element: the norm is divided
    by ``sqrt(D)`` (an RMS distance) and the squared norm by ``D``, so the term
    stays on the scale of the pose terms whatever the strip width.
    """
    pred = as_tensor(pred)
    target = as_tensor(target)
    if pred.shape != target.shape:
        raise InvalidArgumentError(f"strip sequences differ in shape: {pred.shape} vs {target.shape}")
    if pred.data.size == 0:
        return Tensor(0.0)
    d = target - pred
    per_step = tsum(square(d), axis=-1) if squared else norm(d, axis=-1)
    if normalize:
        dim = pred.shape[-1]
        per_step = per_step * (1.0 / (dim if squared else np.sqrt(dim)))
    return per_step.mean()


def loss_priors(theta, beta, decay=POSE_DECAY):
    """Returns ``(pose_term, shape_term)``.

    pose: per-joint soft limit ``max(0, |aa_j| - pi)**2`` summed over joints and
    averaged over frames, plus ``decay * mean(theta**2)``. shape: ``mean(beta**2)``.
    """
    theta, beta = as_tensor(theta), as_tensor(beta)
    angles = norm(theta, axis=-1)                              # (..., J)
    frames = max(1, int(np.prod(angles.shape[:-1])))
    pose = tsum(square(relu(angles - np.pi))) * (1.0 / frames)
    if decay:
        pose = pose + square(theta).mean() * decay
    shape = square(beta).mean() if beta.data.size else Tensor(0.0)
    return pose, shape


# ---------------------------------------------------------------- readout helpers

def readout(states, layout: body.PoseLayout, skel: SkeletonTemplate, targets: FrameTargets,
            fit_cam=False):
    """Turn ``(N, T, state_dim)`` (or pose-only ``(N, T, pose_dim)``) vectors into
    theta, beta, joints and 2D keypoints. ``fit_cam`` replaces the camera by the
    closed-form fit against the visible ground-truth keypoints."""
    states = as_tensor(states)
    n, t = states.shape[:2]
    nj, nb = layout.num_joints, layout.num_betas
    flat = states.reshape((n * t, states.shape[-1]))
    theta, beta = layout.split_pose(flat[:, :layout.pose_dim])
    joints = body.forward_kinematics(theta, beta, skel)
    gt_kp = np.asarray(targets.keypoints).reshape(n * t, nj, 2)
    vis = np.asarray(targets.visibility).reshape(n * t, nj)
    if fit_cam or states.shape[-1] == layout.pose_dim:
        _, kp = body.fit_camera(joints[:, :, 0:2], gt_kp, vis)
    else:
        kp = body.project(joints, flat[:, layout.pose_dim:layout.pose_dim + 3])
    return {
        "theta": theta.reshape((n, t, nj, 3)),
        "beta": beta.reshape((n, t, nb)),
        "joints": joints.reshape((n, t, nj, 3)),
        "keypoints": kp.reshape((n, t, nj, 2)),
    }


def frame_terms(out: dict, targets: FrameTargets, decay=POSE_DECAY) -> dict:
    """Per-frame data and prior terms for a readout against ``targets``."""
    terms = {"2d": loss_2d(out["keypoints"], targets.keypoints, targets.visibility)}
    if targets.has_3d:
        terms["3d"] = loss_3d(out["joints"], out["theta"], out["beta"],
                              targets.joints, targets.pose, targets.shape)
    terms["prior_pose"], terms["prior_beta"] = loss_priors(out["theta"], out["beta"], decay)
    return terms


def weighted_frame_loss(terms: dict, w: LossWeights):
    total = terms["2d"] * w.w_2d + terms["prior_pose"] * w.w_prior_pose + terms["prior_beta"] * w.w_prior_beta
    if "3d" in terms:
        total = total + terms["3d"] * w.w_3d
    return total


def _values(prefix, terms):
    return {f"{prefix}{k}": float(v.data) for k, v in terms.items()}


# ---------------------------------------------------------------- totals

def total_encoder_loss(states, offset_states: dict, targets: FrameTargets, layout, skel,
                       weights: LossWeights = LossWeights(), decay=POSE_DECAY):
    """Per-frame terms plus shape consistency plus offset readout terms.

    ``states``: regressed ``(N, T, state_dim)``; ``offset_states[dt]``: states read
    from strips ``t`` for frames ``t + dt``, shape ``(N, T, state_dim)``; entries
    whose target frame falls before the sequence start are dropped.
    Returns ``(total, {term: float})``.
    """
    out = readout(states, layout, skel, targets)
    terms = frame_terms(out, targets, decay)
    total = weighted_frame_loss(terms, weights)
    log = _values("", terms)
    lc = loss_const(out["beta"])
    total = total + lc * weights.w_const
    log["const"] = float(lc.data)
    t = states.shape[1]
    for dt in sorted(offset_states):
        if t + dt <= 0:
            continue
        src = as_tensor(offset_states[dt])[:, -dt:]
        o_out = readout(src, layout, skel, targets.frames(0, t + dt))
        o_terms = frame_terms(o_out, targets.frames(0, t + dt), decay)
        total = total + weighted_frame_loss(o_terms, weights)
        log.update(_values(f"offset{dt}_", o_terms))
    log["total"] = float(total.data)
    return total, log


def total_ar_loss(observed_states, future_states, targets: FrameTargets, layout, skel,
                  weights: LossWeights = LossWeights(), pred_strips=None, target_strips=None,
                  strip_squared=False, decay=POSE_DECAY):
    """Loss over a window: observed frames (predicted camera), future frames
    (fitted camera), shape consistency across the whole window and the strip
    distillation term between predicted and target strips.

    ``observed_states`` ``(N, C, *)`` may be ``None``; ``future_states`` ``(N, H, *)``.
    ``targets`` covers the ``C + H`` window frames.
    """
    future_states = as_tensor(future_states)
    h = future_states.shape[1]
    c = 0 if observed_states is None else observed_states.shape[1]
    total = Tensor(0.0)
    log = {}
    betas = []
    if c:
        obs = readout(observed_states, layout, skel, targets.frames(0, c))
        o_terms = frame_terms(obs, targets.frames(0, c), decay)
        total = total + weighted_frame_loss(o_terms, weights)
        log.update(_values("obs_", o_terms))
        betas.append(obs["beta"])
    if h:
        fut = readout(future_states, layout, skel, targets.frames(c, c + h), fit_cam=True)
        f_terms = frame_terms(fut, targets.frames(c, c + h), decay)
        total = total + weighted_frame_loss(f_terms, weights)
        log.update(_values("fut_", f_terms))
        betas.append(fut["beta"])
    if betas and sum(b.shape[1] for b in betas) >= 2:
        lc = loss_const(concat(betas, axis=1) if len(betas) > 1 else betas[0])
        total = total + lc * weights.w_const
        log["const"] = float(lc.data)
    if pred_strips is not None and h and weights.w_strip > 0:
        ls = loss_strip(pred_strips, target_strips, strip_squared)
        total = total + ls * weights.w_strip
        log["strip"] = float(ls.data)
    log["total"] = float(total.data)
    return total, log
