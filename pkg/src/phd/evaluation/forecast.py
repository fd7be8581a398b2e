"""Turn trained models and baselines into :class:`Forecast` records on held-out
sequences, plus the per-window accuracy profile used for statue discovery."""
from __future__ import annotations

import numpy as np

from ..camera import fit_camera_batch
from ..kinematics import forward_kinematics
from .baselines import baseline_constant, baseline_nearest_neighbor, build_nn_database
from .metrics import pck, reconstruction_error
from .report import Forecast


def evaluation_windows(samples, conditioning=15, horizon=30, stride=25) -> list:
    """``(sequence index, start)`` for every ``stride``-th start with a full future."""
    out = []
    for i, s in enumerate(samples):
        for st in range(0, len(s) - conditioning - horizon + 1, stride):
            out.append((i, st))
    return out


def _joints_from_pose(layout, skel, pose_vec):
    theta, beta = layout.split_pose(np.asarray(pose_vec)[..., :layout.pose_dim])
    return forward_kinematics(theta, beta, skel)


def _gather_cond(samples, windows, conditioning):
    return np.stack([samples[i].features[st:st + conditioning] for i, st in windows])


def _records(samples, windows, pred_joints, conditioning, horizon):
    out = []
    for (i, st), pj in zip(windows, pred_joints):
        s = samples[i]
        sl = slice(st + conditioning, st + conditioning + horizon)
        out.append(Forecast(s.motif, pj, s.joints_3d[sl], s.keypoints_2d[sl], s.visibility[sl], i, st))
    return out


def latent_rollout_states(model, ar, cond_features, horizon) -> np.ndarray:
    """Encode ``(N, C, F)`` conditioning features, roll the strips forward and read states."""
    strips = model.encoder.encode(cond_features)
    future = ar.rollout(strips, horizon)
    return model.regressor.regress(future)


def forecast_latent(model, ar, samples, windows, conditioning=15, horizon=30) -> list:
    cond = _gather_cond(samples, windows, conditioning)
    states = latent_rollout_states(model, ar, cond, horizon)
    return _records(samples, windows, _joints_from_pose(model.layout, model.skel, states), conditioning, horizon)


def conditioning_poses(model, cond_features) -> np.ndarray:
    """Encoder pose vectors ``(N, C, pose_dim)`` for conditioning features."""
    return model.states(cond_features)[..., :model.layout.pose_dim]


def forecast_pose_ar(model, ar, samples, windows, conditioning=15, horizon=30) -> list:
    poses = conditioning_poses(model, _gather_cond(samples, windows, conditioning))
    future = ar.rollout(poses, horizon)
    return _records(samples, windows, _joints_from_pose(model.layout, model.skel, future), conditioning, horizon)


def forecast_constant(model, samples, windows, conditioning=15, horizon=30) -> list:
    poses = conditioning_poses(model, _gather_cond(samples, windows, conditioning))
    future = np.stack([baseline_constant(p, horizon) for p in poses])
    return _records(samples, windows, _joints_from_pose(model.layout, model.skel, future), conditioning, horizon)


def nn_database_from_samples(train_samples, skel, conditioning=15, horizon=30, stride=1):
    return build_nn_database([s.pose for s in train_samples], [s.shape for s in train_samples], skel,
                             conditioning, horizon, stride)


def forecast_nn(model, db, samples, windows, conditioning=15, horizon=30) -> list:
    poses = conditioning_poses(model, _gather_cond(samples, windows, conditioning))
    nj = model.layout.num_joints
    preds = []
    for p in poses:
        theta_q, _ = model.layout.split_pose(p)
        theta, beta, _ = baseline_nearest_neighbor(theta_q, db, horizon, model.skel)
        preds.append(forward_kinematics(theta, np.broadcast_to(beta, (horizon, len(beta))), model.skel))
    return _records(samples, windows, np.stack(preds).reshape(len(poses), horizon, nj, 3), conditioning, horizon)


def frame_reconstruction(model, samples) -> float:
    """Mean per-frame Procrustes-aligned error (mm) of the encoder's own readout."""
    errs = []
    for s in samples:
        joints = _joints_from_pose(model.layout, model.skel, model.states(s.features))
        errs.append(reconstruction_error(joints, s.joints_3d))
    return float(np.mean(np.concatenate(errs)))


def window_accuracy_fn(model, ar, sample, conditioning=15, future=15, alpha=0.05):
    """Callable mapping window ends to the mean PCK of the latent rollout that
    follows each window (camera fitted per predicted frame)."""

    def fn(window_ends):
        window_ends = np.asarray(window_ends)
        cond = np.stack([sample.features[w - conditioning + 1:w + 1] for w in window_ends])
        states = latent_rollout_states(model, ar, cond, future)
        joints = _joints_from_pose(model.layout, model.skel, states)
        idx = window_ends[:, None] + 1 + np.arange(future)[None]
        gk = sample.keypoints_2d[idx]
        vis = sample.visibility[idx]
        cam = fit_camera_batch(joints[..., :2], gk, vis)
        kp = cam[..., :1, None] * joints[..., :2] + cam[..., None, 1:3]
        return np.nanmean(pck(kp, gk, vis, alpha), axis=1)

    return fn
