"""Non-learned forecasters: freeze the last estimate, or copy the continuation
of the closest training window."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError, InvalidArgumentError
from ..kinematics import SkeletonTemplate, forward_kinematics


def baseline_constant(conditioning: np.ndarray, horizon: int) -> np.ndarray:
    """Repeat the last conditioning element ``horizon`` times."""
    conditioning = np.asarray(conditioning, dtype=np.float64)
    if len(conditioning) == 0:
        raise InsufficientDataError("constant baseline needs at least one conditioning frame")
    if horizon < 0:
        raise InvalidArgumentError("horizon must be >= 0")
    return np.repeat(conditioning[-1:], horizon, axis=0)


def normalized_joints(pose: np.ndarray, skel: SkeletonTemplate) -> np.ndarray:
    """FK with zero shape, root subtracted: ``(T, J, 3)`` poses -> ``(T, J, 3)``."""
    pose = np.asarray(pose, dtype=np.float64)
    x = forward_kinematics(pose, np.zeros(pose.shape[:-2] + (skel.num_betas,)), skel)
    return x - x[..., :1, :]


@dataclass
class NearestNeighborDB:
    """Training windows: normalized joints for the query span and the poses that follow."""
    keys: np.ndarray       # (W, C, J, 3)
    futures: np.ndarray    # (W, H, J, 3) pose
    shapes: np.ndarray     # (W, B)
    window: int
    horizon: int

    def __len__(self):
        return len(self.keys)


def build_nn_database(poses, shapes, skel: SkeletonTemplate, window=15, horizon=30, stride=1):
    """``poses``: list of ``(T, J, 3)`` training sequences, ``shapes``: list of ``(B,)``."""
    keys, futures, betas = [], [], []
    for pose, beta in zip(poses, shapes):
        pose = np.asarray(pose, dtype=np.float64)
        norm = normalized_joints(pose, skel)
        for s in range(0, len(pose) - window - horizon + 1, stride):
            keys.append(norm[s:s + window])
            futures.append(pose[s + window:s + window + horizon])
            betas.append(np.asarray(beta, dtype=np.float64))
    if not keys:
        raise InsufficientDataError("no training sequence is long enough for the nearest-neighbor database")
    return NearestNeighborDB(np.stack(keys), np.stack(futures), np.stack(betas), window, horizon)


def nearest_index(query_joints: np.ndarray, keys: np.ndarray) -> int:
    """Argmin over ``keys`` of the per-frame Euclidean distance summed over the window; ties to the lowest index."""
    q = np.asarray(query_joints, dtype=np.float64)
    d = np.sqrt(np.sum((keys - q[None]) ** 2, axis=(-2, -1))).sum(axis=-1)
    return int(np.argmin(d))


def baseline_nearest_neighbor(query_pose: np.ndarray, db: NearestNeighborDB, horizon: int,
                              skel: SkeletonTemplate):
    """Continuation ``(theta (H, J, 3), beta (B,))`` of the closest training window.

    The query is normalized from its poses alone, so its shape and any global
    translation do not influence the match.
    """
    if db is None or len(db) == 0:
        raise InsufficientDataError("empty nearest-neighbor database")
    if horizon > db.horizon:
        raise InvalidArgumentError(f"horizon {horizon} exceeds database horizon {db.horizon}")
    query_pose = np.asarray(query_pose, dtype=np.float64)
    if len(query_pose) > db.window:
        query_pose = query_pose[-db.window:]
    if len(query_pose) < db.window:
        raise InvalidArgumentError(f"query has {len(query_pose)} frames, database windows have {db.window}")
    idx = nearest_index(normalized_joints(query_pose, skel), db.keys)
    return db.futures[idx, :horizon], db.shapes[idx], idx
