"""Synthetic motion corpus: joint-angle programs per motif, keypoints through a
fixed weak-perspective camera, simulated per-frame features, JSON Lines
serialization and actor-disjoint splits."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from .camera import WeakPerspectiveCamera, project
from .errors import DatasetFormatError, FormatVersionError, InsufficientDataError, InvalidArgumentError
from .kinematics import SkeletonTemplate, forward_kinematics, load_skeleton

FORMAT_VERSION = 1
FPS = 25
MOTIFS = ("walk_cycle", "swing", "squat_cycle", "windup_strike")
CYCLIC = ("walk_cycle", "squat_cycle")
EMBED_DIM = 8
DIFF_GAIN = 5.0
IDENTITY_SCALE = 0.1   # appearance code is a weak nuisance cue next to the keypoints

# joint indices in the default skeleton
PELVIS, NECK = 0, 1
L_HIP, L_KNEE, R_HIP, R_KNEE = 2, 3, 5, 6
L_SHO, L_ELB, R_SHO, R_ELB = 8, 9, 11, 12


@dataclass(frozen=True)
class SyntheticConfig:
    motifs: tuple = MOTIFS
    sequences_per_motif: int = 60
    length_range: tuple = (60, 90)
    num_actors: int = 20
    feature_noise: float = 0.01
    keypoint_noise: float = 0.002
    occlusion_prob: float = 0.05
    seed: int = 0

    def __post_init__(self):
        for m in self.motifs:
            if m not in MOTIFS:
                raise InvalidArgumentError(f"unknown motif {m!r}")
        if not 0.0 <= self.occlusion_prob <= 1.0:
            raise InvalidArgumentError("occlusion_prob must lie in [0, 1]")
        if self.feature_noise < 0 or self.keypoint_noise < 0:
            raise InvalidArgumentError("noise levels must be >= 0")
        lo, hi = self.length_range
        if lo < 1 or hi < lo:
            raise InvalidArgumentError(f"bad length range {self.length_range}")
        if self.num_actors < 1 or self.sequences_per_motif < 0:
            raise InvalidArgumentError("num_actors must be >= 1 and sequences_per_motif >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise InvalidArgumentError(f"unknown data config keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("motifs", "length_range"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class MotionSample:
    motif: str
    actor: int
    features: np.ndarray                   # (T, F)
    keypoints_2d: np.ndarray               # (T, J, 2)
    visibility: np.ndarray                 # (T, J) bool
    joints_3d: Optional[np.ndarray] = None  # (T, J, 3)
    pose: Optional[np.ndarray] = None       # (T, J, 3)
    shape: Optional[np.ndarray] = None      # (B,)
    phases: Optional[list] = None           # per-frame phase labels
    fps: int = FPS
    # generation side products, not serialized
    aux: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        t = len(self.features)
        for name in ("keypoints_2d", "visibility", "joints_3d", "pose", "phases"):
            v = getattr(self, name)
            if v is not None and len(v) != t:
                raise InvalidArgumentError(f"{name} has length {len(v)}, features have {t}")

    def __len__(self):
        return len(self.features)

    def __eq__(self, other):
        if not isinstance(other, MotionSample):
            return NotImplemented
        if (self.motif, self.actor, self.fps, self.phases) != (other.motif, other.actor, other.fps, other.phases):
            return False
        for name in ("features", "keypoints_2d", "visibility", "joints_3d", "pose", "shape"):
            a, b = getattr(self, name), getattr(other, name)
            if (a is None) != (b is None):
                return False
            if a is not None and (a.shape != b.shape or not np.array_equal(a, b)):
                return False
        return True


# ---------------------------------------------------------------- motion programs

def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _ramp(t, start, duration):
    return _smoothstep((t - start) / max(duration, 1e-9))


def _walk(t, rng):
    period = int(rng.integers(20, 33))
    amp = rng.uniform(0.35, 0.55)
    knee = rng.uniform(0.5, 0.8)
    ph = 2 * np.pi * t / period + rng.uniform(0, 2 * np.pi)
    th = np.zeros((len(t), 14, 3))
    th[:, L_HIP, 0] = -amp * np.sin(ph)
    th[:, R_HIP, 0] = amp * np.sin(ph)
    th[:, L_KNEE, 0] = knee * (0.5 + 0.5 * np.sin(ph + 1.2))
    th[:, R_KNEE, 0] = knee * (0.5 - 0.5 * np.sin(ph + 1.2))
    th[:, L_SHO, 0] = 0.7 * amp * np.sin(ph)
    th[:, R_SHO, 0] = -0.7 * amp * np.sin(ph)
    th[:, L_SHO, 2] = 0.12
    th[:, R_SHO, 2] = -0.12
    th[:, L_ELB, 0] = -0.35 - 0.15 * np.sin(ph)
    th[:, R_ELB, 0] = -0.35 + 0.15 * np.sin(ph)
    th[:, PELVIS, 1] = 0.08 * np.sin(ph)
    return th, ["cycle"] * len(t), {"period": period}


def _squat(t, rng):
    period = int(rng.integers(24, 37))
    depth = rng.uniform(0.7, 1.1)
    u = 0.5 - 0.5 * np.cos(2 * np.pi * t / period + rng.uniform(0, 2 * np.pi))
    th = np.zeros((len(t), 14, 3))
    th[:, L_HIP, 0] = th[:, R_HIP, 0] = -depth * u
    th[:, L_KNEE, 0] = th[:, R_KNEE, 0] = 1.8 * depth * u
    th[:, L_SHO, 0] = th[:, R_SHO, 0] = -1.3 * u
    th[:, L_ELB, 0] = th[:, R_ELB, 0] = -0.2 * u
    th[:, L_HIP, 2] = 0.1
    th[:, R_HIP, 2] = -0.1
    return th, ["cycle"] * len(t), {"period": period}


def _acyclic_schedule(n, rng, kind):
    if kind == "swing":
        pause = int(rng.integers(8, 20))
        windup = int(rng.integers(12, 17))
        hold = 0
        strike = int(rng.integers(5, 8))
    else:
        pause = int(rng.integers(8, 20))
        windup = int(rng.integers(9, 12))
        hold = int(rng.integers(6, 17))
        strike = int(rng.integers(6, 9))
    bounds = np.cumsum([pause, windup, hold, strike])
    if bounds[-1] + 5 > n:
        raise InvalidArgumentError(f"length {n} too short for the {kind} program")
    labels = []
    for i in range(n):
        if i < bounds[0]:
            labels.append("pause")
        elif i < bounds[1]:
            labels.append("windup")
        elif i < bounds[2]:
            labels.append("hold")
        elif i < bounds[3]:
            labels.append("strike")
        else:
            labels.append("follow")
    return bounds, labels


def _swing(t, rng):
    (p_end, w_end, _, s_end), labels = _acyclic_schedule(len(t), rng, "swing")
    amp = rng.uniform(0.9, 1.2)
    twist = rng.uniform(0.4, 0.6)
    wind = _ramp(t, p_end, w_end - p_end)
    # swing peaks at the end of the strike and relaxes slowly afterwards
    swing = _ramp(t, w_end, s_end - w_end) - 0.5 * _ramp(t, s_end + 4, 20.0)
    arm = -amp * 0.8 * wind + amp * 2.0 * swing * (wind > 0)
    th = np.zeros((len(t), 14, 3))
    th[:, L_SHO, 0] = th[:, R_SHO, 0] = -0.4 - arm
    th[:, L_SHO, 2] = 0.15 * wind
    th[:, R_SHO, 2] = -0.15 * wind
    th[:, L_ELB, 0] = th[:, R_ELB, 0] = -0.3 * wind * (1 - swing)
    th[:, PELVIS, 1] = -twist * wind + 2.0 * twist * swing
    th[:, L_HIP, 0] = -0.25 * swing
    th[:, R_KNEE, 0] = 0.3 * wind * (1 - swing)
    return th, labels, {"strike_onset": int(w_end)}


def _windup_strike(t, rng):
    (p_end, w_end, h_end, s_end), labels = _acyclic_schedule(len(t), rng, "windup_strike")
    wind = _ramp(t, p_end, w_end - p_end)
    strike = _ramp(t, h_end, s_end - h_end)
    follow = _ramp(t, s_end, 25.0)
    reach = rng.uniform(1.3, 1.6)
    th = np.zeros((len(t), 14, 3))
    # slow, small windup: right arm cocks back, torso turns away
    th[:, R_SHO, 0] = 0.45 * wind - (0.45 + reach) * strike + 0.5 * follow
    th[:, R_ELB, 0] = -0.9 * wind + 0.85 * strike
    th[:, PELVIS, 1] = -0.15 * wind + 0.75 * strike - 0.2 * follow
    th[:, L_SHO, 0] = -0.3 * wind + 0.6 * strike
    th[:, L_HIP, 0] = -0.5 * strike + 0.2 * follow
    th[:, L_KNEE, 0] = 0.25 * wind + 0.3 * strike - 0.3 * follow
    th[:, R_KNEE, 0] = 0.2 * strike
    return th, labels, {"strike_onset": int(h_end)}


PROGRAMS = {"walk_cycle": _walk, "squat_cycle": _squat, "swing": _swing, "windup_strike": _windup_strike}


def generate_motion(motif, length, beta, seed=0, skel: Optional[SkeletonTemplate] = None):
    """Joint-angle program for ``motif``: returns ``(pose (T, J, 3), joints (T, J, 3), info)``.

    ``info`` carries the per-frame phase labels and the program constants
    (period for cyclic motifs, strike onset for acyclic ones).
    """
    if motif not in PROGRAMS:
        raise InvalidArgumentError(f"unknown motif {motif!r}; expected one of {MOTIFS}")
    if length < 1:
        raise InvalidArgumentError("length must be >= 1")
    skel = skel or load_skeleton()
    if skel.num_joints != 14:
        raise InvalidArgumentError("motion programs are written for the 14-joint skeleton")
    rng = np.random.default_rng(seed)
    yaw = rng.uniform(-np.pi / 3, np.pi / 3)
    t = np.arange(length, dtype=np.float64)
    pose, phases, info = PROGRAMS[motif](t, rng)
    pose[:, PELVIS, 1] += yaw
    joints = forward_kinematics(pose, np.broadcast_to(np.asarray(beta, dtype=np.float64),
                                                      (length, skel.num_betas)), skel)
    info = dict(info, phases=phases, yaw=yaw)
    return pose, joints, info


# ---------------------------------------------------------------- features

_PROJECTION = None


def make_projection(dim_in=64, dim_out=64, seed=20240101):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((max(dim_in, dim_out), max(dim_in, dim_out))))
    return q[:dim_in, :dim_out] * np.sqrt(dim_out / dim_in)


def feature_projection() -> np.ndarray:
    """The pinned ``(64, 64)`` projection from raw cues to features (fixture)."""
    global _PROJECTION
    if _PROJECTION is None:
        text = resources.files("phd.fixtures").joinpath("feature_projection.json").read_text()
        _PROJECTION = np.asarray(json.loads(text)["matrix"], dtype=np.float64)
    return _PROJECTION


def raw_cues(keypoints, visibility, embedding):
    """``[keypoints; DIFF_GAIN * first difference; actor embedding]`` per frame, hidden joints zeroed."""
    kp = np.asarray(keypoints, dtype=np.float64)
    vis = np.asarray(visibility, dtype=bool)
    t, nj = vis.shape
    kp = np.where(vis[..., None], kp, 0.0)
    diff = np.zeros_like(kp)
    both = vis[1:] & vis[:-1]
    diff[1:] = np.where(both[..., None], kp[1:] - kp[:-1], 0.0)
    emb = np.broadcast_to(np.asarray(embedding, dtype=np.float64), (t, len(embedding)))
    return np.concatenate([kp.reshape(t, -1), DIFF_GAIN * diff.reshape(t, -1), emb], axis=1)


def synthesize_features(keypoints, visibility, embedding, noise=0.0, seed=0, projection=None):
    """Features ``(T, F)``: fixed projection of the raw cues plus Gaussian noise."""
    proj = feature_projection() if projection is None else np.asarray(projection)
    cues = raw_cues(keypoints, visibility, embedding)
    if cues.shape[1] != proj.shape[0]:
        raise InvalidArgumentError(f"cue dimension {cues.shape[1]} does not match projection {proj.shape}")
    feats = cues @ proj
    if noise > 0:
        feats = feats + np.random.default_rng(seed).normal(0.0, noise, feats.shape)
    return feats


# ---------------------------------------------------------------- corpus

def actor_attributes(actor, num_betas=4, seed=0):
    """Shape coefficients and appearance embedding of one actor.

    The embedding carries the shape coefficients (body build is visible in the
    image) followed by a random identity code.
    """
    rng = np.random.default_rng([seed, 7919, actor])
    beta = np.clip(rng.normal(0.0, 0.7, num_betas), -1.5, 1.5)
    code = rng.normal(0.0, IDENTITY_SCALE, max(0, EMBED_DIM - num_betas))
    embedding = np.concatenate([beta, code])[:EMBED_DIM]
    return beta, embedding


def occlusion_mask(t, nj, prob, rng):
    cap = -(-nj // 2)
    vis = np.ones((t, nj), dtype=bool)
    if prob <= 0:
        return vis
    hidden = rng.random((t, nj)) < prob
    order = np.argsort(rng.random((t, nj)), axis=1)
    for i in range(t):
        idx = order[i][hidden[i][order[i]]][:cap]
        vis[i, idx] = False
    return vis


def generate_sample(motif, actor, length, cfg: SyntheticConfig, seed, skel=None) -> MotionSample:
    skel = skel or load_skeleton()
    beta, emb = actor_attributes(actor, skel.num_betas, cfg.seed)
    ss = np.random.SeedSequence([cfg.seed, seed])
    s_motion, s_cam, s_kp, s_occ, s_feat = (int(c.generate_state(1)[0]) for c in ss.spawn(5))
    pose, joints, info = generate_motion(motif, length, beta, s_motion, skel)
    r = np.random.default_rng(s_cam)
    cam = WeakPerspectiveCamera(r.uniform(0.8, 1.2), r.uniform(-0.1, 0.1, 2))
    clean = project(joints, cam)
    kp_noise = np.random.default_rng(s_kp).normal(0.0, cfg.keypoint_noise, clean.shape) \
        if cfg.keypoint_noise > 0 else np.zeros_like(clean)
    kp = clean + kp_noise
    vis = occlusion_mask(length, skel.num_joints, cfg.occlusion_prob, np.random.default_rng(s_occ))
    feats = synthesize_features(kp, vis, emb, cfg.feature_noise, s_feat)
    aux = {"camera": cam, "keypoint_noise": kp_noise, "embedding": emb,
           **{k: v for k, v in info.items() if k != "phases"}}
    return MotionSample(motif=motif, actor=int(actor), features=feats, keypoints_2d=kp, visibility=vis,
                        joints_3d=joints, pose=pose, shape=np.asarray(beta, dtype=np.float64).copy(),
                        phases=list(info["phases"]), fps=FPS, aux=aux)


def generate_corpus(cfg: SyntheticConfig = SyntheticConfig(), skel=None) -> list:
    """Sequences ordered motif-major; actors assigned round-robin within each motif."""
    skel = skel or load_skeleton()
    out = []
    idx = 0
    lo, hi = cfg.length_range
    for m, motif in enumerate(cfg.motifs):
        for i in range(cfg.sequences_per_motif):
            length = int(np.random.default_rng([cfg.seed, 104729, idx]).integers(lo, hi + 1))
            out.append(generate_sample(motif, i % cfg.num_actors, length, cfg, idx, skel))
            idx += 1
    return out


# ---------------------------------------------------------------- serialization

ARRAY_KEYS = ("features", "keypoints_2d", "visibility", "joints_3d", "pose", "shape")


def sample_to_json(s: MotionSample) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "motif": s.motif,
        "actor": int(s.actor),
        "fps": int(s.fps),
        "features": s.features.tolist(),
        "keypoints_2d": s.keypoints_2d.tolist(),
        "visibility": np.asarray(s.visibility, dtype=bool).tolist(),
        "joints_3d": None if s.joints_3d is None else s.joints_3d.tolist(),
        "pose": None if s.pose is None else s.pose.tolist(),
        "shape": None if s.shape is None else s.shape.tolist(),
    }
    if s.phases is not None:
        doc["phases"] = list(s.phases)
    return json.dumps(doc, separators=(",", ":"))


def _array(doc, key, ndim, line, dtype=np.float64, optional=True):
    v = doc.get(key)
    if v is None:
        if optional:
            return None
        raise DatasetFormatError(f"missing {key!r}", line)
    try:
        a = np.asarray(v, dtype=dtype)
    except (ValueError, TypeError) as e:
        raise DatasetFormatError(f"{key!r} is not a rectangular numeric array ({e})", line) from None
    if a.ndim != ndim and a.size:
        raise DatasetFormatError(f"{key!r} must have {ndim} dimensions, got {a.ndim}", line)
    return a


def sample_from_json(text: str, line=None) -> MotionSample:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DatasetFormatError(f"invalid JSON ({e.msg})", line) from None
    if not isinstance(doc, dict):
        raise DatasetFormatError("record must be a JSON object", line)
    if "format_version" not in doc:
        raise DatasetFormatError("missing format_version", line)
    if doc["format_version"] != FORMAT_VERSION:
        raise FormatVersionError(f"line {line}: format_version {doc['format_version']!r}, "
                                 f"this reader supports {FORMAT_VERSION}")
    allowed = {"format_version", "motif", "actor", "fps", "phases", *ARRAY_KEYS}
    unknown = set(doc) - allowed
    if unknown:
        raise DatasetFormatError(f"unknown keys {sorted(unknown)}", line)
    for key in ("motif", "actor", "fps", "features", "keypoints_2d", "visibility"):
        if key not in doc:
            raise DatasetFormatError(f"missing {key!r}", line)
    vis = doc["visibility"]
    if not all(isinstance(x, bool) for row in vis for x in row):
        raise DatasetFormatError("visibility must contain booleans", line)
    try:
        return MotionSample(
            motif=str(doc["motif"]), actor=int(doc["actor"]),
            features=_array(doc, "features", 2, line, optional=False),
            keypoints_2d=_array(doc, "keypoints_2d", 3, line, optional=False),
            visibility=_array(doc, "visibility", 2, line, dtype=bool, optional=False),
            joints_3d=_array(doc, "joints_3d", 3, line), pose=_array(doc, "pose", 3, line),
            shape=_array(doc, "shape", 1, line), phases=doc.get("phases"), fps=int(doc["fps"]))
    except InvalidArgumentError as e:
        raise DatasetFormatError(str(e), line) from None


def write_dataset(path, samples) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in samples:
            fh.write(sample_to_json(s))
            fh.write("\n")


def read_dataset(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            out.append(sample_from_json(text, lineno))
    return out


# ---------------------------------------------------------------- splits

def split(samples, ratios=(0.6, 0.2, 0.2), seed=0):
    """Actor-disjoint train/val/test split; actor counts are rounded from ``ratios``."""
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidArgumentError(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    actors = sorted({s.actor for s in samples})
    n = len(actors)
    n_train = int(round(ratios[0] * n))
    n_val = int(round(ratios[1] * n))
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise InsufficientDataError(f"{n} actors cannot fill three non-empty splits with ratios {ratios}")
    order = [actors[i] for i in np.random.default_rng(seed).permutation(n)]
    groups = (set(order[:n_train]), set(order[n_train:n_train + n_val]), set(order[n_train + n_val:]))
    return tuple([s for s in samples if s.actor in g] for g in groups)
