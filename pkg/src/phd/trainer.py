"""Two-stage optimisation: encoder + regressor first, then the autoregressor
(with the encoder fine-tuned and the regressor frozen), under a scheduled
sampling curriculum over fixed 15 + 25 frame windows."""
from __future__ import annotations

import csv
import hashlib
import logging
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .autodiff import AdamState, Tensor, adam_step, backward, concat, no_grad
from .autodiff.checkpoint import encode_checkpoint, load_checkpoint, save_checkpoint
from .autoregressor import Autoregressor
from .body import PoseLayout
from .errors import CheckpointError, InsufficientDataError, InvalidArgumentError
from .kinematics import SkeletonTemplate, load_skeleton
from .losses import FrameTargets, LossWeights, total_ar_loss, total_encoder_loss
from .nn import load_into, snapshot
from .temporal_encoder import PoseRegressor, TemporalEncoder

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    encoder_epochs: int = 30
    ar_epochs: int = 30
    batch_size: int = 16
    seed: int = 0
    lr: float = 1e-4
    feature_dim: int = 64
    dim: int = 128
    hidden: int = 256
    encoder_mode: str = "causal"
    crop_length: int = 40
    start_steps: int = 1
    end_steps: int = 25
    epochs_per_increment: Optional[int] = None
    conditioning_length: int = 15
    min_sequence_length: int = 40
    window_stride: int = 5
    windows_per_epoch: int = 0
    finetune_encoder: bool = True
    encoder_lr_scale: float = 1.0       # stage-2 learning rate of the fine-tuned encoder, relative to lr
    strip_squared: bool = False
    strip_target_grad: bool = False
    weights: LossWeights = field(default_factory=LossWeights)

    def __post_init__(self):
        if self.start_steps < 0 or self.start_steps > self.end_steps:
            raise InvalidArgumentError("curriculum requires 0 <= start_steps <= end_steps")
        if self.min_sequence_length < self.conditioning_length + self.end_steps:
            raise InvalidArgumentError("min_sequence_length must be >= conditioning_length + end_steps")
        if self.encoder_epochs < 0 or self.ar_epochs < 0 or self.batch_size < 1:
            raise InvalidArgumentError("epochs must be >= 0 and batch_size >= 1")
        if self.epochs_per_increment is not None and self.epochs_per_increment < 1:
            raise InvalidArgumentError("epochs_per_increment must be >= 1")
        if self.encoder_mode not in ("causal", "centered"):
            raise InvalidArgumentError(f"unknown encoder mode {self.encoder_mode!r}")
        if not self.encoder_lr_scale > 0:
            raise InvalidArgumentError("encoder_lr_scale must be > 0")
        if self.window_stride < 1 or self.conditioning_length < 1:
            raise InvalidArgumentError("window_stride and conditioning_length must be >= 1")

    @property
    def horizon(self) -> int:
        return self.end_steps

    @property
    def window_length(self) -> int:
        return self.conditioning_length + self.end_steps

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidArgumentError(f"unknown training config keys: {sorted(unknown)}")
        d = dict(d)
        if "weights" in d and not isinstance(d["weights"], LossWeights):
            d["weights"] = LossWeights.from_dict(d["weights"])
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["weights"] = self.weights.to_dict()
        return d


# ---------------------------------------------------------------- curriculum and windows

def curriculum_steps(epoch: int, cfg: TrainConfig, total_epochs: Optional[int] = None) -> int:
    """Number of self-conditioned predictions per window at ``epoch``.

    With ``epochs_per_increment`` the count grows by one every that many epochs;
    otherwise it rises linearly so the last epoch of the stage reaches ``end_steps``.
    """
    if epoch < 0:
        raise InvalidArgumentError("epoch must be >= 0")
    lo, hi = cfg.start_steps, cfg.end_steps
    if cfg.epochs_per_increment is not None:
        return min(hi, lo + epoch // cfg.epochs_per_increment)
    total = cfg.ar_epochs if total_epochs is None else total_epochs
    if total <= 1:
        # a single-epoch stage is its own final epoch
        return hi if total == 1 else lo
    e = min(epoch, total - 1)
    return lo + (hi - lo) * e // (total - 1)


@dataclass
class Window:
    """One training window: ``conditioning_length`` observed frames followed by
    ``horizon`` supervision frames. Only these frames are held."""
    sequence: int
    start: int
    features: np.ndarray
    targets: FrameTargets

    def __len__(self):
        return len(self.features)


def window_starts(length: int, cfg: TrainConfig, stride: int = 1) -> list:
    n = length - cfg.window_length
    return list(range(0, n + 1, stride)) if n >= 0 else []


def sample_targets(sample, start=0, stop=None) -> FrameTargets:
    stop = len(sample) if stop is None else stop
    t = stop - start
    shape = None if sample.shape is None else np.broadcast_to(sample.shape, (t, len(sample.shape)))
    return FrameTargets(
        keypoints=sample.keypoints_2d[None, start:stop],
        visibility=sample.visibility[None, start:stop],
        joints=None if sample.joints_3d is None else sample.joints_3d[None, start:stop],
        pose=None if sample.pose is None else sample.pose[None, start:stop],
        shape=None if shape is None else shape[None],
    )


def build_window(sample, cfg: TrainConfig, start: int = 0, index: int = 0) -> Optional[Window]:
    """Frames ``start .. start + 39``; ``None`` (with a warning) if the sequence is too short."""
    if len(sample) < cfg.min_sequence_length or start + cfg.window_length > len(sample) or start < 0:
        warnings.warn(f"sequence {index} (length {len(sample)}) has no window at {start}; skipped",
                      stacklevel=2)
        return None
    stop = start + cfg.window_length
    return Window(index, start, np.array(sample.features[start:stop]), sample_targets(sample, start, stop))


def padded_conditioning(window: Window, cfg: TrainConfig, pad: int = 12) -> np.ndarray:
    """Conditioning features with the first frame replicated ``pad`` times on the left."""
    cond = window.features[:cfg.conditioning_length]
    return np.concatenate([np.repeat(cond[:1], pad, axis=0), cond], axis=0)


def build_windows(samples, cfg: TrainConfig, stride=None) -> list:
    stride = cfg.window_stride if stride is None else stride
    out = []
    for i, s in enumerate(samples):
        if len(s) < cfg.min_sequence_length:
            warnings.warn(f"sequence {i} shorter than {cfg.min_sequence_length} frames; skipped", stacklevel=2)
            continue
        for st in window_starts(len(s), cfg, stride):
            out.append(build_window(s, cfg, st, i))
    return out


def stack_targets(items) -> FrameTargets:
    def cat(name):
        vals = [getattr(t, name) for t in items]
        return None if any(v is None for v in vals) else np.concatenate(vals, axis=0)
    return FrameTargets(cat("keypoints"), cat("visibility"), cat("joints"), cat("pose"), cat("shape"))


# ---------------------------------------------------------------- models and checkpoints

class EncoderModel:
    """Temporal encoder plus pose regressor sharing one parameter dict."""

    def __init__(self, cfg: TrainConfig, skel: Optional[SkeletonTemplate] = None, mode=None, seed=None):
        self.skel = skel or load_skeleton()
        self.layout = PoseLayout(self.skel.num_joints, self.skel.num_betas)
        rng = np.random.default_rng([cfg.seed if seed is None else seed, 1])
        self.mode = mode or cfg.encoder_mode
        self.encoder = TemporalEncoder(cfg.feature_dim, cfg.dim, self.mode, rng=rng)
        self.regressor = PoseRegressor(self.layout, cfg.dim, cfg.hidden, rng=rng)
        self.params = {**self.encoder.params, **self.regressor.params}

    def strips(self, features) -> np.ndarray:
        return self.encoder.encode(features)

    def states(self, features) -> np.ndarray:
        """Regressed ``[theta, beta, camera]`` per frame, no graph recorded."""
        features = np.asarray(features, dtype=np.float64)
        single = features.ndim == 2
        with no_grad():
            out = self.regressor(self.encoder(features[None] if single else features)).data
        return out[0] if single else out

    def meta(self) -> dict:
        return {"kind": "encoder", "mode": self.mode, "feature_dim": self.encoder.feature_dim,
                "dim": self.encoder.dim, "hidden": self.params["regressor.fc1.w"].shape[1]}


def config_hash(cfg: TrainConfig) -> str:
    import json
    return hashlib.sha256(json.dumps(cfg.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def save_model(path, params: dict, meta: dict) -> None:
    save_checkpoint(path, snapshot(params), meta)


def checkpoint_bytes(params: dict, meta: dict) -> bytes:
    return encode_checkpoint(snapshot(params), meta)


def load_encoder_model(path, cfg: Optional[TrainConfig] = None, skel=None) -> EncoderModel:
    try:
        arrays, meta = load_checkpoint(path)
    except (OSError, ValueError) as e:
        raise CheckpointError(f"cannot read encoder checkpoint {path}: {e}") from e
    if not any(k.startswith("encoder.") for k in arrays) or not any(k.startswith("regressor.") for k in arrays):
        raise CheckpointError(f"{path} does not contain encoder and regressor tensors")
    base = cfg or TrainConfig()
    base = replace(base, feature_dim=int(meta.get("feature_dim", base.feature_dim)),
                   dim=int(meta.get("dim", base.dim)), hidden=int(meta.get("hidden", base.hidden)),
                   encoder_mode=meta.get("mode", base.encoder_mode))
    model = EncoderModel(base, skel)
    try:
        load_into(model.params, arrays)
    except (KeyError, ValueError) as e:
        raise CheckpointError(f"{path}: {e}") from e
    return model


def load_ar_model(path, skel=None):
    """Returns ``(EncoderModel or None, Autoregressor, meta)`` from a stage-2 checkpoint."""
    try:
        arrays, meta = load_checkpoint(path)
    except (OSError, ValueError) as e:
        raise CheckpointError(f"cannot read autoregressor checkpoint {path}: {e}") from e
    if meta.get("kind") != "ar":
        raise CheckpointError(f"{path} is not an autoregressor checkpoint")
    model = None
    if meta.get("encoder"):
        enc_meta = meta["encoder"]
        base = TrainConfig(feature_dim=enc_meta["feature_dim"], dim=enc_meta["dim"], hidden=enc_meta["hidden"],
                           encoder_mode=enc_meta["mode"])
        model = EncoderModel(base, skel)
        load_into(model.params, arrays)
    ar = Autoregressor(int(meta["io_dim"]), int(meta["dim"]), meta["variant"])
    load_into(ar.params, arrays)
    return model, ar, meta


# ---------------------------------------------------------------- stage 1

@dataclass
class TrainResult:
    params: dict
    curve: list
    initial_loss: float
    final_loss: float
    counters: dict = field(default_factory=dict)


def _encoder_batch_loss(model: EncoderModel, feats, targets, cfg: TrainConfig):
    strips = model.encoder(feats)
    states = model.regressor(strips)
    offsets = {dt: model.regressor.offset(strips, dt) for dt in model.regressor.offsets}
    return total_encoder_loss(states, offsets, targets, model.layout, model.skel, cfg.weights)


def _crop_batches(samples, cfg: TrainConfig, rng, rf):
    """Random crops of ``crop_length`` frames (whole sequence when shorter), grouped by length."""
    items = []
    for i, s in enumerate(samples):
        n = len(s)
        if n < rf:
            continue
        c = min(cfg.crop_length, n)
        st = int(rng.integers(0, n - c + 1))
        items.append((c, i, st))
    order = rng.permutation(len(items))
    by_len = {}
    for j in order:
        c, i, st = items[j]
        by_len.setdefault(c, []).append((i, st))
    batches = []
    for c in sorted(by_len):
        group = by_len[c]
        for b in range(0, len(group), cfg.batch_size):
            batches.append((c, group[b:b + cfg.batch_size]))
    perm = rng.permutation(len(batches))
    return [batches[j] for j in perm]


def _gather(samples, c, members):
    feats = np.stack([samples[i].features[st:st + c] for i, st in members])
    targets = stack_targets([sample_targets(samples[i], st, st + c) for i, st in members])
    return feats, targets


def evaluate_encoder_loss(model: EncoderModel, samples, cfg: TrainConfig) -> float:
    """Mean full-sequence encoder loss over ``samples`` (no graph)."""
    vals = []
    with no_grad():
        for s in samples:
            if len(s) < model.encoder.receptive_field:
                continue
            loss, _ = _encoder_batch_loss(model, s.features[None], sample_targets(s), cfg)
            vals.append(float(loss.data))
    return float(np.mean(vals)) if vals else float("nan")


def train_encoder(samples, cfg: TrainConfig, model: Optional[EncoderModel] = None, val_samples=None,
                  checkpoint_path=None, log_path=None) -> tuple:
    """Stage 1. Returns ``(model, TrainResult)``."""
    if not samples:
        raise InsufficientDataError("train_encoder needs a non-empty dataset")
    model = model or EncoderModel(cfg)
    rf = model.encoder.receptive_field
    usable = [s for s in samples if len(s) >= rf]
    if len(usable) < len(samples):
        warnings.warn(f"{len(samples) - len(usable)} sequences shorter than {rf} frames skipped", stacklevel=2)
    if not usable:
        raise InsufficientDataError("no sequence reaches the receptive field length")
    rng = np.random.default_rng([cfg.seed, 2])
    state = AdamState(lr=cfg.lr)
    initial = evaluate_encoder_loss(model, usable, cfg)
    curve = []
    for epoch in range(cfg.encoder_epochs):
        sums = {}
        nb = 0
        for c, members in _crop_batches(usable, cfg, rng, rf):
            feats, targets = _gather(usable, c, members)
            loss, terms = _encoder_batch_loss(model, feats, targets, cfg)
            adam_step(model.params, backward(loss, model.params), state)
            for k, v in terms.items():
                sums[k] = sums.get(k, 0.0) + v
            nb += 1
        row = {"epoch": epoch, **{k: v / max(nb, 1) for k, v in sorted(sums.items())}}
        if val_samples:
            row["val_total"] = evaluate_encoder_loss(model, val_samples, cfg)
        curve.append(row)
        log.info("encoder epoch %d loss %.6f", epoch, row.get("total", float("nan")))
    final = evaluate_encoder_loss(model, usable, cfg)
    if checkpoint_path is not None:
        save_model(checkpoint_path, model.params, {**model.meta(), "config_hash": config_hash(cfg)})
    if log_path is not None:
        write_curve(log_path, curve)
    return model, TrainResult(snapshot(model.params), curve, initial, final)


# ---------------------------------------------------------------- stage 2

class StreamCounter:
    """Instrumentation: self-conditioned predictions and frames touched per window."""

    def __init__(self):
        self.self_conditioned = []
        self.max_frame = []

    def record(self, k, frames):
        self.self_conditioned.append(k)
        self.max_frame.append(frames)


def scheduled_rollout(ar: Autoregressor, stream_gt, k: int, conditioning: int):
    """Predictions for stream positions ``conditioning .. L - 1`` where inputs at
    positions ``< L - k`` are ground truth and later ones are the model's own outputs.

    ``stream_gt`` is a ``(N, L, io)`` Tensor. Returns a ``(N, L - conditioning, io)`` Tensor.
    """
    n, length = stream_gt.shape[:2]
    horizon = length - conditioning
    k = max(0, min(k, horizon))
    split = length - k                              # first model-filled position
    last_tf = min(split, length - 1)                # predictions up to here see ground truth only
    tf_out = ar.sequence(stream_gt[:, :last_tf])    # output p predicts p + 1
    preds = [tf_out[:, conditioning - 1:last_tf]]   # positions conditioning .. last_tf
    chain = [tf_out[:, last_tf - 1:last_tf]] if split < length else []
    rf = ar.receptive_field
    for q in range(last_tf + 1, length):
        lo = max(0, q - rf)
        gt_part = stream_gt[:, lo:min(split, q)] if lo < split else None
        parts = ([gt_part] if gt_part is not None and gt_part.shape[1] > 0 else []) + \
            chain[max(0, len(chain) - (q - max(lo, split))):]
        hist = concat(parts, axis=1) if len(parts) > 1 else parts[0]
        nxt = ar.step(hist).reshape((n, 1, ar.io_dim))
        preds.append(nxt)
        chain.append(nxt)
    return concat(preds, axis=1) if len(preds) > 1 else preds[0]


def _ar_windows(samples, cfg, rng):
    wins = build_windows(samples, cfg)
    if not wins:
        raise InsufficientDataError(f"no sequence has at least {cfg.min_sequence_length} frames")
    order = rng.permutation(len(wins))
    if cfg.windows_per_epoch:
        order = order[:cfg.windows_per_epoch]
    return [wins[j] for j in order]


def _latent_window_loss(model, ar, wins, k, cfg, counter=None, fixed_target=None):
    feats = np.stack([w.features for w in wins])
    targets = stack_targets([w.targets for w in wins])
    c = cfg.conditioning_length
    strips = model.encoder(feats)
    if counter is not None:
        for _ in wins:
            counter.record(min(k, cfg.horizon), feats.shape[1])
    pred = scheduled_rollout(ar, strips, k, c)
    if fixed_target is not None:
        target = Tensor(fixed_target)
    else:
        target = strips[:, c:] if cfg.strip_target_grad else Tensor(strips.data[:, c:])
    observed = model.regressor(strips[:, :c])
    future = model.regressor(pred)
    return total_ar_loss(observed, future, targets, model.layout, model.skel, cfg.weights,
                         pred_strips=pred, target_strips=target, strip_squared=cfg.strip_squared)


def train_autoregressor(samples, model: EncoderModel, cfg: TrainConfig, ar: Optional[Autoregressor] = None,
                        checkpoint_path=None, log_path=None, counter: Optional[StreamCounter] = None):
    """Stage 2 for the latent variant. The regressor is frozen; the encoder is
    fine-tuned unless ``cfg.finetune_encoder`` is false. Returns ``(model, ar, TrainResult)``."""
    if not samples:
        raise InsufficientDataError("train_autoregressor needs a non-empty dataset")
    ar = ar or Autoregressor(model.encoder.dim, model.encoder.dim, "latent",
                             rng=np.random.default_rng([cfg.seed, 3]))
    trainable = dict(ar.params)
    enc_params = dict(model.encoder.params) if cfg.finetune_encoder else {}
    frozen_before = snapshot(model.regressor.params)
    rng = np.random.default_rng([cfg.seed, 4])
    state = AdamState(lr=cfg.lr)
    enc_state = AdamState(lr=cfg.lr * cfg.encoder_lr_scale)
    curve = []
    initial = final = float("nan")
    for epoch in range(cfg.ar_epochs):
        k = curriculum_steps(epoch, cfg)
        wins = _ar_windows(samples, cfg, rng)
        sums, nb = {}, 0
        for b in range(0, len(wins), cfg.batch_size):
            loss, terms = _latent_window_loss(model, ar, wins[b:b + cfg.batch_size], k, cfg, counter)
            if epoch == 0 and nb == 0:
                initial = float(loss.data)
            grads = backward(loss, {**trainable, **enc_params})
            adam_step(trainable, {n: grads[n] for n in trainable}, state)
            if enc_params:
                adam_step(enc_params, {n: grads[n] for n in enc_params}, enc_state)
            for key, v in terms.items():
                sums[key] = sums.get(key, 0.0) + v
            nb += 1
        row = {"epoch": epoch, "k": k, **{key: v / max(nb, 1) for key, v in sorted(sums.items())}}
        final = row.get("total", final)
        curve.append(row)
        log.info("ar epoch %d k %d loss %.6f", epoch, k, final)
    for name, arr in frozen_before.items():
        if not np.array_equal(arr, model.regressor.params[name].data):
            raise RuntimeError(f"frozen regressor parameter {name} changed")
    if checkpoint_path is not None:
        save_model(checkpoint_path, {**model.params, **ar.params}, ar_meta(ar, model, cfg))
    if log_path is not None:
        write_curve(log_path, curve)
    return model, ar, TrainResult(snapshot(ar.params), curve, initial, final)


def ar_meta(ar: Autoregressor, model: Optional[EncoderModel], cfg: TrainConfig) -> dict:
    meta = {"kind": "ar", "variant": ar.variant, "io_dim": ar.io_dim, "dim": ar.dim,
            "config_hash": config_hash(cfg)}
    if model is not None:
        meta["encoder"] = model.meta()
    return meta


# ---------------------------------------------------------------- pose-space variant

def pose_estimates(model: EncoderModel, features) -> np.ndarray:
    """Flat pose vectors ``(T, pose_dim)`` read from the (frozen) encoder."""
    states = model.states(features)
    return states[..., :model.layout.pose_dim]


def _pose_window_loss(model, ar, wins, est, k, cfg, counter=None):
    targets = stack_targets([w.targets for w in wins])
    c = cfg.conditioning_length
    stream = Tensor(np.stack([est[(w.sequence, w.start)] for w in wins]))
    if counter is not None:
        for w in wins:
            counter.record(min(k, cfg.horizon), len(w))
    pred = scheduled_rollout(ar, stream, k, c)
    return total_ar_loss(None, pred, targets.frames(0, c + cfg.horizon), model.layout, model.skel,
                         cfg.weights, pred_strips=pred, target_strips=Tensor(stream.data[:, c:]),
                         strip_squared=cfg.strip_squared)


def window_pose_estimates(model: EncoderModel, wins) -> dict:
    """Encoder pose estimates per window, each computed on the window's own frames
    (so the encoder sees the same edge padding as at evaluation time)."""
    out = {}
    for w in wins:
        out[(w.sequence, w.start)] = pose_estimates(model, w.features)
    return out


def train_pose_autoregressor(samples, model: EncoderModel, cfg: TrainConfig, ar: Optional[Autoregressor] = None,
                             checkpoint_path=None, log_path=None, counter: Optional[StreamCounter] = None):
    """Pose-space autoregressor on frozen encoder estimates. Returns ``(ar, TrainResult)``."""
    if not samples:
        raise InsufficientDataError("train_pose_autoregressor needs a non-empty dataset")
    pd = model.layout.pose_dim
    ar = ar or Autoregressor(pd, cfg.dim, "pose", rng=np.random.default_rng([cfg.seed, 5]))
    all_wins = build_windows(samples, cfg)
    if not all_wins:
        raise InsufficientDataError(f"no sequence has at least {cfg.min_sequence_length} frames")
    est = window_pose_estimates(model, all_wins)
    rng = np.random.default_rng([cfg.seed, 6])
    state = AdamState(lr=cfg.lr)
    curve = []
    initial = final = float("nan")
    for epoch in range(cfg.ar_epochs):
        k = curriculum_steps(epoch, cfg)
        order = rng.permutation(len(all_wins))
        if cfg.windows_per_epoch:
            order = order[:cfg.windows_per_epoch]
        wins = [all_wins[j] for j in order]
        sums, nb = {}, 0
        for b in range(0, len(wins), cfg.batch_size):
            loss, terms = _pose_window_loss(model, ar, wins[b:b + cfg.batch_size], est, k, cfg, counter)
            if epoch == 0 and nb == 0:
                initial = float(loss.data)
            adam_step(ar.params, backward(loss, ar.params), state)
            for key, v in terms.items():
                sums[key] = sums.get(key, 0.0) + v
            nb += 1
        row = {"epoch": epoch, "k": k, **{key: v / max(nb, 1) for key, v in sorted(sums.items())}}
        final = row.get("total", final)
        curve.append(row)
        log.info("pose-ar epoch %d k %d loss %.6f", epoch, k, final)
    if checkpoint_path is not None:
        save_model(checkpoint_path, ar.params, ar_meta(ar, None, cfg))
    if log_path is not None:
        write_curve(log_path, curve)
    return ar, TrainResult(snapshot(ar.params), curve, initial, final)


# ---------------------------------------------------------------- logs

def write_curve(path, curve: list) -> None:
    keys = []
    for row in curve:
        for k in row:
            if k not in keys:
                keys.append(k)
    head = [k for k in ("epoch", "k") if k in keys] + sorted(k for k in keys if k not in ("epoch", "k"))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(head)
        for row in curve:
            w.writerow([_fmt(row.get(k, "")) for k in head])


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


# ---------------------------------------------------------------- gradient checks

def loss_gradchecks(cfg: TrainConfig, num_coords=60, h=1e-5, seed=0, k=None, samples=None) -> dict:
    """Finite-difference check of both training objectives with respect to the
    network parameters, on two windows of a small synthetic corpus.

    Returns ``{"encoder": max_rel_error, "autoregressor": max_rel_error}``.
    """
    from .autodiff.gradcheck import gradcheck
    from .data import SyntheticConfig, generate_corpus

    if samples is None:
        samples = generate_corpus(SyntheticConfig(motifs=("windup_strike", "walk_cycle"), sequences_per_motif=1,
                                                  length_range=(60, 60), num_actors=2, seed=seed))
    model = EncoderModel(cfg, seed=seed)
    ar = Autoregressor(model.encoder.dim, model.encoder.dim, "latent", rng=np.random.default_rng([seed, 3]))
    wins = [build_window(s, cfg, 0, i) for i, s in enumerate(samples[:2])]
    feats = np.stack([w.features for w in wins])
    targets = stack_targets([w.targets for w in wins])
    k = cfg.horizon // 2 if k is None else k

    def enc_loss():
        return _encoder_batch_loss(model, feats, targets, cfg)[0]

    # a detached strip target is a constant of the objective; pin it so the
    # finite differences see the same function the analytic gradient describes
    fixed = None if cfg.strip_target_grad else model.strips(feats)[:, cfg.conditioning_length:]

    def ar_loss():
        return _latent_window_loss(model, ar, wins, k, cfg, fixed_target=fixed)[0]

    enc_err, _ = gradcheck(enc_loss, dict(model.params), num_coords, h, seed)
    ar_err, _ = gradcheck(ar_loss, {**ar.params, **model.encoder.params}, num_coords, h, seed + 1)
    return {"encoder": enc_err, "autoregressor": ar_err}
