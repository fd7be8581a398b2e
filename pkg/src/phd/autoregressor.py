"""Autoregressive predictors over movie strips (latent variant) or flat pose
vectors (pose variant), with deterministic multi-step rollout.

Both variants predict a residual on top of the most recent input, so a head
with zero weights reproduces the last element of the history.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, as_tensor, concat, group_norm, no_grad, relu
from .errors import InvalidArgumentError
from .nn import ResidualConvStack, apply_linear, make_linear

VARIANTS = ("latent", "pose")


@dataclass(frozen=True)
class RolloutConfig:
    conditioning_length: int = 15
    horizon: int = 30

    def __post_init__(self):
        if self.conditioning_length < 1:
            raise InvalidArgumentError("conditioning_length must be >= 1")
        if self.horizon < 0:
            raise InvalidArgumentError("horizon must be >= 0")


class Autoregressor:
    def __init__(self, io_dim, dim=128, variant="latent", blocks=3, kernel=3, groups=None, rng=None,
                 prefix="ar", head_gain=1.0):
        if variant not in VARIANTS:
            raise InvalidArgumentError(f"unknown variant {variant!r}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.io_dim = io_dim
        self.dim = dim
        self.variant = variant
        self.prefix = prefix
        self.params = {}
        make_linear(self.params, f"{prefix}.input", rng, io_dim, dim)
        self.stack = ResidualConvStack(dim, prefix, rng, blocks, kernel, "edge_causal", groups)
        self.params.update(self.stack.params)
        self.params[f"{prefix}.head_norm.gamma"] = Tensor(np.ones(dim))
        self.params[f"{prefix}.head_norm.beta"] = Tensor(np.zeros(dim))
        make_linear(self.params, f"{prefix}.head", rng, dim, io_dim, gain=head_gain)

    @property
    def receptive_field(self) -> int:
        return self.stack.receptive_field

    def sequence(self, x) -> Tensor:
        """Run the causal net over a whole sequence ``(N, T, io_dim)``.

        Output ``t`` is the prediction for element ``t + 1`` given elements up to
        ``t`` (edge padded at the start).
        """
        x = as_tensor(x)
        if x.ndim != 3 or x.shape[-1] != self.io_dim:
            raise InvalidArgumentError(f"expected (N, T, {self.io_dim}) input, got {x.shape}")
        h = self.stack(apply_linear(self.params, f"{self.prefix}.input", x))
        h = relu(group_norm(h, self.stack.groups, self.params[f"{self.prefix}.head_norm.gamma"],
                            self.params[f"{self.prefix}.head_norm.beta"]))
        return x + apply_linear(self.params, f"{self.prefix}.head", h)

    def pad_history(self, history):
        """Left edge-pad (or crop) a history ``(N, L, io_dim)`` to exactly the receptive field."""
        history = as_tensor(history)
        rf = self.receptive_field
        length = history.shape[1]
        if length == 0:
            raise InvalidArgumentError("empty history")
        if length >= rf:
            return history[:, length - rf:]
        first = history[:, 0:1]
        return concat([first] * (rf - length) + [history], axis=1)

    def step(self, history) -> Tensor:
        """Differentiable single-step prediction ``(N, io_dim)`` from ``(N, L, io_dim)``."""
        window = self.pad_history(history)
        return self.sequence(window)[:, -1]

    def predict_next(self, history: np.ndarray) -> np.ndarray:
        history = np.asarray(history, dtype=np.float64)
        single = history.ndim == 2
        with no_grad():
            out = self.step(history[None] if single else history).data
        return out[0] if single else out

    def rollout(self, conditioning: np.ndarray, cfg) -> np.ndarray:
        """Iterate :meth:`predict_next` for ``cfg.horizon`` steps (or ``cfg`` as an int)."""
        horizon = cfg.horizon if isinstance(cfg, RolloutConfig) else int(cfg)
        if horizon < 0:
            raise InvalidArgumentError("horizon must be >= 0")
        conditioning = np.asarray(conditioning, dtype=np.float64)
        single = conditioning.ndim == 2
        seq = conditioning[None] if single else conditioning
        if seq.shape[1] < 1:
            raise InvalidArgumentError("rollout needs at least one conditioning element")
        rf = self.receptive_field
        preds = []
        for _ in range(horizon):
            window = np.concatenate([seq[:, -rf:]] + [p[:, None] for p in preds[-rf:]], axis=1)[:, -rf:]
            preds.append(self.predict_next(window))
        out = np.stack(preds, axis=1) if preds else np.zeros(seq.shape[:1] + (0, self.io_dim))
        return out[0] if single else out
