"""Parameter initialisation and the residual causal convolution stack shared by
the temporal encoder and the autoregressors."""
from __future__ import annotations

import numpy as np

from .autodiff import Tensor, conv1d_edge, group_norm, linear, relu


def kaiming_uniform(rng, shape, fan_in, gain=1.0):
    bound = gain * np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def default_groups(dim: int) -> int:
    # 32 groups at 128 channels, scaled proportionally
    return max(1, dim // 4)


class ResidualConvStack:
    """``blocks`` residual blocks of (GroupNorm, ReLU, Conv1D) x 2 over ``dim`` channels."""

    def __init__(self, dim, prefix, rng, blocks=3, kernel=3, pad_mode="edge_causal", groups=None):
        self.dim = dim
        self.prefix = prefix
        self.blocks = blocks
        self.kernel = kernel
        self.pad_mode = pad_mode
        self.groups = groups or default_groups(dim)
        self.params = {}
        for b in range(blocks):
            for c in range(2):
                key = f"{prefix}.block{b}.conv{c}"
                self.params[f"{key}.w"] = Tensor(kaiming_uniform(rng, (kernel, dim, dim), kernel * dim))
                self.params[f"{key}.b"] = Tensor(np.zeros(dim))
                self.params[f"{prefix}.block{b}.norm{c}.gamma"] = Tensor(np.ones(dim))
                self.params[f"{prefix}.block{b}.norm{c}.beta"] = Tensor(np.zeros(dim))

    @property
    def receptive_field(self) -> int:
        return 1 + self.blocks * 2 * (self.kernel - 1)

    def __call__(self, h):
        p = self.params
        for b in range(self.blocks):
            r = h
            for c in range(2):
                r = group_norm(r, self.groups, p[f"{self.prefix}.block{b}.norm{c}.gamma"],
                               p[f"{self.prefix}.block{b}.norm{c}.beta"])
                r = relu(r)
                key = f"{self.prefix}.block{b}.conv{c}"
                r = conv1d_edge(r, p[f"{key}.w"], p[f"{key}.b"], self.pad_mode)
            h = h + r
        return h


def make_linear(params, name, rng, fan_in, fan_out, gain=1.0):
    params[f"{name}.w"] = Tensor(kaiming_uniform(rng, (fan_in, fan_out), fan_in, gain))
    params[f"{name}.b"] = Tensor(np.zeros(fan_out))


def apply_linear(params, name, x):
    return linear(x, params[f"{name}.w"], params[f"{name}.b"])


def load_into(params: dict, arrays: dict, strict=True):
    """Copy checkpoint arrays into existing parameter tensors."""
    for name, t in params.items():
        if name not in arrays:
            if strict:
                raise KeyError(f"checkpoint lacks {name}")
            continue
        arr = np.asarray(arrays[name], dtype=np.float64)
        if arr.shape != t.data.shape:
            raise ValueError(f"{name}: checkpoint shape {arr.shape} != parameter shape {t.data.shape}")
        t.data = arr.copy()


def snapshot(params: dict) -> dict:
    return {name: t.data.copy() for name, t in params.items()}
