"""Movie-strip encoder over per-frame features and the pose regressor reading
body states out of strips."""
from __future__ import annotations

import numpy as np

from .autodiff import Tensor, as_tensor, concat, no_grad, relu
from .body import PoseLayout
from .errors import InvalidArgumentError
from .nn import ResidualConvStack, apply_linear, make_linear

PAD_MODES = {"causal": "edge_causal", "centered": "edge_centered"}
OFFSETS = (-10, -5)


class TemporalEncoder:
    """Input projection from F features to D channels followed by the residual conv stack.

    ``mode`` is ``"causal"`` (strip ``t`` sees frames ``t-12 .. t``) or
    ``"centered"`` (frames ``t-6 .. t+6``), both with edge padding.
    """

    def __init__(self, feature_dim=64, dim=128, mode="causal", blocks=3, kernel=3, groups=None,
                 rng=None, prefix="encoder"):
        if mode not in PAD_MODES:
            raise InvalidArgumentError(f"unknown encoder mode {mode!r}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.feature_dim = feature_dim
        self.dim = dim
        self.mode = mode
        self.prefix = prefix
        self.params = {}
        make_linear(self.params, f"{prefix}.input", rng, feature_dim, dim)
        self.stack = ResidualConvStack(dim, prefix, rng, blocks, kernel, PAD_MODES[mode], groups)
        self.params.update(self.stack.params)

    @property
    def receptive_field(self) -> int:
        return self.stack.receptive_field

    def __call__(self, features) -> Tensor:
        """``(N, T, F)`` features -> ``(N, T, D)`` strips."""
        features = as_tensor(features)
        if features.ndim != 3 or features.shape[-1] != self.feature_dim:
            raise InvalidArgumentError(
                f"expected (N, T, {self.feature_dim}) features, got {features.shape}")
        if features.shape[1] < 1:
            raise InvalidArgumentError("empty feature sequence")
        return self.stack(apply_linear(self.params, f"{self.prefix}.input", features))

    def encode(self, features: np.ndarray) -> np.ndarray:
        """Numpy convenience: ``(T, F)`` or ``(N, T, F)`` -> strips, no graph recorded."""
        features = np.asarray(features, dtype=np.float64)
        single = features.ndim == 2
        with no_grad():
            out = self(features[None] if single else features).data
        return out[0] if single else out


class PoseRegressor:
    """Iterative error feedback: a shared 2-layer perceptron refines the state
    ``[theta, beta, camera]`` three times, starting from the mean state.

    Offset readouts map the strip through a per-offset linear layer first.
    """

    def __init__(self, layout: PoseLayout, dim=128, hidden=256, iterations=3, offsets=OFFSETS,
                 rng=None, prefix="regressor", output_gain=0.01):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.layout = layout
        self.dim = dim
        self.iterations = iterations
        self.offsets = tuple(offsets)
        self.prefix = prefix
        self.params = {f"{prefix}.mean": Tensor(layout.mean_state())}
        sd = layout.state_dim
        make_linear(self.params, f"{prefix}.fc1", rng, dim + sd, hidden)
        make_linear(self.params, f"{prefix}.fc2", rng, hidden, sd, gain=output_gain)
        for dt in self.offsets:
            name = self._offset_name(dt)
            self.params[f"{name}.w"] = Tensor(np.eye(dim))
            self.params[f"{name}.b"] = Tensor(np.zeros(dim))

    def _offset_name(self, dt):
        return f"{self.prefix}.offset_{'m' if dt < 0 else 'p'}{abs(dt)}"

    def __call__(self, strips) -> Tensor:
        """``(..., D)`` strips -> ``(..., state_dim)`` states."""
        strips = as_tensor(strips)
        if strips.shape[-1] != self.dim:
            raise InvalidArgumentError(f"expected strips of dimension {self.dim}, got {strips.shape[-1]}")
        lead = strips.shape[:-1]
        flat = strips.reshape((-1, self.dim))
        state = self.params[f"{self.prefix}.mean"] * np.ones((flat.shape[0], 1))
        for _ in range(self.iterations):
            h = relu(apply_linear(self.params, f"{self.prefix}.fc1", concat([flat, state], axis=1)))
            state = state + apply_linear(self.params, f"{self.prefix}.fc2", h)
        return state.reshape(lead + (self.layout.state_dim,))

    def offset(self, strips, dt) -> Tensor:
        """State at ``t + dt`` read from the strip at ``t``."""
        if dt not in self.offsets:
            raise InvalidArgumentError(f"offset {dt} not configured; available {self.offsets}")
        return self(apply_linear(self.params, self._offset_name(dt), as_tensor(strips)))

    def regress(self, strips: np.ndarray) -> np.ndarray:
        with no_grad():
            return self(np.asarray(strips, dtype=np.float64)).data

    def regress_offset(self, strips: np.ndarray, dt) -> np.ndarray:
        with no_grad():
            return self.offset(np.asarray(strips, dtype=np.float64), dt).data
