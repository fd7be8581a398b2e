"""Network and loss operators with hand-written gradients.

Sequence tensors are laid out ``(batch, time, channels)``.
"""
from __future__ import annotations

import numpy as np

from ..errors import InvalidArgumentError
from .tensor import Tensor, _make, as_tensor, concat, tsum, unbroadcast

PAD_MODES = ("edge_causal", "edge_centered")


def linear(x, w, b=None):
    """``x @ w + b`` over the last axis of ``x``; ``w`` is ``(in, out)``."""
    x, w = as_tensor(x), as_tensor(w)
    if x.shape[-1] != w.shape[0]:
        raise InvalidArgumentError(f"linear: input has {x.shape[-1]} features, weight expects {w.shape[0]}")
    x2 = x.data.reshape(-1, x.shape[-1])
    out = x2 @ w.data
    if b is not None:
        b = as_tensor(b)
        out = out + b.data
    out = out.reshape(x.shape[:-1] + (w.shape[1],))

    def bw(g):
        g2 = g.reshape(-1, w.shape[1])
        gx = (g2 @ w.data.T).reshape(x.shape)
        gw = x2.T @ g2
        if b is None:
            return gx, gw
        return gx, gw, g2.sum(axis=0)

    parents = (x, w) if b is None else (x, w, b)
    return _make(out, parents, bw, "linear")


def _pad_amounts(k, mode):
    if mode == "edge_causal":
        return k - 1, 0
    if mode == "edge_centered":
        if k % 2 == 0:
            raise InvalidArgumentError("centered padding needs an odd kernel size")
        return (k - 1) // 2, (k - 1) // 2
    raise InvalidArgumentError(f"unknown pad mode {mode!r}; expected one of {PAD_MODES}")


def conv1d_edge(x, w, b=None, pad_mode="edge_causal"):
    """1D convolution over time with edge-replicated padding.

    ``w`` is ``(k, C_in, C_out)``. Causal mode pads ``k-1`` copies of the first
    frame on the left only, so output ``t`` reads inputs ``t-k+1 .. t``. Centered
    mode pads both sides and output ``t`` reads ``t-(k-1)/2 .. t+(k-1)/2``.
    """
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim != 3:
        raise InvalidArgumentError("conv1d_edge expects (batch, time, channels)")
    k, cin, cout = w.shape
    if x.shape[2] != cin:
        raise InvalidArgumentError(f"conv1d_edge: {x.shape[2]} input channels, kernel expects {cin}")
    left, right = _pad_amounts(k, pad_mode)
    n, t, _ = x.shape
    parts = [np.repeat(x.data[:, :1], left, axis=1), x.data, np.repeat(x.data[:, -1:], right, axis=1)]
    xp = np.concatenate(parts, axis=1)
    cols = np.stack([xp[:, j:j + t] for j in range(k)], axis=2).reshape(n * t, k * cin)
    wf = w.data.reshape(k * cin, cout)
    out = cols @ wf
    if b is not None:
        b = as_tensor(b)
        out = out + b.data
    out = out.reshape(n, t, cout)

    def bw(g):
        g2 = g.reshape(n * t, cout)
        gw = (cols.T @ g2).reshape(k, cin, cout)
        gcols = (g2 @ wf.T).reshape(n, t, k, cin)
        gxp = np.zeros_like(xp)
        for j in range(k):
            gxp[:, j:j + t] += gcols[:, :, j]
        gx = gxp[:, left:left + t].copy()
        if left:
            gx[:, 0] += gxp[:, :left].sum(axis=1)
        if right:
            gx[:, -1] += gxp[:, left + t:].sum(axis=1)
        if b is None:
            return gx, gw
        return gx, gw, g2.sum(axis=0)

    parents = (x, w) if b is None else (x, w, b)
    return _make(out, parents, bw, "conv1d_edge")


def group_norm(x, groups, gamma=None, beta=None, eps=1e-5):
    """Normalise each frame's channels within ``groups`` contiguous groups.

    Statistics never mix time steps, which keeps causal stacks causal.
    """
    x = as_tensor(x)
    c = x.shape[-1]
    if c % groups:
        raise InvalidArgumentError(f"{c} channels not divisible into {groups} groups")
    lead = x.shape[:-1]
    xg = x.data.reshape(lead + (groups, c // groups))
    mu = xg.mean(axis=-1, keepdims=True)
    xc = xg - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * inv
    out = xhat.reshape(x.shape)
    g_arr = None if gamma is None else as_tensor(gamma)
    b_arr = None if beta is None else as_tensor(beta)
    if g_arr is not None:
        out = out * g_arr.data
    if b_arr is not None:
        out = out + b_arr.data

    def bw(g):
        grads = []
        gy = g if g_arr is None else g * g_arr.data
        gy = gy.reshape(xhat.shape)
        gx = inv * (gy - gy.mean(axis=-1, keepdims=True)
                    - xhat * (gy * xhat).mean(axis=-1, keepdims=True))
        grads.append(gx.reshape(x.shape))
        if g_arr is not None:
            grads.append(unbroadcast(g * xhat.reshape(x.shape), g_arr.shape))
        if b_arr is not None:
            grads.append(unbroadcast(g, b_arr.shape))
        return tuple(grads)

    parents = (x,) + tuple(p for p in (g_arr, b_arr) if p is not None)
    return _make(out, parents, bw, "group_norm")


def slice_time(x, start, stop):
    x = as_tensor(x)
    if not (0 <= start <= stop <= x.shape[1]):
        raise InvalidArgumentError(f"time slice {start}:{stop} outside length {x.shape[1]}")
    return x[:, start:stop]


def concat_features(x, y):
    x, y = as_tensor(x), as_tensor(y)
    if x.shape[:-1] != y.shape[:-1]:
        raise InvalidArgumentError(f"concat_features: leading shapes differ {x.shape} vs {y.shape}")
    return concat([x, y], axis=-1)


def l2(x):
    """Sum of squares."""
    x = as_tensor(x)
    return _make(np.sum(x.data * x.data), (x,), lambda g: (2.0 * g * x.data,), "l2")


def mse(x, y):
    x, y = as_tensor(x), as_tensor(y)
    if x.shape != y.shape:
        raise InvalidArgumentError(f"mse: shape mismatch {x.shape} vs {y.shape}")
    d = x.data - y.data
    scale = 2.0 / d.size

    def bw(g):
        gd = g * scale * d
        return gd, -gd

    return _make(np.mean(d * d), (x, y), bw, "mse")


def masked_mse(x, y, mask):
    """Mean squared error over entries where ``mask`` (broadcast to ``x``) is set; 0 if none are."""
    x, y = as_tensor(x), as_tensor(y)
    if x.shape != y.shape:
        raise InvalidArgumentError(f"masked_mse: shape mismatch {x.shape} vs {y.shape}")
    m = np.broadcast_to(np.asarray(mask, dtype=np.float64), x.shape)
    count = m.sum()
    d = (x.data - y.data) * m
    if count == 0:
        return _make(np.float64(0.0), (x, y), lambda g: (None, None), "masked_mse")
    scale = 2.0 / count

    def bw(g):
        gd = g * scale * d
        return gd, -gd

    return _make(np.sum(d * d) / count, (x, y), bw, "masked_mse")


def rodrigues_coefficients(theta_sq):
    """Differentiable ``sin(t)/t`` and ``(1-cos(t))/t**2`` of ``t**2``.

    Values switch to a Taylor expansion below 1e-8 rad; derivatives switch to
    their series below 1e-2 rad, where the closed forms lose precision.
    """
    from ..kinematics import rodrigues_coefficients as coeff_values

    s = as_tensor(theta_sq)
    a_val, b_val = coeff_values(s.data)
    q = s.data
    series = q < 1e-4
    safe = np.where(series, 1.0, q)
    th = np.sqrt(safe)
    sin, cos = np.sin(th), np.cos(th)
    da = np.where(series, -1.0 / 6.0 + q / 60.0 - q * q / 1680.0,
                  (th * cos - sin) / (2.0 * safe * th))
    db = np.where(series, -1.0 / 24.0 + q / 360.0 - q * q / 13440.0,
                  (th * sin - 2.0 * (1.0 - cos)) / (2.0 * safe * safe))
    a = _make(a_val, (s,), lambda g: (g * da,), "rod_a")
    b = _make(b_val, (s,), lambda g: (g * db,), "rod_b")
    return a, b


_SKEW_BASIS = np.zeros((3, 9))
_SKEW_BASIS[2, 0 * 3 + 1] = -1.0
_SKEW_BASIS[1, 0 * 3 + 2] = 1.0
_SKEW_BASIS[2, 1 * 3 + 0] = 1.0
_SKEW_BASIS[0, 1 * 3 + 2] = -1.0
_SKEW_BASIS[1, 2 * 3 + 0] = -1.0
_SKEW_BASIS[0, 2 * 3 + 1] = 1.0


def rodrigues(aa):
    """Differentiable axis-angle ``(..., 3)`` to rotation matrices ``(..., 3, 3)``."""
    aa = as_tensor(aa)
    lead = aa.shape[:-1]
    a, b = rodrigues_coefficients(tsum(aa * aa, axis=-1))
    k = (aa.reshape(-1, 3) @ Tensor(_SKEW_BASIS)).reshape(lead + (3, 3))
    a = a.reshape(lead + (1, 1))
    b = b.reshape(lead + (1, 1))
    return np.eye(3) + a * k + b * (k @ k)
