"""Central finite-difference checks against :func:`backward`."""
from __future__ import annotations

import numpy as np

from .tensor import backward, no_grad


def relative_error(analytic, numeric, floor=1e-6):
    """``|a - n| / max(|a|, |n|, floor)``; the floor keeps near-zero gradients from dividing by noise."""
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def gradcheck(loss_fn, params: dict, num_coords=200, h=1e-5, seed=0, floor=1e-6):
    """Compare analytic and numeric gradients on randomly sampled coordinates.

    ``loss_fn()`` must rebuild the scalar loss from the current parameter values.
    Returns ``(max_relative_error, records)`` with one record per coordinate.
    """
    rng = np.random.default_rng(seed)
    grads = backward(loss_fn(), params)
    names = sorted(params)
    sizes = np.array([params[n].data.size for n in names], dtype=np.float64)
    records = []
    for _ in range(num_coords):
        name = names[rng.choice(len(names), p=sizes / sizes.sum())]
        p = params[name]
        flat = int(rng.integers(p.data.size))
        idx = np.unravel_index(flat, p.data.shape)
        orig = p.data[idx]
        with no_grad():
            p.data[idx] = orig + h
            up = float(loss_fn().data)
            p.data[idx] = orig - h
            down = float(loss_fn().data)
        p.data[idx] = orig
        numeric = (up - down) / (2.0 * h)
        analytic = float(grads[name][idx])
        err = float(relative_error(analytic, numeric, floor))
        records.append((name, idx, analytic, numeric, err))
    worst = max((r[4] for r in records), default=0.0)
    return worst, records
