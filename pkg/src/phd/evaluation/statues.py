"""Find the conditioning window after which future-prediction accuracy rises
most sharply."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError

TIE_TOL = 1e-12


@dataclass
class StatueResult:
    frame: int                 # first frame after the best conditioning window
    window_end: int
    windows: np.ndarray        # window end indices
    accuracy: np.ndarray       # raw accuracy per window
    smoothed: np.ndarray
    change: np.ndarray         # smoothed central difference


def box3(a: np.ndarray) -> np.ndarray:
    p = np.concatenate([a[:1], a, a[-1:]])
    return (p[:-2] + p[1:-1] + p[2:]) / 3.0


def central_difference(a: np.ndarray) -> np.ndarray:
    p = np.concatenate([a[:1], a, a[-1:]])
    return (p[2:] - p[:-2]) / 2.0


def statue_from_profile(windows, accuracy) -> StatueResult:
    """Width-3 box smoothing, central difference, earliest maximum (values within
    ``TIE_TOL`` of the maximum count as ties)."""
    windows = np.asarray(windows, dtype=np.int64)
    acc = np.asarray(accuracy, dtype=np.float64)
    if len(acc) < 3:
        raise InsufficientDataError("statue discovery needs at least 3 conditioning windows")
    sm = box3(acc)
    d = central_difference(sm)
    best = int(np.flatnonzero(d >= d.max() - TIE_TOL * max(1.0, abs(d.max())))[0])
    return StatueResult(int(windows[best]) + 1, int(windows[best]), windows, acc, sm, d)


def discover_statues(sequence_length: int, accuracy_fn, conditioning=15, future=15) -> StatueResult:
    """``accuracy_fn(window_ends)`` returns the mean accuracy of the ``future``-frame
    prediction conditioned on frames ``w - conditioning + 1 .. w`` for each ``w``.

    Windows run from the first full conditioning window to the last one whose
    future still lies inside the sequence.
    """
    windows = np.arange(conditioning - 1, sequence_length - future)
    if len(windows) < 3:
        raise InsufficientDataError(
            f"sequence of {sequence_length} frames gives {len(windows)} windows; at least 3 needed")
    return statue_from_profile(windows, accuracy_fn(windows))
