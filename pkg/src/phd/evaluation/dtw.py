"""Dynamic time warping over a ground-truth x prediction cost matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError

# predecessor moves in tie-break order: diagonal, advance gt only, advance prediction only
_MOVES = ((-1, -1), (-1, 0), (0, -1))


@dataclass(frozen=True)
class DtwMatching:
    pairs: tuple          # ((gt index, pred index), ...)
    total_cost: float

    def matches_for_gt(self, n: int) -> list:
        out = [[] for _ in range(n)]
        for i, j in self.pairs:
            out[i].append(j)
        return out


def accumulated_cost(cost: np.ndarray) -> np.ndarray:
    n, m = cost.shape
    acc = np.full((n, m), np.inf)
    acc[0, 0] = cost[0, 0]
    for i in range(n):
        for j in range(m):
            if i == 0 and j == 0:
                continue
            best = np.inf
            for di, dj in _MOVES:
                pi, pj = i + di, j + dj
                if pi >= 0 and pj >= 0 and acc[pi, pj] < best:
                    best = acc[pi, pj]
            acc[i, j] = cost[i, j] + best
    return acc


def dtw_match(cost) -> DtwMatching:
    """Minimum-cost monotone path from ``(0, 0)`` to ``(n-1, m-1)`` with unit steps.

    On equal accumulated cost the diagonal predecessor wins, then the one that
    advances only the ground-truth index.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] < 1 or cost.shape[1] < 1:
        raise InvalidArgumentError(f"dtw_match needs a non-empty 2D cost matrix, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise InvalidArgumentError("dtw_match needs finite costs")
    acc = accumulated_cost(cost)
    i, j = cost.shape[0] - 1, cost.shape[1] - 1
    path = [(i, j)]
    while (i, j) != (0, 0):
        best, move = np.inf, None
        for di, dj in _MOVES:
            pi, pj = i + di, j + dj
            if pi >= 0 and pj >= 0 and acc[pi, pj] < best:
                best, move = acc[pi, pj], (pi, pj)
        i, j = move
        path.append((i, j))
    path.reverse()
    return DtwMatching(tuple(path), float(acc[-1, -1]))


def matched_scores(cost, matching: DtwMatching) -> np.ndarray:
    """Per ground-truth frame, the cheapest cost among its matched predictions."""
    cost = np.asarray(cost)
    out = np.full(cost.shape[0], np.inf)
    for i, j in matching.pairs:
        out[i] = min(out[i], cost[i, j])
    return out
