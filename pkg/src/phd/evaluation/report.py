"""Horizon evaluation of forecasts, with and without DTW, and report I/O."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from ..camera import fit_camera_batch
from ..errors import InvalidArgumentError
from .dtw import dtw_match, matched_scores
from .metrics import mpjpe, pck, reconstruction_error

HORIZONS = (1, 5, 10, 20, 30)
METRICS = ("reconstruction_mm", "pck", "mpjpe_mm")
HIGHER_IS_BETTER = {"pck"}


@dataclass
class Forecast:
    """One predicted future against its ground truth; arrays are ``(H, J, *)``."""
    motif: str
    pred_joints: np.ndarray
    gt_joints: np.ndarray
    gt_keypoints: np.ndarray
    visibility: np.ndarray
    sequence: int = 0
    start: int = 0


@dataclass
class EvaluationReport:
    rows: list = field(default_factory=list)   # (motif, horizon, metric, dtw_flag, value)

    def value(self, motif, horizon, metric, dtw):
        for m, h, k, d, v in self.rows:
            if (m, h, k, d) == (motif, horizon, metric, bool(dtw)):
                return v
        raise KeyError((motif, horizon, metric, dtw))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["motif", "horizon", "metric", "dtw_flag", "value"])
        for m, h, k, d, v in self.rows:
            w.writerow([m, h, k, int(d), f"{v:.6f}"])
        return buf.getvalue()

    def to_json(self) -> str:
        nested = {}
        for m, h, k, d, v in self.rows:
            nested.setdefault(m, {}).setdefault(k, {}).setdefault("dtw" if d else "no_dtw", {})[str(h)] = round(v, 6)
        return json.dumps(nested, indent=1, sort_keys=True) + "\n"

    def write(self, csv_path=None, json_path=None):
        if csv_path is not None:
            with open(csv_path, "w", newline="") as fh:
                fh.write(self.to_csv())
        if json_path is not None:
            with open(json_path, "w") as fh:
                fh.write(self.to_json())


def pair_costs(f: Forecast, h: int) -> dict:
    """``(h, h)`` cost matrices (rows: gt frames, columns: predicted frames) per metric.

    The PCK cost is ``100 - PCK``; the 2D prediction of every pair uses the
    camera fitted to that pair's ground-truth keypoints.
    """
    pj = np.asarray(f.pred_joints[:h])
    gj = np.asarray(f.gt_joints[:h])
    gk = np.asarray(f.gt_keypoints[:h])
    vis = np.asarray(f.visibility[:h], dtype=bool)
    pj_b = np.broadcast_to(pj[None], (h,) + pj.shape)    # [i, j] -> pred j
    gj_b = np.broadcast_to(gj[:, None], (h,) + gj.shape)
    gk_b = np.broadcast_to(gk[:, None], (h,) + gk.shape)
    vis_b = np.broadcast_to(vis[:, None], (h,) + vis.shape)
    cam = fit_camera_batch(pj_b[..., :2], gk_b, vis_b)
    kp = cam[..., :1, None] * pj_b[..., :2] + cam[..., None, 1:3]
    p = pck(kp, gk_b, vis_b)
    return {
        "reconstruction_mm": reconstruction_error(pj_b, gj_b),
        "pck": 100.0 - np.nan_to_num(p, nan=100.0),
        "mpjpe_mm": mpjpe(pj_b, gj_b),
    }


def horizon_scores(f: Forecast, horizons, use_dtw: bool) -> dict:
    """``{metric: {h: score}}`` for one forecast."""
    out = {k: {} for k in METRICS}
    hmax = max(horizons)
    if len(f.pred_joints) < hmax or len(f.gt_joints) < hmax:
        raise InvalidArgumentError(f"horizon {hmax} exceeds forecast length {len(f.pred_joints)}")
    full = pair_costs(f, hmax)
    for h in horizons:
        for k in METRICS:
            c = full[k][:h, :h]
            if use_dtw:
                per_gt = matched_scores(c, dtw_match(c))
            else:
                per_gt = np.diag(c)
            score = float(per_gt.mean())
            out[k][h] = 100.0 - score if k == "pck" else score
    return out


def evaluate(forecasts, horizons=HORIZONS, use_dtw=(False, True)) -> EvaluationReport:
    """Mean over forecasts of each horizon metric, per motif and over all motifs.

    Horizon ``h`` scores the first ``h`` future frames: without DTW frame ``i``
    is compared with prediction ``i``; with DTW each ground-truth frame takes the
    cheapest prediction it is matched to on the ``h``-prefix alignment.
    """
    horizons = tuple(sorted(set(int(h) for h in horizons)))
    if not horizons or horizons[0] < 1:
        raise InvalidArgumentError("horizons must be positive")
    if isinstance(use_dtw, bool):
        use_dtw = (use_dtw,)
    forecasts = sorted(forecasts, key=lambda f: (f.sequence, f.start))
    per = {d: [horizon_scores(f, horizons, d) for f in forecasts] for d in use_dtw}
    motifs = sorted({f.motif for f in forecasts})
    rows = []
    for motif in ["all"] + motifs:
        idx = [i for i, f in enumerate(forecasts) if motif == "all" or f.motif == motif]
        if not idx:
            continue
        for h in horizons:
            for k in METRICS:
                for d in use_dtw:
                    rows.append((motif, h, k, bool(d), float(np.mean([per[d][i][k][h] for i in idx]))))
    return EvaluationReport(rows)
