"""Metrics, DTW, horizon reports, baselines and statue discovery."""
from .baselines import (NearestNeighborDB, baseline_constant, baseline_nearest_neighbor,
                        build_nn_database, normalized_joints)
from .dtw import DtwMatching, dtw_match, matched_scores
from .metrics import SimilarityTransform, mpjpe, pck, pck_scale, procrustes_align, reconstruction_error
from .report import HORIZONS, METRICS, EvaluationReport, Forecast, evaluate
from .statues import StatueResult, discover_statues, statue_from_profile

__all__ = [
    "NearestNeighborDB", "baseline_constant", "baseline_nearest_neighbor", "build_nn_database",
    "normalized_joints", "DtwMatching", "dtw_match", "matched_scores", "SimilarityTransform", "mpjpe",
    "pck", "pck_scale", "procrustes_align", "reconstruction_error", "HORIZONS", "METRICS",
    "EvaluationReport", "Forecast", "evaluate", "StatueResult", "discover_statues", "statue_from_profile",
]
