"""Conformal classification toolkit: nonconformity scores, split-conformal
calibration, prediction-set metrics, and a repeated-split experiment harness."""

from .conformal import (CalibrationRecord, PredictionSet, calibrate,
                        conformal_quantile, predict_set, predict_sets,
                        read_record, write_record)
from .metrics import (AggregateResult, TrialResult, aggregate, coverage,
                      efficiency, informativeness)
from .scores import (Ranking, ScoreSpec, SimplexError, rank, score_all_classes,
                     score_aps, score_ip, score_matrix, score_ms, score_pip,
                     score_raps, score_repip, score_true_labels, validate_probs)

__version__ = "0.1.0"

__all__ = [
    "CalibrationRecord", "PredictionSet", "calibrate", "conformal_quantile",
    "predict_set", "predict_sets", "read_record", "write_record",
    "AggregateResult", "TrialResult", "aggregate", "coverage", "efficiency",
    "informativeness", "Ranking", "ScoreSpec", "SimplexError", "rank",
    "score_all_classes", "score_aps", "score_ip", "score_matrix", "score_ms",
    "score_pip", "score_raps", "score_repip", "score_true_labels",
    "validate_probs", "__version__",
]
