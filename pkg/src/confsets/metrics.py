"""Evaluation metrics for prediction sets and cross-trial aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformal import PredictionSet
from .scores import ScoreSpec


def coverage(sets, labels) -> float:
    """Fraction of prediction sets containing the true label."""
    sets = list(sets)
    labels = list(labels)
    if not sets:
        raise ValueError("empty input")
    if len(sets) != len(labels):
        raise ValueError(f"length mismatch: {len(sets)} sets vs {len(labels)} labels")
    hits = sum(1 for s, y in zip(sets, labels) if int(y) in s)
    return hits / len(sets)


def efficiency(sets) -> float:
    """Mean prediction-set size."""
    sets = list(sets)
    if not sets:
        raise ValueError("empty input")
    return sum(s.size for s in sets) / len(sets)


def informativeness(sets) -> float:
    """Fraction of prediction sets of size exactly 1 (oneC)."""
    sets = list(sets)
    if not sets:
        raise ValueError("empty input")
    return sum(1 for s in sets if s.size == 1) / len(sets)


@dataclass(frozen=True)
class TrialResult:
    """Metrics of one calibration/test split."""

    coverage: float
    efficiency: float
    informativeness: float
    n_test: int
    seed: int
    spec: ScoreSpec
    alpha: float


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    std: float
    min: float
    max: float
    values: np.ndarray


@dataclass(frozen=True)
class AggregateResult:
    """Per-metric distributions over repeated splits of one spec/alpha."""

    spec: ScoreSpec
    alpha: float
    n_trials: int
    coverage: MetricSummary
    efficiency: MetricSummary
    informativeness: MetricSummary


def _summarize(values) -> MetricSummary:
    v = np.asarray(values, dtype=np.float64)
    std = float(v.std(ddof=1)) if v.shape[0] > 1 else 0.0
    return MetricSummary(mean=float(v.mean()), std=std,
                         min=float(v.min()), max=float(v.max()), values=v)


def aggregate(trials) -> AggregateResult:
    """Summarize trial metrics; trials must share spec and alpha."""
    trials = sorted(trials, key=lambda t: t.seed)
    if not trials:
        raise ValueError("empty input")
    spec, alpha = trials[0].spec, trials[0].alpha
    for t in trials:
        if t.spec != spec or t.alpha != alpha:
            raise ValueError("trials mix different specs or alphas")
    return AggregateResult(
        spec=spec, alpha=alpha, n_trials=len(trials),
        coverage=_summarize([t.coverage for t in trials]),
        efficiency=_summarize([t.efficiency for t in trials]),
        informativeness=_summarize([t.informativeness for t in trials]),
    )
