"""Repeated-split evaluation harness and hyperparameter sweeps.

Every trial's calibration/test partition and tie-break draws derive from
(master_seed, trial index) alone, so all score functions and all sweep grid
values see the identical splits and the identical per-object u values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conformal import calibrate, predict_sets
from .metrics import (AggregateResult, TrialResult, aggregate, coverage,
                      efficiency, informativeness)
from .scores import ScoreSpec, validate_prob_matrix

DEFAULT_CAL_FRACTION = 13.5 / (13.5 + 16.5)


@dataclass(frozen=True)
class ExperimentPlan:
    """Protocol for a repeated-split comparison of score functions."""

    specs: tuple
    alpha: float = 0.1
    n_trials: int = 1000
    cal_fraction: float = DEFAULT_CAL_FRACTION
    master_seed: int = 0
    fill_empty_with_argmax: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0.0 < self.cal_fraction < 1.0:
            raise ValueError("cal_fraction must lie in (0, 1)")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if not self.specs:
            raise ValueError("need at least one score spec")


@dataclass(frozen=True)
class SweepPlan:
    """Grid sweep over one regularization weight at a fixed penalty rank."""

    parameter: str  # "lambda" or "gamma"
    grid: tuple
    k_reg: int = 3
    n_trials: int = 100
    alpha: float = 0.1
    cal_fraction: float = DEFAULT_CAL_FRACTION
    master_seed: int = 0

    def __post_init__(self):
        if self.parameter not in ("lambda", "gamma"):
            raise ValueError("parameter must be 'lambda' or 'gamma'")
        if not self.grid or any(v < 0 for v in self.grid):
            raise ValueError("grid must be nonempty with values >= 0")
        if list(self.grid) != sorted(self.grid):
            raise ValueError("grid must be sorted ascending")


def trial_split(master_seed: int, trial: int, n: int, cal_fraction: float):
    """Deterministic (cal indices, test indices) for one trial."""
    n_cal = int(round(n * cal_fraction))
    n_cal = min(max(n_cal, 1), n - 1)
    rng = np.random.default_rng(np.random.SeedSequence([master_seed, trial, 0]))
    perm = rng.permutation(n)
    return perm[:n_cal], perm[n_cal:]


def trial_u(master_seed: int, trial: int, n: int) -> np.ndarray:
    """Per-object tie-break draws in (0, 1], indexed by dataset position."""
    rng = np.random.default_rng(np.random.SeedSequence([master_seed, trial, 1]))
    return 1.0 - rng.random(n)


def _run_one(P, labels, spec, alpha, master_seed, trial, cal_fraction,
             fill_empty=False):
    n = P.shape[0]
    cal_idx, test_idx = trial_split(master_seed, trial, n, cal_fraction)
    u = trial_u(master_seed, trial, n)
    if spec.u_mode == "fixed":
        u = np.full(n, spec.u_fixed)
    record = calibrate(P[cal_idx], labels[cal_idx], spec, alpha,
                       u_values=u[cal_idx])
    sets = predict_sets(P[test_idx], record, u_values=u[test_idx])
    if fill_empty:
        from .conformal import PredictionSet
        argmax = P[test_idx].argmax(axis=1)
        sets = [s if s.size else PredictionSet(frozenset([int(a)]))
                for s, a in zip(sets, argmax)]
    return sets, test_idx, record


def run_experiment(P, labels, plan: ExperimentPlan) -> dict:
    """Repeated-split evaluation; returns {spec: AggregateResult}."""
    P = validate_prob_matrix(P)
    labels = np.asarray(labels, dtype=np.int64)
    if P.shape[0] < 2:
        raise ValueError("need at least 2 examples to split")
    out = {}
    for spec in plan.specs:
        trials = []
        for t in range(plan.n_trials):
            sets, test_idx, _ = _run_one(P, labels, spec, plan.alpha,
                                         plan.master_seed, t, plan.cal_fraction,
                                         plan.fill_empty_with_argmax)
            trials.append(TrialResult(
                coverage=coverage(sets, labels[test_idx]),
                efficiency=efficiency(sets),
                informativeness=informativeness(sets),
                n_test=len(sets), seed=t, spec=spec, alpha=plan.alpha))
        out[spec] = aggregate(trials)
    return out


def run_sweep(P, labels, sweep: SweepPlan, base_kind: str):
    """Per-(grid value, trial) metrics table for raps or repip.

    Returns a list of dicts with keys value/trial/coverage/efficiency/
    informativeness, plus per-adjacent-value counts of trials whose
    prediction sets were identical (saturation probe, reported not asserted).
    """
    if base_kind not in ("raps", "repip"):
        raise ValueError("base_kind must be 'raps' or 'repip'")
    P = validate_prob_matrix(P)
    labels = np.asarray(labels, dtype=np.int64)
    rows = []
    sets_by_value = {}
    for value in sweep.grid:
        if base_kind == "raps":
            spec = ScoreSpec("raps", lam=float(value), k_reg=sweep.k_reg)
        else:
            spec = ScoreSpec("repip", gamma=float(value), k_reg=sweep.k_reg)
        per_trial_sets = []
        for t in range(sweep.n_trials):
            sets, test_idx, _ = _run_one(P, labels, spec, sweep.alpha,
                                         sweep.master_seed, t, sweep.cal_fraction)
            per_trial_sets.append([s.classes for s in sets])
            rows.append({
                "value": float(value), "trial": t,
                "coverage": coverage(sets, labels[test_idx]),
                "efficiency": efficiency(sets),
                "informativeness": informativeness(sets),
            })
        sets_by_value[float(value)] = per_trial_sets
    saturation = []
    grid = [float(v) for v in sweep.grid]
    for lo, hi in zip(grid, grid[1:]):
        same = sum(1 for a, b in zip(sets_by_value[lo], sets_by_value[hi]) if a == b)
        saturation.append({"value_lo": lo, "value_hi": hi,
                           "identical_trials": same, "n_trials": sweep.n_trials})
    return rows, saturation


def comparison_report(results: dict) -> list[str]:
    """Directional observations across score functions (informational only)."""
    by_kind = {agg.spec.kind: agg for agg in results.values()}
    lines = []
    best_eff = min(by_kind, key=lambda k: by_kind[k].efficiency.mean)
    lines.append(f"smallest mean set size: {best_eff} "
                 f"({by_kind[best_eff].efficiency.mean:.4f})"
                 + ("" if best_eff == "ip" else " [differs from the expected ip]"))
    best_one = max(by_kind, key=lambda k: by_kind[k].informativeness.mean)
    expected = {"ms", "pip", "repip"}
    lines.append(f"highest singleton fraction: {best_one} "
                 f"({by_kind[best_one].informativeness.mean:.4f})"
                 + ("" if best_one in expected
                    else " [differs from the expected ms/pip/repip]"))
    return lines
