"""Split-conformal calibration and prediction-set construction.

Calibration computes the finite-sample-corrected quantile of the true-label
nonconformity scores; prediction includes every class whose score is at or
below that threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scores import ScoreSpec, score_matrix, score_true_labels, validate_prob_matrix

RECORD_FORMAT = "confsets-calibration-record"
RECORD_VERSION = 1


@dataclass(frozen=True)
class CalibrationRecord:
    """Output of split-conformal calibration.

    q_cal is the ceil((n+1)(1-alpha))-th smallest calibration score, or +inf
    when that index exceeds n_cal (every class then conforms). sorted_scores
    is kept ascending for diagnostics and serialization.
    """

    q_cal: float
    alpha: float
    n_cal: int
    n_classes: int
    spec: ScoreSpec
    sorted_scores: np.ndarray


@dataclass(frozen=True)
class PredictionSet:
    """Set of conforming class indices for one object."""

    classes: frozenset

    @property
    def size(self) -> int:
        return len(self.classes)

    def __contains__(self, k: int) -> bool:
        return k in self.classes


def conformal_quantile(scores, alpha: float) -> float:
    """Finite-sample-corrected (1-alpha) quantile of calibration scores."""
    scores = np.sort(np.asarray(scores, dtype=np.float64))
    n = scores.shape[0]
    if n < 1:
        raise ValueError("need at least one calibration score")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha = {alpha} outside (0, 1)")
    idx = math.ceil((n + 1) * (1.0 - alpha))
    if idx > n:
        return math.inf
    return float(scores[idx - 1])


def draw_u(seed: int, n: int, spec: ScoreSpec) -> np.ndarray:
    """Per-object tie-break values for a batch, per the spec's u_mode."""
    if spec.u_mode == "fixed" or not spec.uses_u:
        return np.full(n, spec.u_fixed)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    # uniform on (0, 1]: flip the half-open interval from default_rng
    return 1.0 - rng.random(n)


def calibrate(cal_probs, cal_labels, spec: ScoreSpec, alpha: float,
              seed: int = 0, u_values=None) -> CalibrationRecord:
    """Calibrate a score threshold on held-out (probabilities, label) pairs.

    u_values overrides the internally derived per-example tie-break draws;
    the experiment harness uses this to share u across score functions.
    """
    P = validate_prob_matrix(cal_probs)
    n = P.shape[0]
    if u_values is None:
        u_values = draw_u(seed, n, spec)
    scores = score_true_labels(P, cal_labels, spec, u_values)
    q = conformal_quantile(scores, alpha)
    return CalibrationRecord(
        q_cal=q, alpha=alpha, n_cal=n, n_classes=P.shape[1],
        spec=spec, sorted_scores=np.sort(scores),
    )


def predict_sets(test_probs, record: CalibrationRecord, u_values=None,
                 seed: int = 0) -> list[PredictionSet]:
    """Prediction sets for a batch of probability vectors.

    Inclusion is non-strict (score <= q_cal); with q_cal = +inf every class
    is included. Empty sets are returned as such, never patched.
    """
    P = validate_prob_matrix(test_probs)
    if P.shape[1] != record.n_classes:
        raise ValueError(
            f"class count {P.shape[1]} differs from calibration-time {record.n_classes}")
    if u_values is None:
        u_values = draw_u(seed, P.shape[0], record.spec)
    scores = score_matrix(P, record.spec, u_values)
    mask = scores <= record.q_cal
    return [PredictionSet(frozenset(np.where(row)[0].tolist())) for row in mask]


def predict_set(p, record: CalibrationRecord, u: float = 1.0) -> PredictionSet:
    """Prediction set for a single probability vector."""
    p = np.asarray(p, dtype=np.float64)
    return predict_sets(p[None, :], record, u_values=np.asarray([u]))[0]


def write_record(record: CalibrationRecord, path) -> None:
    """Serialize a calibration record to the versioned text format."""
    lines = [
        f"format={RECORD_FORMAT}",
        f"version={RECORD_VERSION}",
        f"kind={record.spec.kind}",
        f"lam={record.spec.lam!r}",
        f"gamma={record.spec.gamma!r}",
        f"k_reg={record.spec.k_reg}",
        f"u_mode={record.spec.u_mode}",
        f"u_fixed={record.spec.u_fixed!r}",
        f"alpha={record.alpha!r}",
        f"n_cal={record.n_cal}",
        f"n_classes={record.n_classes}",
        f"q_cal={record.q_cal!r}",
        "scores=",
    ]
    lines.extend(repr(float(s)) for s in record.sorted_scores)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_record(path) -> CalibrationRecord:
    """Parse a calibration record written by write_record."""
    with open(path, encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    header = {}
    score_lines = []
    in_scores = False
    for line in raw:
        if in_scores:
            score_lines.append(float(line))
        elif line == "scores=":
            in_scores = True
        else:
            key, _, value = line.partition("=")
            header[key] = value
    if header.get("format") != RECORD_FORMAT:
        raise ValueError(f"{path}: not a calibration record")
    if int(header["version"]) != RECORD_VERSION:
        raise ValueError(f"{path}: unsupported record version {header['version']}")
    spec = ScoreSpec(
        kind=header["kind"], lam=float(header["lam"]), gamma=float(header["gamma"]),
        k_reg=int(header["k_reg"]), u_mode=header["u_mode"], u_fixed=float(header["u_fixed"]),
    )
    return CalibrationRecord(
        q_cal=float(header["q_cal"]), alpha=float(header["alpha"]),
        n_cal=int(header["n_cal"]), n_classes=int(header["n_classes"]),
        spec=spec, sorted_scores=np.asarray(score_lines, dtype=np.float64),
    )
