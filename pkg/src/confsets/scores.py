"""Nonconformity score functions for conformal classification.

Implements six scores over estimated class-probability vectors: inverse
probability (hinge), margin, cumulative-probability adaptive sets with and
without a rank penalty, and penalized inverse probability with and without
the same rank penalty. All functions are pure; randomness (the tie-break
variable u) is passed in by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIMPLEX_ATOL = 1e-6

KINDS = ("ip", "ms", "aps", "raps", "pip", "repip")


class SimplexError(ValueError):
    """A probability vector failed validation."""


def validate_probs(p) -> np.ndarray:
    """Validate a probability vector: entries in [0, 1], summing to 1.

    Returns the input as a float64 array. Raises SimplexError naming the
    offending entry or the bad total. Never renormalizes.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] < 2:
        raise SimplexError(f"expected a 1-d vector of >= 2 probabilities, got shape {p.shape}")
    bad = np.where((p < 0.0) | (p > 1.0))[0]
    if bad.size:
        i = int(bad[0])
        raise SimplexError(f"entry {i} = {p[i]} outside [0, 1]")
    total = float(p.sum())
    if abs(total - 1.0) > SIMPLEX_ATOL:
        raise SimplexError(f"entries sum to {total}, not 1 within {SIMPLEX_ATOL}")
    return p


def validate_prob_matrix(P) -> np.ndarray:
    """Row-wise validate_probs for a (n, K) matrix."""
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] < 2:
        raise SimplexError(f"expected an (n, K>=2) matrix, got shape {P.shape}")
    bad = np.where((P < 0.0) | (P > 1.0))
    if bad[0].size:
        r, c = int(bad[0][0]), int(bad[1][0])
        raise SimplexError(f"row {r}, entry {c} = {P[r, c]} outside [0, 1]")
    totals = P.sum(axis=1)
    off = np.where(np.abs(totals - 1.0) > SIMPLEX_ATOL)[0]
    if off.size:
        r = int(off[0])
        raise SimplexError(f"row {r} sums to {totals[r]}, not 1 within {SIMPLEX_ATOL}")
    return P


@dataclass(frozen=True)
class Ranking:
    """Descending-probability ordering of one probability vector.

    order[r] is the class at rank r+1; rank_of[k] is the 1-based rank of
    class k; sorted_probs[r] is the probability at rank r+1. Ties are broken
    by ascending class index, so equal inputs always rank identically.
    """

    order: np.ndarray
    rank_of: np.ndarray
    sorted_probs: np.ndarray


def rank(p) -> Ranking:
    """Rank classes by descending probability, ties by ascending index."""
    p = validate_probs(p)
    order = np.argsort(-p, kind="stable")
    rank_of = np.empty_like(order)
    rank_of[order] = np.arange(1, p.shape[0] + 1)
    return Ranking(order=order, rank_of=rank_of, sorted_probs=p[order])


@dataclass(frozen=True)
class ScoreSpec:
    """Selects a score function and its hyperparameters.

    kind: one of 'ip', 'ms', 'aps', 'raps', 'pip', 'repip'.
    lam: rank-penalty weight for raps; gamma: rank-penalty weight for repip.
    k_reg: 1-based rank at which the penalty starts (raps/repip).
    u_mode: 'random' draws a fresh tie-break u per object from the caller's
    seeded stream; 'fixed' always uses u_fixed (aps/raps only).
    """

    kind: str
    lam: float = 0.0
    gamma: float = 0.0
    k_reg: int = 1
    u_mode: str = "random"
    u_fixed: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown score kind {self.kind!r}; expected one of {KINDS}")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.k_reg < 1:
            raise ValueError("k_reg must be >= 1")
        if self.u_mode not in ("random", "fixed"):
            raise ValueError("u_mode must be 'random' or 'fixed'")
        if self.u_mode == "fixed" and not (0.0 < self.u_fixed <= 1.0):
            raise ValueError("fixed u must lie in (0, 1]")

    @property
    def uses_u(self) -> bool:
        return self.kind in ("aps", "raps")

    def label(self) -> str:
        """Short human-readable tag, e.g. 'raps(lam=0.02,k_reg=3)'."""
        if self.kind == "raps":
            return f"raps(lam={self.lam:g},k_reg={self.k_reg})"
        if self.kind == "repip":
            return f"repip(gamma={self.gamma:g},k_reg={self.k_reg})"
        return self.kind


def _check_label(p: np.ndarray, y: int) -> int:
    y = int(y)
    if not 0 <= y < p.shape[0]:
        raise ValueError(f"class index {y} out of range [0, {p.shape[0]})")
    return y


def score_ip(p, y: int) -> float:
    """Inverse probability (hinge): 1 - p[y]."""
    p = validate_probs(p)
    y = _check_label(p, y)
    return float(1.0 - p[y])


def score_ms(p, y: int) -> float:
    """Margin: max over other classes minus p[y]."""
    p = validate_probs(p)
    y = _check_label(p, y)
    others = np.delete(p, y)
    return float(others.max() - p[y])


def score_aps(p, y: int, u: float) -> float:
    """Cumulative probability of strictly higher-ranked classes plus u * p[y]."""
    if not 0.0 < u <= 1.0:
        raise ValueError(f"u = {u} outside (0, 1]")
    p = validate_probs(p)
    y = _check_label(p, y)
    r = rank(p)
    ry = int(r.rank_of[y])
    return float(r.sorted_probs[: ry - 1].sum() + u * p[y])


def score_raps(p, y: int, u: float, lam: float, k_reg: int) -> float:
    """APS plus lam * max(0, rank(y) - k_reg)."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    base = score_aps(p, y, u)
    ry = int(rank(p).rank_of[y])
    return base + lam * max(0, ry - k_reg)


def score_pip(p, y: int) -> float:
    """Inverse probability plus inverse-rank-weighted higher-ranked mass.

    Equals 1 - p[y] when y holds rank 1 (the penalty sum is empty); bounded
    by 2, attained when some other class takes all the mass.
    """
    p = validate_probs(p)
    y = _check_label(p, y)
    r = rank(p)
    ry = int(r.rank_of[y])
    higher = r.sorted_probs[: ry - 1]
    weights = 1.0 / np.arange(1, ry)
    return float((1.0 - p[y]) + higher @ weights)


def score_repip(p, y: int, gamma: float, k_reg: int) -> float:
    """PIP plus gamma * max(0, rank(y) - k_reg)."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    base = score_pip(p, y)
    ry = int(rank(p).rank_of[y])
    return base + gamma * max(0, ry - k_reg)


def _batch_rank(P: np.ndarray):
    """Row-wise ranking: (order, rank_of 1-based, sorted_probs)."""
    order = np.argsort(-P, axis=1, kind="stable")
    n, K = P.shape
    rank_of = np.empty_like(order)
    rows = np.arange(n)[:, None]
    rank_of[rows, order] = np.arange(1, K + 1)[None, :]
    sorted_probs = np.take_along_axis(P, order, axis=1)
    return order, rank_of, sorted_probs


def score_matrix(P, spec: ScoreSpec, u) -> np.ndarray:
    """Score every class of every row: (n, K) probabilities -> (n, K) scores.

    u is a scalar or length-n vector, one draw per object shared across that
    object's K classes (ignored by kinds that take no tie-break). One ranking
    per row is computed and reused across classes.
    """
    P = validate_prob_matrix(P)
    n, K = P.shape
    u = np.broadcast_to(np.asarray(u, dtype=np.float64), (n,))
    if spec.uses_u and (np.any(u <= 0.0) or np.any(u > 1.0)):
        raise ValueError("u values must lie in (0, 1]")

    if spec.kind == "ip":
        return 1.0 - P

    _, rank_of, sorted_probs = _batch_rank(P)

    if spec.kind == "ms":
        top = sorted_probs[:, 0][:, None]
        second = sorted_probs[:, 1][:, None]
        best_other = np.where(rank_of == 1, second, top)
        return best_other - P

    if spec.kind in ("aps", "raps"):
        csum = np.cumsum(sorted_probs, axis=1)
        mass_above = csum - sorted_probs  # cumulative mass of strictly higher ranks
        out = np.take_along_axis(mass_above, rank_of - 1, axis=1) + u[:, None] * P
        if spec.kind == "raps":
            out = out + spec.lam * np.maximum(0, rank_of - spec.k_reg)
        return out

    # pip / repip
    weighted = sorted_probs / np.arange(1, K + 1)[None, :]
    prefix = np.concatenate([np.zeros((n, 1)), np.cumsum(weighted, axis=1)], axis=1)
    penalty = np.take_along_axis(prefix, rank_of - 1, axis=1)
    out = (1.0 - P) + penalty
    if spec.kind == "repip":
        out = out + spec.gamma * np.maximum(0, rank_of - spec.k_reg)
    return out


def score_all_classes(p, spec: ScoreSpec, u: float = 1.0) -> np.ndarray:
    """All K scores of one probability vector under spec, sharing one u."""
    p = validate_probs(p)
    return score_matrix(p[None, :], spec, u)[0]


def score_true_labels(P, labels, spec: ScoreSpec, u) -> np.ndarray:
    """Score each row at its given label: (n, K), (n,) -> (n,)."""
    P = validate_prob_matrix(P)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (P.shape[0],):
        raise ValueError("labels must be a vector matching the number of rows")
    if np.any((labels < 0) | (labels >= P.shape[1])):
        bad = int(np.where((labels < 0) | (labels >= P.shape[1]))[0][0])
        raise ValueError(f"label at row {bad} out of range [0, {P.shape[1]})")
    full = score_matrix(P, spec, u)
    return np.take_along_axis(full, labels[:, None], axis=1)[:, 0]
