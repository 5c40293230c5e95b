"""Property tests for the score functions on random simplex vectors."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from confsets.scores import (
    ScoreSpec,
    rank,
    score_all_classes,
    score_ip,
    score_ms,
    score_pip,
    score_raps,
    score_repip,
)


@st.composite
def simplex_vectors(draw, min_k=2, max_k=12):
    k = draw(st.integers(min_k, max_k))
    raw = draw(st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=k, max_size=k))
    total = sum(raw)
    if total <= 0:
        raw = [1.0] * k
        total = float(k)
    p = np.array(raw) / total
    return p / p.sum()  # second pass pins the float sum to 1


@st.composite
def simplex_and_label(draw, **kwargs):
    p = draw(simplex_vectors(**kwargs))
    y = draw(st.integers(0, p.shape[0] - 1))
    return p, y


@given(simplex_and_label())
def test_pip_within_bounds(case):
    p, y = case
    assert 0.0 <= score_pip(p, y) <= 2.0 + 1e-12


@given(simplex_and_label())
def test_pip_equals_ip_at_rank_one(case):
    p, y = case
    if rank(p).rank_of[y] == 1:
        assert score_pip(p, y) == score_ip(p, y)


@given(simplex_and_label())
def test_pip_equals_one_plus_ms_at_rank_two(case):
    p, y = case
    if rank(p).rank_of[y] == 2:
        assert abs(score_pip(p, y) - (1.0 + score_ms(p, y))) < 1e-12


@given(st.integers(2, 50))
def test_uniform_scores_follow_rank_formula(k):
    p = np.full(k, 1.0 / k)
    for y in range(k):
        r = int(rank(p).rank_of[y])
        expected = 1.0 + (sum(1.0 / i for i in range(1, r)) - 1.0) / k
        assert abs(score_pip(p, y) - expected) < 1e-12


@given(st.integers(2, 50))
def test_uniform_scores_pairwise_distinct(k):
    p = np.full(k, 1.0 / k)
    scores = score_all_classes(p, ScoreSpec("pip"))
    assert len(set(scores.tolist())) == k


@given(simplex_and_label(), st.floats(0.0, 1.0), st.floats(0.0, 1.0),
       st.integers(1, 5))
def test_raps_nondecreasing_in_lambda(case, lam_lo, lam_delta, k_reg):
    p, y = case
    lo = score_raps(p, y, 0.5, lam=lam_lo, k_reg=k_reg)
    hi = score_raps(p, y, 0.5, lam=lam_lo + lam_delta, k_reg=k_reg)
    assert hi >= lo


@given(simplex_and_label(), st.floats(0.0, 1.0), st.floats(0.0, 1.0),
       st.integers(1, 5))
def test_repip_nondecreasing_in_gamma(case, g_lo, g_delta, k_reg):
    p, y = case
    lo = score_repip(p, y, gamma=g_lo, k_reg=k_reg)
    hi = score_repip(p, y, gamma=g_lo + g_delta, k_reg=k_reg)
    assert hi >= lo


@given(simplex_and_label(), st.integers(0, 2**32 - 1))
def test_ip_depends_only_on_target_probability(case, shuffle_seed):
    # permuting the non-target entries never moves the ip score
    p, y = case
    rng = np.random.default_rng(shuffle_seed)
    others = np.delete(p, y)
    rng.shuffle(others)
    q = np.insert(others, y, p[y])
    assert score_ip(q, y) == score_ip(p, y)


@given(simplex_and_label())
def test_ms_depends_only_on_target_and_max(case):
    p, y = case
    others = np.delete(p, y)
    assert abs(score_ms(p, y) - (others.max() - p[y])) < 1e-15


@settings(max_examples=50)
@given(simplex_vectors(), st.floats(1e-6, 1.0))
def test_batch_purity(p, u):
    spec = ScoreSpec("raps", lam=0.03, k_reg=2)
    a = score_all_classes(p, spec, u)
    b = score_all_classes(p, spec, u)
    assert np.array_equal(a, b)
