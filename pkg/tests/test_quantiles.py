import math
from decimal import Decimal

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpci.quantiles import conformal_threshold, empirical_quantile, quantile_rank


def brute_force_quantile(values, q):
    """Smallest element t with #{v <= t} >= ceil(q n), by exhaustive counting."""
    k = math.ceil(Decimal(repr(q)) * len(values))
    if k == 0:
        return -math.inf
    return min(t for t in values if sum(v <= t for v in values) >= k)


@pytest.mark.parametrize(
    "values, q, expected",
    [
        ([3, 1, 2], 1.0, 3),
        ([3, 1, 2], 0.34, 2),
        ([0.5], 0.0, -math.inf),
        ([5, 5, 5, 1], 0.5, 5),
        (list(range(1, 11)), 0.7, 7),
    ],
)
def test_empirical_quantile_examples(values, q, expected):
    assert empirical_quantile(values, q) == expected


def test_rank_is_exact_for_decimal_levels():
    # 0.7 * 10 is 7.000000000000001 in floating point
    assert quantile_rank(0.7, 10) == 7
    assert quantile_rank(0.9, 10) == 9
    assert quantile_rank(0.1, 30) == 3


@pytest.mark.parametrize(
    "scores, level, expected",
    [(range(1, 10), 0.9, 9), (range(1, 20), 0.9, 18), (range(1, 10), 1.0, math.inf), ([2.0], 0.0, -math.inf)],
)
def test_conformal_threshold_examples(scores, level, expected):
    assert conformal_threshold(list(scores), level) == expected


def test_errors():
    with pytest.raises(ValueError):
        empirical_quantile([], 0.5)
    with pytest.raises(ValueError):
        empirical_quantile([1.0], 1.5)
    with pytest.raises(ValueError):
        empirical_quantile([1.0, math.nan], 0.5)
    assert conformal_threshold([], 0.5) == math.inf


small_multisets = st.lists(st.integers(-5, 5).map(float), min_size=1, max_size=12)
levels = st.floats(0.0, 1.0, allow_nan=False)


@given(small_multisets, levels)
def test_matches_counting_oracle(values, q):
    assert empirical_quantile(values, q) == brute_force_quantile(values, q)


@given(small_multisets, levels, levels)
def test_monotone_in_level(values, q1, q2):
    lo, hi = sorted((q1, q2))
    assert empirical_quantile(values, lo) <= empirical_quantile(values, hi)


@given(small_multisets, st.floats(0.01, 1.0), st.integers(-100, 100))
def test_translation_equivariance(values, q, c):
    shifted = [v + c for v in values]
    assert empirical_quantile(shifted, q) == empirical_quantile(values, q) + c


def test_conformal_coverage_monte_carlo():
    rng = np.random.default_rng(3)
    m, reps, alpha = 50, 4000, 0.9
    S = rng.exponential(size=(reps, m + 1))
    hits = np.array([S[i, -1] <= conformal_threshold(S[i, :-1], alpha) for i in range(reps)])
    se = hits.std() / math.sqrt(reps)
    assert hits.mean() >= alpha - 3 * se
