from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from src.bench import uniform_keys, zipf_keys
from src.bench.errors import ConfigError


def test_uniform_keys_are_distinct_and_seeded():
    keys = uniform_keys(5000, 4)
    assert len(np.unique(keys)) == 5000
    assert keys.min() >= 1
    assert np.array_equal(keys, uniform_keys(5000, 4))
    assert not np.array_equal(keys, uniform_keys(5000, 5))

def test_zero_theta_is_uniform():
    ranks = zipf_keys(20_000, 0.0, 10, seed=2)
    counts = np.bincount(ranks, minlength=10)
    assert stats.chisquare(counts).pvalue > 1e-3

@pytest.mark.parametrize("theta", [0.5, 0.99])
def test_ranks_follow_the_zipf_law(theta: float):
    universe, n = 50, 50_000
    ranks = zipf_keys(n, theta, universe, seed=8)
    counts = np.bincount(ranks, minlength=universe)

    weights = np.arange(1, universe + 1, dtype=np.float64) ** -theta
    expected = n * weights / weights.sum()
    assert stats.chisquare(counts, expected).pvalue > 1e-3

def test_skew_puts_rank_zero_first():
    counts = np.bincount(zipf_keys(10_000, 0.99, 1000, seed=1), minlength=1000)
    assert counts[0] > counts[1] > counts[10]

def test_ranks_stay_in_universe():
    ranks = zipf_keys(1000, 1.5, 7, seed=3)
    assert ranks.min() >= 0
    assert ranks.max() < 7

def test_zipf_is_reproducible():
    assert np.array_equal(zipf_keys(100, 0.99, 500, 6), zipf_keys(100, 0.99, 500, 6))

@pytest.mark.parametrize(("theta", "universe"), [(-0.1, 10), (0.99, 0)])
def test_bad_zipf_parameters(theta: float, universe: int):
    with pytest.raises(ConfigError):
        zipf_keys(10, theta, universe, 0)
