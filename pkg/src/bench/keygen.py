"""Seeded key streams.

Zipf ranks come from inverting the exact cumulative distribution of
p(r) proportional to 1 / r**theta over ranks 1..universe.

Functions:
    uniform_keys(n: int, seed: int) -> np.ndarray
    zipf_keys(n: int, theta: float, universe: int, seed: int) -> np.ndarray
"""

from __future__ import annotations

import logging

import numpy as np

from ._consts import KEY_SPACE
from .errors import ConfigError


def uniform_keys(n: int, seed: int) -> np.ndarray:
    """n distinct keys drawn uniformly from [1, KEY_SPACE), in draw order."""
    rng = np.random.default_rng(seed)
    keys = np.empty(0, dtype=np.uint64)
    while len(keys) < n:
        draw = np.concatenate((keys, rng.integers(1, KEY_SPACE, size=n, dtype=np.uint64)))
        _, first = np.unique(draw, return_index=True)
        keys = draw[np.sort(first)]
    return keys[:n]

def zipf_keys(n: int, theta: float, universe: int, seed: int) -> np.ndarray:
    """n zero-based ranks in [0, universe), rank 0 the most frequent.

    Raises:
        ConfigError: Negative theta or an empty universe.
    """
    if theta < 0 or universe < 1:
        logging.error("Bad Zipf parameters theta=%f universe=%d !", theta, universe)
        raise ConfigError

    weights = np.arange(1, universe + 1, dtype=np.float64) ** -theta
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]

    rng = np.random.default_rng(seed)
    ranks = np.searchsorted(cdf, rng.random(n), side="right")
    return np.minimum(ranks, universe - 1)
