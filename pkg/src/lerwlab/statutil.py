"""Shared estimator statistics: intervals, TV distance, chi-square."""

from __future__ import annotations

import math
from collections import Counter

import numpy as np
from scipy import stats

Z95 = 1.959963984540054


def mean_stderr(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 2:
        return float(x.mean()) if len(x) else 0.0, float("nan")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


def ratio_interval_conservative(
    num_successes: int, den_successes: int, trials: int, z: float = Z95
) -> tuple[float, float]:
    """Conservative CI for a ratio of two proportions estimated on shared samples."""
    lo_n, hi_n = wilson_interval(num_successes, trials, z)
    lo_d, hi_d = wilson_interval(den_successes, trials, z)
    lo = lo_n / hi_d if hi_d > 0 else float("nan")
    hi = hi_n / lo_d if lo_d > 0 else float("inf")
    return lo, hi


def total_variation(sample_a, sample_b) -> float:
    """TV distance between the empirical distributions of two samples."""
    ca, cb = Counter(sample_a), Counter(sample_b)
    na, nb = sum(ca.values()), sum(cb.values())
    keys = set(ca) | set(cb)
    return 0.5 * sum(abs(ca[k] / na - cb[k] / nb) for k in keys)


def bootstrap_tv(sample_a, sample_b, reps: int = 200, seed: int = 0) -> tuple[float, float]:
    """TV distance plus a bootstrap standard error."""
    tv = total_variation(sample_a, sample_b)
    ca, cb = Counter(sample_a), Counter(sample_b)
    keys = sorted(set(ca) | set(cb))
    na, nb = sum(ca.values()), sum(cb.values())
    pa = np.array([ca[k] for k in keys], dtype=float) / na
    pb = np.array([cb[k] for k in keys], dtype=float) / nb
    rng = np.random.default_rng(seed)
    draws = np.empty(reps)
    for r in range(reps):
        ra = rng.multinomial(na, pa) / na
        rb = rng.multinomial(nb, pb) / nb
        draws[r] = 0.5 * np.abs(ra - rb).sum()
    return tv, float(draws.std(ddof=1))


def chisquare_uniform(observed_counts, n_categories: int | None = None) -> tuple[float, float]:
    """Chi-square statistic and p-value against the uniform law."""
    obs = np.asarray(observed_counts, dtype=float)
    if n_categories is not None and n_categories != len(obs):
        obs = np.concatenate([obs, np.zeros(n_categories - len(obs))])
    stat, p = stats.chisquare(obs)
    return float(stat), float(p)
