"""Rank-based two-sample tests for the benchmark harness.

Both tests compute exact two-sided p-values for small samples by counting
over the full null distribution (dynamic programming over tied ranks, scaled
by two so half-ranks stay integral) and fall back to the normal approximation
with tie correction for larger samples.  Two-sided means the probability of a
statistic at least as far from its null mean as the observed one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, rankdata

from .errors import DegenerateDataError

_EXACT_SIGNED_MAX = 20
_EXACT_RANKSUM_MAX = 22


@dataclass(frozen=True)
class TestResult:
    p_value: float
    statistic: float
    n: int
    exact: bool


def _two_sided_from_counts(counts: np.ndarray, observed: int, mean2: float) -> float:
    """P(|S - mu| >= |observed - mu|) over an integer-indexed count table."""
    support = np.arange(counts.size)
    dist = np.abs(support - mean2)
    target = abs(observed - mean2) - 1e-9
    return float(np.sum(counts[dist >= target]) / np.sum(counts))


def wilcoxon_signed_rank(paired_a, paired_b) -> TestResult:
    """Paired two-sided signed-rank test.

    Zero differences are dropped; ties in magnitude get average ranks.  Exact
    for up to 20 nonzero differences, normal approximation with tie correction
    beyond that.
    """
    a = np.asarray(paired_a, dtype=float)
    b = np.asarray(paired_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be equal-length 1-D sequences")
    if a.size < 5:
        raise ValueError("need at least 5 pairs")
    diffs = a - b
    diffs = diffs[diffs != 0.0]
    n = diffs.size
    if n == 0:
        raise DegenerateDataError("all paired differences are zero")
    ranks = rankdata(np.abs(diffs))
    w_plus = float(np.sum(ranks[diffs > 0.0]))
    mean = n * (n + 1) / 4.0

    if n <= _EXACT_SIGNED_MAX:
        ranks2 = np.rint(2.0 * ranks).astype(int)
        total = int(np.sum(ranks2))
        counts = np.zeros(total + 1)
        counts[0] = 1.0
        for r in ranks2:
            shifted = np.zeros_like(counts)
            shifted[r:] = counts[: counts.size - r]
            counts = counts + shifted
        observed = int(round(2.0 * w_plus))
        p = _two_sided_from_counts(counts, observed, 2.0 * mean)
        return TestResult(p_value=min(max(p, np.finfo(float).tiny), 1.0), statistic=w_plus, n=n, exact=True)

    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
    delta = w_plus - mean
    z = (delta - 0.5 * np.sign(delta)) / np.sqrt(var)
    p = float(2.0 * norm.sf(abs(z)))
    return TestResult(p_value=min(max(p, np.finfo(float).tiny), 1.0), statistic=w_plus, n=n, exact=False)


def wilcoxon_rank_sum(sample_a, sample_b) -> TestResult:
    """Unpaired two-sided rank-sum test.

    Exact via counting over all subsets when the pooled size is at most 22,
    normal approximation with tie correction otherwise.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("samples must be 1-D sequences")
    if a.size < 4 or b.size < 4:
        raise ValueError("need at least 4 observations per sample")
    n_a, n_b = a.size, b.size
    n = n_a + n_b
    ranks = rankdata(np.concatenate([a, b]))
    w = float(np.sum(ranks[:n_a]))
    mean = n_a * (n + 1) / 2.0

    if n <= _EXACT_RANKSUM_MAX:
        ranks2 = np.rint(2.0 * ranks).astype(int)
        total = int(np.sum(ranks2))
        # counts[k, s]: subsets of size k with scaled rank sum s; rows run
        # backwards so an item is never picked twice
        counts = np.zeros((n_a + 1, total + 1))
        counts[0, 0] = 1.0
        for r in ranks2:
            for k in range(n_a, 0, -1):
                counts[k, r:] += counts[k - 1, : total + 1 - r]
        observed = int(round(2.0 * w))
        p = _two_sided_from_counts(counts[n_a], observed, 2.0 * mean)
        return TestResult(p_value=min(max(p, np.finfo(float).tiny), 1.0), statistic=w, n=n, exact=True)

    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = np.sum(tie_counts**3 - tie_counts) / ((n + 1) * n * (n - 1))
    var = n_a * n_b * (n + 1) / 12.0 * (1.0 - tie_term)
    delta = w - mean
    z = (delta - 0.5 * np.sign(delta)) / np.sqrt(var)
    p = float(2.0 * norm.sf(abs(z)))
    return TestResult(p_value=min(max(p, np.finfo(float).tiny), 1.0), statistic=w, n=n, exact=False)
