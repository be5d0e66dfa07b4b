"""Paired seedwise comparisons: gaps, win rates, CI half-widths and the Wilcoxon signed-rank test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EXACT_MAX_N = 20
CI_Z = 1.96


@dataclass
class PairedSample:
    a: np.ndarray
    b: np.ndarray
    label_a: str = "A"
    label_b: str = "B"

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.a.shape != self.b.shape or self.a.ndim != 1:
            raise ValueError("paired samples must be 1-D and of equal length")

    @property
    def n(self):
        return self.a.size


@dataclass
class SummaryStats:
    n: int
    mean_gap: float
    sd: float
    win_rate: float
    wilcoxon_p: float
    ci95: float


def paired_gap_stats(sample):
    """Summaries of the per-seed gap ``a - b``.

    ``sd`` is the sample standard deviation (ddof=1), which also feeds the
    normal-approximation CI half-width ``1.96 * sd / sqrt(n)``. A seed counts
    as a win when ``a > b``; exact ties earn half a win.
    """
    if sample.n < 2:
        raise ValueError("need at least 2 pairs")
    gap = sample.a - sample.b
    sd = float(gap.std(ddof=1))
    wins = np.count_nonzero(gap > 0) + 0.5 * np.count_nonzero(gap == 0)
    return SummaryStats(
        n=sample.n,
        mean_gap=float(gap.mean()),
        sd=sd,
        win_rate=float(wins / sample.n),
        wilcoxon_p=wilcoxon_signed_rank(sample),
        ci95=CI_Z * sd / math.sqrt(sample.n),
    )


def _average_ranks(x):
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    sx = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1
        i = j + 1
    return ranks


def _exact_null_counts(doubled_ranks):
    """Counts of each attainable doubled positive-rank sum over all 2**n sign patterns."""
    counts = np.zeros(int(doubled_ranks.sum()) + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: len(counts) - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(sample, exact=None):
    """Two-sided Wilcoxon signed-rank p-value for the paired differences ``a - b``.

    Zero differences are dropped and tied magnitudes share average ranks.
    The null distribution is enumerated exactly when at most ``EXACT_MAX_N``
    nonzero differences remain (or ``exact=True``); otherwise a normal
    approximation with tie and continuity corrections is used.
    """
    d = sample.a - sample.b
    d = d[d != 0]
    n = d.size
    if n == 0:
        return 1.0
    ranks = _average_ranks(np.abs(d))
    w_plus = ranks[d > 0].sum()
    if exact is None:
        exact = n <= EXACT_MAX_N
    if exact:
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = _exact_null_counts(doubled)
        w2 = int(round(2 * w_plus))
        total = counts.sum()
        lower = counts[: w2 + 1].sum() / total
        upper = counts[w2:].sum() / total
        return float(min(1.0, 2 * min(lower, upper)))
    mean = n * (n + 1) / 4
    _, tie_sizes = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24 - np.sum(tie_sizes**3 - tie_sizes) / 48
    if var <= 0:
        return 1.0
    z = max(abs(w_plus - mean) - 0.5, 0.0) / math.sqrt(var)
    return float(min(1.0, math.erfc(z / math.sqrt(2))))
