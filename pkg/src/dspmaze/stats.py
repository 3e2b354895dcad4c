"""Result statistics: two-sided Wilcoxon rank-sum and replay summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

EXACT_LIMIT = 10   # exact null distribution up to this many values per side


def _doubled_midranks(pooled: np.ndarray) -> np.ndarray:
    """Twice the midrank of each pooled value; integers even under ties."""
    order = np.argsort(pooled, kind="stable")
    doubled = np.empty(len(pooled), dtype=np.int64)
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        # ranks i+1..j+1 share midrank (i+j+2)/2; doubled keeps it integral
        doubled[order[i : j + 1]] = i + j + 2
        i = j + 1
    return doubled


def _exact_p(doubled: np.ndarray, n_a: int, w2_obs: int) -> float:
    """Exact two-sided tail by counting size-n_a subsets per doubled rank sum."""
    total = len(doubled)
    mu2 = n_a * (total + 1)
    dev = abs(w2_obs - mu2)
    max_sum = int(doubled.sum())
    # ways[k, s] = number of k-subsets of the doubled ranks summing to s
    ways = np.zeros((n_a + 1, max_sum + 1), dtype=np.int64)
    ways[0, 0] = 1
    for r in doubled:
        r = int(r)
        ways[1:, r:] += ways[:-1, : max_sum + 1 - r]
    counts = ways[n_a]
    sums = np.arange(max_sum + 1)
    hits = counts[np.abs(sums - mu2) >= dev].sum()
    return float(hits / math.comb(total, n_a))


def _approx_p(doubled: np.ndarray, n_a: int, w2_obs: int) -> float:
    """Normal approximation with tie correction."""
    total = len(doubled)
    n_b = total - n_a
    w = w2_obs / 2.0
    mu = n_a * (total + 1) / 2.0
    _, tie_counts = np.unique(doubled, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts).sum()) / (total * (total - 1)))
    var = n_a * n_b / 12.0 * ((total + 1) - tie_term)
    if var <= 0.0:
        return 1.0
    z = (w - mu) / math.sqrt(var)
    return math.erfc(abs(z) / math.sqrt(2.0))


def wilcoxon_rank_sum(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided rank-sum p-value; symmetric in its arguments.

    Small samples (up to 10 per side) get the exact permutation null,
    computed on doubled midranks so ties stay in integer arithmetic; larger
    samples use the tie-corrected normal approximation.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    doubled = _doubled_midranks(pooled)
    w2_obs = int(doubled[: a.size].sum())
    if a.size <= EXACT_LIMIT and b.size <= EXACT_LIMIT:
        return _exact_p(doubled, a.size, w2_obs)
    return _approx_p(doubled, a.size, w2_obs)


@dataclass
class SummaryStats:
    n_trials: int
    mean_best_ep: float
    std_best_ep: float
    reach_fraction: float


def summarize(
    best_eps: Sequence[float], reached: Sequence[bool] | None = None
) -> SummaryStats:
    """Mean/std of per-trial best performance plus the goal-reach fraction.

    A recorded reach flag is authoritative when provided; otherwise a trial
    counts as reaching iff its best score is below the 100-step allowance.
    """
    eps = np.asarray(best_eps, dtype=float)
    if eps.size == 0:
        raise ValueError("no trials to summarize")
    if reached is not None:
        flags = np.asarray(reached, dtype=bool)
        if flags.size != eps.size:
            raise ValueError("reached flags must align with best_eps")
        frac = float(flags.mean())
    else:
        frac = float((eps < 100).mean())
    return SummaryStats(
        n_trials=int(eps.size),
        mean_best_ep=float(eps.mean()),
        std_best_ep=float(eps.std()),
        reach_fraction=frac,
    )
