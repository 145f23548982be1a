"""Independent reference implementations used as test oracles.

Everything here is deliberately written from the textbook definition,
independent of the library's optimized code paths.
"""

from __future__ import annotations

import itertools

import numpy as np


def textbook_distance(ref: str, hyp: str) -> int:
    """Plain quadratic Levenshtein DP, cell by cell."""
    n, m = len(ref), len(hyp)
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        ref_c = ref[i - 1]
        for j in range(1, m + 1):
            cost = 0 if ref_c == hyp[j - 1] else 1
            cur[j] = min(prev[j - 1] + cost, prev[j] + 1, cur[j - 1] + 1)
        prev = cur
    return prev[m]


def exhaustive_assignment(cost) -> int:
    """Minimum assignment cost by enumerating all permutations."""
    cost = np.asarray(cost)
    n = cost.shape[0]
    if n == 0:
        return 0
    best = None
    for perm in itertools.permutations(range(n)):
        total = sum(cost[i, perm[i]] for i in range(n))
        if best is None or total < best:
            best = total
    return int(best)


def mean_fold(vectors) -> list[float]:
    """Component-wise mean via an explicit running sum."""
    total = [0.0] * len(vectors[0])
    for vec in vectors:
        for k, x in enumerate(vec):
            total[k] += float(x)
    return [t / len(vectors) for t in total]


def measured_snr_db(signal: np.ndarray, noise: np.ndarray) -> float:
    """SNR from explicit mean-square powers of the two components."""
    p_signal = float(np.sum(np.asarray(signal) ** 2)) / len(signal)
    p_noise = float(np.sum(np.asarray(noise) ** 2)) / len(noise)
    return 10.0 * np.log10(p_signal / p_noise)
