"""
Brute-force reference computations.

Nothing here imports the package's computational code; each function
recomputes a quantity straight from its definition so tests can compare
the streaming implementation against it.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def stats_by_definition(values):
    """(mean, population variance, min, max, count) by direct definition."""
    t = len(values)
    # exactly rounded sum, so parent extrema select bit-identical child means
    mean = math.fsum(values) / t
    var = sum((v - mean) ** 2 for v in values) / t
    return mean, var, min(values), max(values), t


def group_means(values, size):
    """Split a flat list into consecutive groups of ``size`` and take each mean."""
    return [sum(values[i:i + size]) / size for i in range(0, len(values) - size + 1, size)]


def ladder_by_definition(base_values, children):
    """
    Every complete window stat at each scale, computed level by level from
    raw means: {level_index: [(mean, var, min, max, count), ...]}.
    """
    out = {}
    level_values = list(base_values)
    for level, size in enumerate(children):
        groups = [level_values[i:i + size] for i in range(0, len(level_values) - size + 1, size)]
        out[level] = [stats_by_definition(g) for g in groups]
        level_values = [g[0] for g in out[level]]
    return out


def sliding_extrema(means, capacity):
    """(min, max) over the last ``capacity`` items after each append."""
    out = []
    for i in range(len(means)):
        window = means[max(0, i + 1 - capacity):i + 1]
        out.append((min(window), max(window)))
    return out


def cosine(u, v):
    nu = math.sqrt(sum(x * x for x in u))
    nv = math.sqrt(sum(y * y for y in v))
    if nu == 0 or nv == 0:
        return 0.0
    return sum(x * y for x, y in zip(u, v)) / (nu * nv)


def all_pair_cosines(vectors):
    return {(i, j): cosine(vectors[i], vectors[j])
            for i, j in itertools.combinations(range(len(vectors)), 2)}


def blend_by_definition(scores, strengths, lam):
    """
    scores: list; strengths: symmetric matrix (list of lists).
    Returns the blended list, visiting every j != i.
    """
    n = len(scores)
    out = []
    for i in range(n):
        num = sum(strengths[i][j] * scores[j] for j in range(n) if j != i)
        den = sum(strengths[i][j] for j in range(n) if j != i)
        nb = num / den if den > 0 else 0.0
        out.append((1 - lam) * scores[i] + lam * nb)
    return out


def widened_region(history_means, tau):
    lo, hi = min(history_means), max(history_means)
    if hi > lo:
        pad = tau * (hi - lo)
    else:
        pad = tau * max(abs(lo), 1.0)
    return max(0.0, lo - pad), hi + pad


def per_second_counts(events, duration_s, port, direction):
    counts = np.zeros(duration_s, dtype=np.int64)
    for e in events:
        if e.port == port and e.direction == direction:
            counts[e.timestamp_ms // 1000] += e.packet_count
    return counts


def offline_checks(counts, children, tau=0.1, capacity=60, min_history=5):
    """
    For every finest window k, the observation and widened region of each
    warm scale, recomputed from raw per-second counts.

    Scale L spans ``span[L]`` finest windows. Its history at window k holds
    the last ``capacity`` complete windows that ended no later than the
    start of window k, and its observation is the mean of the finest means
    k - span + 1 .. k. Returns {k: {level: (observed, low, high)}}.
    """
    levels = []
    values = list(counts)
    for size in children:
        values = group_means(values, size)
        levels.append(values)
    span = [1]
    for size in children[1:]:
        span.append(span[-1] * size)
    finest = levels[0]
    out = {}
    for k in range(len(finest)):
        checks = {}
        for lvl, means in enumerate(levels):
            done = [m for j, m in enumerate(means) if (j + 1) * span[lvl] <= k]
            hist = done[-capacity:]
            if len(hist) < min_history or k + 1 < span[lvl]:
                continue
            obs = sum(finest[k - span[lvl] + 1:k + 1]) / span[lvl]
            checks[lvl] = (obs, *widened_region(hist, tau))
        out[k] = checks
    return out
