"""Independent reference computations, written without the package's helpers."""
from __future__ import annotations

import itertools
import math


def dist_py(p, q, metric="euclidean"):
    diffs = [abs(a - b) for a, b in zip(p, q)]
    if metric == "euclidean":
        return math.sqrt(sum(d * d for d in diffs))
    if metric == "l1":
        return sum(diffs)
    return max(diffs)


def cost_py(points, centers, z=2, weights=None, metric="euclidean"):
    weights = [1.0] * len(points) if weights is None else weights
    return math.fsum(w * min(dist_py(p, c, metric) for c in centers) ** z for p, w in zip(points, weights))


def opt_discrete_py(points, k, z=2, weights=None):
    """Minimum cost over all center subsets of size <= k drawn from the distinct input points."""
    distinct = sorted({tuple(p) for p in points})
    best = math.inf
    for size in range(1, min(k, len(distinct)) + 1):
        for C in itertools.combinations(distinct, size):
            best = min(best, cost_py(points, C, z, weights))
    return best


def gamma_py(k, eps, z, alpha, beta, centroid_log, N, c=1.0):
    """Oversampling factor evaluated term by term; log(1/eps) is clamped at 1."""
    L = max(1.0, math.log(1 / eps, 2))
    lead = c * max(alpha**2, alpha**z) * beta / min(eps**2, eps**z)
    return lead * L * L * (k * centroid_log + math.log(L, 2) + math.log(N, 2)) * L * L


def counter_levels(n_compressions):
    """Level written by each compression of a binary counter (1 + trailing ones before increment)."""
    levels, value = [], 0
    for _ in range(n_compressions):
        trailing = 0
        while (value >> trailing) & 1:
            trailing += 1
        levels.append(trailing + 1)
        value += 1
    return levels


def standardize_py(rows):
    cols = list(zip(*rows))
    out_cols = []
    for col in cols:
        mu = sum(col) / len(col)
        sd = math.sqrt(sum((v - mu) ** 2 for v in col) / len(col))
        out_cols.append([(v - mu) / sd for v in col])
    return [list(r) for r in zip(*out_cols)]
