"""Weighted k-means++ seeding and Lloyd iterations for clustering coresets.

z = 2 updates each center to the weighted mean of its cluster; z = 1 uses
the weighted medoid among the cluster's members.
"""
from __future__ import annotations

import logging

import numpy as np

from .metric import nearest, pairwise_cost

log = logging.getLogger(__name__)


def _check_input(X, w):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    w = np.ones(len(X)) if w is None else np.asarray(w, dtype=float)
    if len(X) == 0 or not np.any(w > 0):
        raise ValueError("need at least one point of positive weight")
    return X, w


def kmeanspp_init(X, weights, k: int, z: int = 2, rng: np.random.Generator | None = None,
                  metric: str = "euclidean") -> np.ndarray:
    """Seed k centers: first by weight, then proportional to weight * dist^z."""
    X, w = _check_input(X, weights)
    rng = np.random.default_rng() if rng is None else rng
    idx = np.empty(k, dtype=np.int64)
    idx[0] = rng.choice(len(X), p=w / w.sum())
    closest = pairwise_cost(X, X[idx[:1]], z, metric)[:, 0]
    duplicates = False
    for c in range(1, k):
        score = w * closest
        total = score.sum()
        if total > 0:
            idx[c] = rng.choice(len(X), p=score / total)
        else:
            # fewer distinct points than k
            duplicates = True
            idx[c] = rng.choice(len(X), p=w / w.sum())
        closest = np.minimum(closest, pairwise_cost(X, X[idx[c]: idx[c] + 1], z, metric)[:, 0])
    if duplicates:
        log.warning("k-means++ seeding produced duplicate centers (fewer than %d distinct points)", k)
    return X[idx].copy()


def _weighted_medoid(P, w, metric):
    D = pairwise_cost(P, P, 1, metric)
    return P[np.argmin(D @ w)]


def lloyd_iterate(X, weights, centers, z: int = 2, iterations: int = 10, metric: str = "euclidean",
                  history: list | None = None) -> tuple[np.ndarray, float]:
    """Run ``iterations`` rounds of assign-then-update; returns (centers, weighted cost).

    Empty clusters are reseeded at the point with the largest weighted cost.
    If ``history`` is given, the cost before each round is appended to it.
    """
    X, w = _check_input(X, weights)
    C = np.array(centers, dtype=float, copy=True)
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    for _ in range(iterations):
        assign, d = nearest(X, C, z, metric)
        if history is not None:
            history.append(float(w @ d))
        for c in range(len(C)):
            members = assign == c
            if not members.any() or w[members].sum() == 0:
                far = int(np.argmax(w * d))
                C[c] = X[far]
                d[far] = 0.0
                assign[far] = c
                continue
            if z == 2:
                C[c] = np.average(X[members], axis=0, weights=w[members])
            elif z == 1:
                C[c] = _weighted_medoid(X[members], w[members], metric)
            else:
                raise ValueError("lloyd_iterate supports z in {1, 2}")
    _, d = nearest(X, C, z, metric)
    return C, float(w @ d)


def weighted_kmeans(X, weights=None, k: int = 2, z: int = 2, iterations: int = 10, restarts: int = 1,
                    seed=None, metric: str = "euclidean") -> tuple[np.ndarray, float]:
    """Best of ``restarts`` seeded k-means++ + Lloyd runs.

    Restart r draws from child r of ``SeedSequence(seed)``, so adding restarts
    only adds candidates.
    """
    X, w = _check_input(X, weights)
    if k < 1:
        raise ValueError("k must be positive")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(restarts)
    best = (None, np.inf)
    for child in children:
        rng = np.random.default_rng(child)
        init = kmeanspp_init(X, w, k, z, rng, metric)
        C, c = lloyd_iterate(X, w, init, z, iterations, metric)
        if c < best[1]:
            best = (C, c)
    return best
