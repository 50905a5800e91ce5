"""Sublinear-space comparison sketches: uniform, histogram-style and expiring importance sampling.

The importance samplers keep at most ``m`` weighted points. An arriving
point is stored with probability min(1, w·dist^z / f), where dist is to the
nearest stored point and f is a facility cost; otherwise its weight moves to
the nearest stored point. When the budget overflows, the closest stored pair
is merged (the lighter point's weight moves to the heavier one) and f is
raised to max(2f, merged pair's dist^z).

The histogram variant never looks at timestamps. It only deletes when the
median arrival cost over a recent buffer exceeds ``theta`` times the
long-run mean arrival cost, and then drops stored points that are older than
the buffer and serve none of its points. The expiring variant runs the same
rule and in addition drops every stored point that has left the window, on
every arrival.

These eviction and deletion rules are one concrete choice, not a canonical
algorithm.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ._kernels import METRIC_CODES, importance_pass
from .io import export_coreset_csv
from .metric import WeightedSet, nearest, pairwise_cost


@dataclass
class BaselineConfig:
    budget: int
    window: int | None = None
    z: int = 2
    theta: float = 8.0
    buffer_size: int = 64
    metric: str = "euclidean"

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be positive")


def uniform_coreset(X, m: int, rng: np.random.Generator) -> WeightedSet:
    """m points drawn without replacement, each weighted |X| / m."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = len(X)
    if n == 0:
        raise ValueError("window is empty")
    take = min(m, n)
    idx = np.sort(rng.choice(n, size=take, replace=False))
    return WeightedSet(X[idx], np.full(take, n / take), idx + 1, idx + 1)


class ImportanceSampler:
    def __init__(self, config: BaselineConfig, dim: int, rng: np.random.Generator, expire: bool = False):
        self.config = config
        self.rng = rng
        self.expire = expire
        if expire and config.window is None:
            raise ValueError("expiring sampler needs a window")
        cap = config.budget + 1
        self.points = np.zeros((cap, dim))
        self.weights = np.zeros(cap)
        self.ts = np.zeros(cap, dtype=np.int64)
        self.size = 0
        self.facility = 0.0
        self.time = 0
        self.total_cost = 0.0
        self.recent = deque(maxlen=config.buffer_size)
        self.recent_x = deque(maxlen=config.buffer_size)
        self.recent_ts = deque(maxlen=config.buffer_size)
        self.deletions = 0

    def _remove(self, i):
        last = self.size - 1
        self.points[i], self.weights[i], self.ts[i] = self.points[last], self.weights[last], self.ts[last]
        self.size = last

    def _expire(self):
        oldest = self.time - self.config.window + 1
        i = 0
        while i < self.size:
            if self.ts[i] < oldest:
                self._remove(i)
            else:
                i += 1

    def _distances(self, x):
        diff = self.points[: self.size] - x
        if self.config.metric == "euclidean":
            d = np.einsum("ij,ij->i", diff, diff)
            return d if self.config.z == 2 else np.sqrt(d) ** self.config.z
        return pairwise_cost(x[None, :], self.points[: self.size], self.config.z, self.config.metric)[0]

    def ingest(self, x, weight: float = 1.0) -> None:
        x = np.asarray(x, dtype=float)
        u = self.rng.random()  # one draw per arrival, used or not
        self.time += 1
        if self.expire:
            self._expire()
        if self.size == 0:
            self._store(x, weight)
            return
        d = self._distances(x)
        j = int(np.argmin(d))
        cz = weight * float(d[j])
        self.total_cost += cz
        self.recent.append(cz)
        self.recent_x.append(x)
        self.recent_ts.append(self.time)
        if cz > 0 and (self.facility == 0 or u < cz / self.facility):
            self._store(x, weight)
            if self.size > self.config.budget:
                self._merge_closest()
        else:
            self.weights[j] += weight
        self._maybe_delete()

    def ingest_many(self, X) -> None:
        for x in np.atleast_2d(np.asarray(X, dtype=float)):
            self.ingest(x)

    def _store(self, x, weight):
        self.points[self.size] = x
        self.weights[self.size] = weight
        self.ts[self.size] = self.time
        self.size += 1

    def _merge_closest(self):
        P = self.points[: self.size]
        D = pairwise_cost(P, P, self.config.z, self.config.metric)
        np.fill_diagonal(D, np.inf)
        a, b = np.unravel_index(np.argmin(D), D.shape)
        self.facility = max(2 * self.facility, float(D[a, b]))
        keep, drop = (a, b) if self.weights[a] >= self.weights[b] else (b, a)
        self.weights[keep] += self.weights[drop]
        self._remove(drop)

    def _maybe_delete(self):
        cfg = self.config
        if len(self.recent) < cfg.buffer_size or self.time <= cfg.buffer_size:
            return
        mean_cost = self.total_cost / (self.time - 1)
        if mean_cost == 0 or np.median(self.recent) <= cfg.theta * mean_cost:
            return
        buffer_start = self.recent_ts[0]
        stale = [i for i in range(self.size) if self.ts[i] < buffer_start]
        if stale and len(stale) < self.size:
            assign, _ = nearest(np.stack(self.recent_x), self.points[: self.size], cfg.z, cfg.metric)
            served = set(assign.tolist())
            for i in sorted((i for i in stale if i not in served), reverse=True):
                self.deletions += 1
                self._remove(i)
        self.recent.clear()
        self.recent_x.clear()
        self.recent_ts.clear()

    def coreset(self) -> WeightedSet:
        n = self.size
        return WeightedSet(self.points[:n].copy(), self.weights[:n].copy(), self.ts[:n].copy(), self.ts[:n].copy())

    def export_csv(self, path) -> None:
        export_coreset_csv(path, self.coreset())


def _fast_pass(X, m, window, theta, rng, z, metric, buffer_size=64) -> WeightedSet:
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
    U = rng.random(len(X))
    P = np.zeros((m + 1, X.shape[1]))
    Wt = np.zeros(m + 1)
    TS = np.zeros(m + 1, dtype=np.int64)
    size, _, _ = importance_pass(X, U, m, window, z, METRIC_CODES[metric], theta, buffer_size, P, Wt, TS)
    return WeightedSet(P[:size], Wt[:size], TS[:size], TS[:size].copy())


def histogram_coreset(stream, m: int, theta: float = 8.0, rng: np.random.Generator | None = None,
                      z: int = 2, metric: str = "euclidean") -> WeightedSet:
    """Importance sampling over the whole stream, no expiry. Same result as ``ImportanceSampler``."""
    BaselineConfig(m, None, z, theta, metric=metric)
    return _fast_pass(stream, m, 0, theta, np.random.default_rng() if rng is None else rng, z, metric)


def importance_expiry_coreset(stream, m: int, window: int, rng: np.random.Generator | None = None,
                              z: int = 2, metric: str = "euclidean", theta: float = 8.0) -> WeightedSet:
    """As :func:`histogram_coreset`, discarding stored points once they leave the window."""
    BaselineConfig(m, window, z, theta, metric=metric)
    if window < 1:
        raise ValueError("window must be positive")
    return _fast_pass(stream, m, window, theta, np.random.default_rng() if rng is None else rng, z, metric)
