"""Points, distances and the (k, z)-clustering cost.

Everything here is a pure function of its inputs. Point collections are
passed around as numpy arrays; :class:`WeightedSet` bundles coordinates with
weights and arrival timestamps for the streaming structures.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

METRICS = ("euclidean", "l1", "linf")
_CDIST_NAMES = {"euclidean": "euclidean", "l1": "cityblock", "linf": "chebyshev"}


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Point:
    coords: np.ndarray
    id: int = 0
    timestamp: int = 0

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float).reshape(-1)
        if coords.size == 0:
            raise ValueError("a point needs at least one coordinate")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return self.coords.size


@dataclass(frozen=True)
class WeightedPoint:
    point: Point
    weight: float = 1.0

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError(f"weight must be positive, got {self.weight}")


@dataclass
class StreamParams:
    """Parameters shared by every streaming structure.

    ``aspect_bound`` is the declared aspect ratio; all logarithms are base 2.
    """

    k: int
    z: int = 2
    aspect_bound: float = 2.0**16
    horizon: int = 2**20
    epsilon: float = 0.5
    delta: float = 0.1
    metric: str = "euclidean"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.z < 1:
            raise ValueError("z must be a positive integer")
        if self.aspect_bound < 2:
            raise ValueError("aspect_bound must be at least 2")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}; expected one of {METRICS}")

    @property
    def log_n(self) -> float:
        return max(1.0, math.log2(self.horizon))

    @property
    def log_delta(self) -> float:
        return math.log2(self.aspect_bound)


@dataclass
class WeightedSet:
    """Columnar weighted point set: ``points`` (n, d), ``weights`` (n,), ``timestamps`` (n,)."""

    points: np.ndarray
    weights: np.ndarray = None
    timestamps: np.ndarray = None
    ids: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        n = self.points.shape[0]
        if self.weights is None:
            self.weights = np.ones(n)
        else:
            self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.timestamps is None:
            self.timestamps = np.arange(1, n + 1, dtype=np.int64)
        else:
            self.timestamps = np.asarray(self.timestamps, dtype=np.int64).reshape(-1)
        if self.ids is None:
            self.ids = self.timestamps.copy()
        if not (len(self.weights) == len(self.timestamps) == len(self.ids) == n):
            raise ValueError("points, weights, timestamps and ids must have equal length")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @classmethod
    def empty(cls, dim: int) -> "WeightedSet":
        return cls(np.zeros((0, dim)), np.zeros(0), np.zeros(0, dtype=np.int64))

    @classmethod
    def from_points(cls, items: Sequence[WeightedPoint | Point]) -> "WeightedSet":
        if not items:
            raise ValueError("cannot infer dimension of an empty point list")
        wps = [p if isinstance(p, WeightedPoint) else WeightedPoint(p) for p in items]
        return cls(
            np.stack([wp.point.coords for wp in wps]),
            np.array([wp.weight for wp in wps]),
            np.array([wp.point.timestamp for wp in wps], dtype=np.int64),
            np.array([wp.point.id for wp in wps], dtype=np.int64),
        )

    def to_points(self) -> list[WeightedPoint]:
        return [
            WeightedPoint(Point(self.points[i], int(self.ids[i]), int(self.timestamps[i])), float(self.weights[i]))
            for i in range(len(self))
        ]

    def select(self, mask) -> "WeightedSet":
        return WeightedSet(self.points[mask], self.weights[mask], self.timestamps[mask], self.ids[mask])

    @staticmethod
    def concat(parts: Iterable["WeightedSet"], dim: int | None = None) -> "WeightedSet":
        parts = [p for p in parts if len(p)]
        if not parts:
            if dim is None:
                raise ValueError("need dim to build an empty set")
            return WeightedSet.empty(dim)
        return WeightedSet(
            np.concatenate([p.points for p in parts]),
            np.concatenate([p.weights for p in parts]),
            np.concatenate([p.timestamps for p in parts]),
            np.concatenate([p.ids for p in parts]),
        )


def _as_arrays(points, weights=None) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(points, WeightedSet):
        X, w = points.points, points.weights
        if weights is not None:
            w = np.asarray(weights, dtype=float)
    elif isinstance(points, (list, tuple)) and points and isinstance(points[0], (WeightedPoint, Point)):
        ws = WeightedSet.from_points(points)
        X, w = ws.points, ws.weights
    else:
        X = np.asarray(points, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1) if X.size else X.reshape(0, 1)
        w = np.ones(X.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    return X, w


def _center_array(centers) -> np.ndarray:
    if isinstance(centers, (list, tuple)) and centers and isinstance(centers[0], Point):
        return np.stack([c.coords for c in centers])
    C = np.asarray(centers, dtype=float)
    return C.reshape(1, -1) if C.ndim == 1 else C


def dist(p, q, metric: str = "euclidean") -> float:
    a = p.coords if isinstance(p, Point) else np.asarray(p, dtype=float).reshape(-1)
    b = q.coords if isinstance(q, Point) else np.asarray(q, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimension mismatch: {a.size} vs {b.size}")
    diff = np.abs(a - b)
    if metric == "euclidean":
        return float(math.sqrt(float(diff @ diff)))
    if metric == "l1":
        return float(diff.sum())
    if metric == "linf":
        return float(diff.max())
    raise ValueError(f"unknown metric {metric!r}")


def pairwise_cost(X: np.ndarray, C: np.ndarray, z: int = 2, metric: str = "euclidean") -> np.ndarray:
    """Matrix of dist(x, c)^z, shape (len(X), len(C))."""
    if X.shape[1] != C.shape[1]:
        raise DimensionMismatch(f"dimension mismatch: {X.shape[1]} vs {C.shape[1]}")
    if metric == "euclidean" and z == 2:
        return cdist(X, C, "sqeuclidean")
    D = cdist(X, C, _CDIST_NAMES[metric])
    return D if z == 1 else D**z


def nearest(X: np.ndarray, C: np.ndarray, z: int = 2, metric: str = "euclidean") -> tuple[np.ndarray, np.ndarray]:
    """Index of the nearest center and the corresponding dist^z for each row of X."""
    D = pairwise_cost(X, C, z, metric)
    idx = D.argmin(axis=1)
    return idx, D[np.arange(len(X)), idx]


def cost(points, centers, z: int = 2, weights=None, metric: str = "euclidean") -> float:
    """Weighted (k, z)-clustering cost: sum_q w(q) * min_c dist(q, c)^z."""
    X, w = _as_arrays(points, weights)
    if X.shape[0] == 0:
        return 0.0
    C = _center_array(centers)
    if C.shape[0] == 0:
        raise ValueError("center set is empty")
    _, d = nearest(X, C, z, metric)
    return float(w @ d)


def dedupe(X: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge identical rows, summing their weights."""
    uniq, inverse = np.unique(X, axis=0, return_inverse=True)
    return uniq, np.bincount(inverse.reshape(-1), weights=w, minlength=len(uniq))


def opt_cost_bruteforce(points, k: int, z: int = 2, weights=None, metric: str = "euclidean",
                        max_distinct: int = 12) -> tuple[float, np.ndarray]:
    """Exact optimum over center sets drawn from the input points.

    Enumerates every subset of at most ``k`` distinct input points, so only
    small instances are accepted.
    """
    X, w = _as_arrays(points, weights)
    if X.shape[0] == 0:
        raise ValueError("empty input")
    U, uw = dedupe(X, w)
    if len(U) > max_distinct:
        raise ValueError(f"{len(U)} distinct points exceed the brute-force cap of {max_distinct}")
    if k >= len(U):
        return 0.0, U.copy()
    D = pairwise_cost(U, U, z, metric)
    best, best_idx = math.inf, None
    for subset in itertools.combinations(range(len(U)), k):
        c = float(uw @ D[:, subset].min(axis=1))
        if c < best:
            best, best_idx = c, subset
    return best, U[list(best_idx)]
