"""Meyerson sketch and the guess-and-double bicriteria built on top of it.

:class:`MeyersonInstance` is a single run of the sketch for one guess of the
optimal cost. :class:`MultMeyerson` runs a grid of guesses (with optional
repetitions) side by side and hands out an irrevocable assignment for every
arriving point: the assignment comes from the *active* instance, i.e. the
lowest-guess instance that is still valid. When the active instance
overflows (too many centers, or cost above its guess-dependent threshold) its
centers stay in the global center set and the next valid instance takes over.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .metric import METRICS, dist


def meyerson_capacity(k: int, aspect_bound: float, alpha: float, z: int) -> int:
    """Center cap of one Meyerson run: 4k(1 + log Δ)(2^(z+3)/α^z + 1), rounded up."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    value = 4 * k * (1 + math.log2(aspect_bound)) * (2 ** (z + 3) / alpha**z + 1)
    return math.ceil(value - 1e-9)


class StepKind(enum.Enum):
    OPENED = "opened"
    ASSIGNED = "assigned"
    OVERFLOW = "overflow"


class StepResult(NamedTuple):
    kind: StepKind
    center: int  # local index of the opened / receiving center
    cost_z: float


class MeyersonInstance:
    """One run of the Meyerson sketch for a fixed guess of OPT.

    Centers, their weights and the running assignment cost are kept in plain
    lists; this is the readable reference the vectorised sweep is checked
    against.
    """

    def __init__(self, guess: float, k: int, aspect_bound: float, z: int = 2,
                 capacity: int | None = None, metric: str = "euclidean"):
        if guess <= 0:
            raise ValueError("guess must be positive")
        self.guess = guess
        self.k = k
        self.z = z
        self.metric = metric
        self.open_scale = k * (1 + math.log2(aspect_bound))
        self.capacity = meyerson_capacity(k, aspect_bound, 0.5, z) if capacity is None else capacity
        self.centers: list[np.ndarray] = []
        self.weights: list[float] = []
        self.cost = 0.0
        self.overflowed = False

    def open_probability(self, dist_z: float, weight: float = 1.0) -> float:
        return min(self.open_scale * weight * dist_z / self.guess, 1.0)

    def step(self, x, u: float, weight: float = 1.0) -> StepResult:
        """Process one point given a uniform draw ``u`` in [0, 1)."""
        if self.overflowed:
            raise RuntimeError("instance already overflowed")
        x = np.asarray(x, dtype=float)
        if not self.centers:
            self._open(x, weight)
            return StepResult(StepKind.OPENED, 0, 0.0)
        dz = [dist(x, c, self.metric) ** self.z for c in self.centers]
        best = int(np.argmin(dz))
        if u < self.open_probability(dz[best], weight):
            self._open(x, weight)
            if len(self.centers) > self.capacity:
                self.overflowed = True
                return StepResult(StepKind.OVERFLOW, len(self.centers) - 1, 0.0)
            return StepResult(StepKind.OPENED, len(self.centers) - 1, 0.0)
        self.weights[best] += weight
        self.cost += weight * dz[best]
        return StepResult(StepKind.ASSIGNED, best, dz[best])

    def _open(self, x, weight):
        self.centers.append(x.copy())
        self.weights.append(weight)


def meyerson_step(inst: MeyersonInstance, x, rng: np.random.Generator, weight: float = 1.0) -> StepResult:
    return inst.step(x, rng.random(), weight)


@dataclass
class MeyersonConfig:
    """Knobs of the bicriteria sketch.

    ``capacity`` defaults to :func:`meyerson_capacity` with α = 1/2, which is
    far larger than any desk-scale stream needs; lower it for small runs.
    Guesses are ``guess_base * 2**i`` for ``i = 1..num_guesses``.
    """

    k: int
    dim: int
    z: int = 2
    aspect_bound: float = 2.0**16
    horizon: int = 2**20
    delta: float = 0.1
    metric: str = "euclidean"
    repetitions: int | None = None
    capacity: int | None = None
    num_guesses: int | None = None
    guess_base: float = 1.0
    c_beta: float = 4.0
    cost_check: bool = True

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.repetitions is None:
            self.repetitions = max(1, math.ceil(2 * math.log2(1 / self.delta)))
        if self.capacity is None:
            self.capacity = meyerson_capacity(self.k, self.aspect_bound, 0.5, self.z)
        if self.num_guesses is None:
            self.num_guesses = max(1, math.ceil(math.log2(self.horizon * self.dim * self.aspect_bound**self.z)))
        if self.repetitions < 1 or self.capacity < 1 or self.num_guesses < 1:
            raise ValueError("repetitions, capacity and num_guesses must be positive")

    @property
    def beta_cap(self) -> float:
        """Budget on retained centers: c_β 2^(2z) k log N log Δ."""
        return (self.c_beta * 2 ** (2 * self.z) * self.k
                * max(1.0, math.log2(self.horizon)) * max(1.0, math.log2(self.aspect_bound)))

    @property
    def size_threshold(self) -> float:
        formula = 8 * self.k * math.log2(1 / self.delta) * (1 + math.log2(self.aspect_bound)) * (2 ** (2 * self.z + 3) + 1)
        return min(formula, self.capacity + 1)


class AssignmentRecord(NamedTuple):
    point_id: int
    center_id: int
    center: np.ndarray
    cost_z: float
    time: int


class AllGuessesFailed(RuntimeError):
    """Every guess overflowed; the declared horizon or aspect ratio is too small."""


class MultMeyerson:
    """Parallel Meyerson runs over a grid of OPT guesses with irrevocable assignment.

    Global center ids encode ``instance * (capacity + 1) + local``.
    """

    _CHUNK = 2048

    def __init__(self, config: MeyersonConfig, rng: np.random.Generator, keep_log: bool = True,
                 check: bool = False):
        self.config = c = config
        self.rng = rng
        self.keep_log = keep_log
        self.check = check
        exps = np.arange(1, c.num_guesses + 1)
        self.guess_exponents = np.repeat(exps, c.repetitions)
        self.guesses = c.guess_base * np.power(2.0, self.guess_exponents)
        n_inst = len(self.guesses)
        self._alloc = min(c.capacity + 1, 16)
        self.centers = np.zeros((n_inst, self._alloc, c.dim))
        self.center_weights = np.zeros((n_inst, self._alloc))
        self.counts = np.zeros(n_inst, dtype=np.int64)
        self.costs = np.zeros(n_inst)
        self.valid = np.ones(n_inst, dtype=np.bool_)
        self.ever_active = np.zeros(n_inst, dtype=np.bool_)
        self._state = np.array([-1], dtype=np.int64)
        self._open_scale = c.k * (1 + math.log2(c.aspect_bound))
        self._cost_mult = 2.0 ** (c.z + 6) if c.cost_check else np.inf
        self._metric = _kernels.METRIC_CODES[c.metric]
        self.time = 0
        self.assigned_cost = 0.0
        self.log_point = []
        self.log_center = []
        self.log_time = []
        self.log_cost = []
        self._seen_ids: set[int] = set()

    @property
    def n_instances(self) -> int:
        return len(self.guesses)

    @property
    def active(self) -> int:
        return int(self._state[0])

    @property
    def stride(self) -> int:
        return self.config.capacity + 1

    def center(self, center_id: int) -> np.ndarray:
        inst, local = divmod(int(center_id), self.stride)
        return self.centers[inst, local]

    def retained_center_ids(self) -> np.ndarray:
        ids = [inst * self.stride + np.arange(self.counts[inst]) for inst in np.flatnonzero(self.ever_active)]
        return np.concatenate(ids) if ids else np.zeros(0, dtype=np.int64)

    @property
    def num_centers(self) -> int:
        return int(self.counts[self.ever_active].sum())

    def retained_centers(self) -> np.ndarray:
        return np.stack([self.center(c) for c in self.retained_center_ids()]) if self.num_centers else np.zeros((0, self.config.dim))

    def _grow(self):
        new = min(self.config.capacity + 1, 2 * self._alloc)
        n_inst, _, d = self.centers.shape
        centers = np.zeros((n_inst, new, d))
        weights = np.zeros((n_inst, new))
        centers[:, : self._alloc] = self.centers
        weights[:, : self._alloc] = self.center_weights
        self.centers, self.center_weights, self._alloc = centers, weights, new

    def ingest_many(self, X, weights=None, ids=None) -> tuple[np.ndarray, np.ndarray]:
        """Assign a batch of points. Returns (center ids, dist^z) arrays."""
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
        n = X.shape[0]
        W = np.ones(n) if weights is None else np.ascontiguousarray(weights, dtype=float)
        if ids is None:
            ids = np.arange(self.time + 1, self.time + n + 1)
        out_center = np.empty(n, dtype=np.int64)
        out_cost = np.empty(n)
        for lo in range(0, n, self._CHUNK):
            hi = min(n, lo + self._CHUNK)
            Xc, Wc = X[lo:hi], W[lo:hi]
            U = self.rng.random((hi - lo, self.n_instances))
            o_inst = np.empty(hi - lo, dtype=np.int64)
            o_local = np.empty(hi - lo, dtype=np.int64)
            o_cost = np.empty(hi - lo)
            pos = 0
            while pos < hi - lo:
                status, pos = _kernels.meyerson_sweep(
                    Xc, Wc, U, pos, self.centers, self.center_weights, self.counts, self.costs,
                    self.valid, self.guesses, self._open_scale, self.config.capacity, self._cost_mult,
                    self.config.z, self._metric, self._state, o_inst, o_local, o_cost)
                if status == _kernels.NEEDS_GROWTH:
                    self._grow()
                elif status == _kernels.ALL_INVALID:
                    raise AllGuessesFailed(
                        f"all {self.n_instances} guesses overflowed after {self.time + lo + pos} points")
            self.ever_active[np.unique(o_inst)] = True
            out_center[lo:hi] = o_inst * self.stride + o_local
            out_cost[lo:hi] = o_cost
        self.assigned_cost += float(W @ out_cost)
        times = np.arange(self.time + 1, self.time + n + 1)
        self.time += n
        if self.keep_log or self.check:
            id_list = [int(i) for i in ids]
            if self.check:
                for pid in id_list:
                    if pid in self._seen_ids:
                        raise AssertionError(f"point {pid} assigned twice")
                    self._seen_ids.add(pid)
            if self.keep_log:
                self.log_point.extend(id_list)
                self.log_center.extend(out_center.tolist())
                self.log_time.extend(times.tolist())
                self.log_cost.extend(out_cost.tolist())
        return out_center, out_cost

    def ingest(self, x, weight: float = 1.0, point_id: int | None = None) -> AssignmentRecord:
        pid = self.time + 1 if point_id is None else point_id
        cid, cz = self.ingest_many(np.asarray(x, dtype=float).reshape(1, -1), np.array([weight]), [pid])
        return AssignmentRecord(pid, int(cid[0]), self.center(cid[0]).copy(), float(cz[0]), self.time)

    def select(self) -> int:
        """Minimal guess exponent whose run is small enough and cheap enough."""
        c = self.config
        for s in range(self.n_instances):
            if not self.valid[s]:
                continue
            j = self.guess_exponents[s]
            if self.counts[s] < c.size_threshold and self.costs[s] < 2.0 ** (c.z + 6) * self.guesses[s]:
                return int(j)
        raise AllGuessesFailed("no guess satisfies the size and cost thresholds")

    def selected_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """Centers and weights of the lowest valid run of the selected guess."""
        j = self.select()
        s = int(np.flatnonzero((self.guess_exponents == j) & self.valid)[0])
        n = self.counts[s]
        return self.centers[s, :n].copy(), self.center_weights[s, :n].copy()

    def assignment_log(self) -> dict[str, np.ndarray]:
        return {
            "point_id": np.asarray(self.log_point, dtype=np.int64),
            "center_id": np.asarray(self.log_center, dtype=np.int64),
            "assign_time": np.asarray(self.log_time, dtype=np.int64),
            "cost_z": np.asarray(self.log_cost, dtype=float),
        }

    def export_assignments(self, path) -> None:
        log = self.assignment_log()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["point_id", "center_id", "assign_time", "cost_z"])
            for row in zip(*(log[k] for k in ("point_id", "center_id", "assign_time", "cost_z"))):
                w.writerow([int(row[0]), int(row[1]), int(row[2]), repr(float(row[3]))])


def multmeyerson_ingest(state: MultMeyerson, x, point_id: int | None = None) -> AssignmentRecord:
    return state.ingest(x, point_id=point_id)


def multmeyerson_select(state: MultMeyerson) -> int:
    return state.select()
