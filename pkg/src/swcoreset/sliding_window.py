"""Merge-and-reduce over the reversed stream.

New points are prepended to a raw buffer ``B_0`` of capacity ``m``. When the
buffer is full, the buffer and every occupied block below the first empty
level ``i`` are fed *newest first* into a fresh online coreset, which becomes
block ``B_i``. Because each block's coreset saw its items in reverse arrival
order, the prefix of that coreset is a suffix of the stream, so a window of
any length is answered by cutting every block at a timestamp.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

from .metric import StreamParams, WeightedSet
from .ringsample import CoresetConfig, FrozenCoreset, OnlineCoreset

SNAPSHOT_VERSION = 1


class HorizonExceeded(RuntimeError):
    pass


@dataclass
class SlidingWindowConfig:
    """``block_size`` is m; ``max_window`` defaults to the horizon."""

    coreset: CoresetConfig
    block_size: int | None = None
    max_window: int | None = None
    c_samples: float = 4.0

    def __post_init__(self):
        if self.block_size is None:
            t = self.coreset.target_samples
            self.block_size = 256 if t is None else max(256, 2 * math.ceil(t))
        if self.max_window is None:
            self.max_window = self.coreset.params.horizon
        if self.block_size < 1 or self.max_window < 1:
            raise ValueError("block_size and max_window must be positive")

    @property
    def params(self) -> StreamParams:
        return self.coreset.params

    def level_config(self) -> CoresetConfig:
        """Per-level budgets ε / log N and δ / N²."""
        p = self.params
        level = dataclasses.replace(p, epsilon=p.epsilon / p.log_n, delta=max(p.delta / p.horizon**2, 1e-300))
        return dataclasses.replace(self.coreset, params=level)

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "SlidingWindowConfig":
        c = dict(d["coreset"])
        c["params"] = StreamParams(**c["params"])
        return cls(CoresetConfig(**c), d["block_size"], d["max_window"], d["c_samples"])


@dataclass
class Block:
    level: int
    payload: FrozenCoreset

    @property
    def span(self) -> tuple[int, int]:
        return self.payload.span

    def __len__(self) -> int:
        return len(self.payload)


class SlidingWindowCoreset:
    def __init__(self, config: SlidingWindowConfig, dim: int, rng: np.random.Generator, check: bool = False):
        self.config = config
        self.dim = dim
        self.rng = rng
        self.check = check
        self.m = config.block_size
        p = config.params
        self.num_slots = math.ceil(math.log2(max(1.0, p.horizon / self.m))) + 2
        self.blocks: list[Block | None] = [None] * self.num_slots
        self._level_cfg = config.level_config()
        self._b0_coords: list[np.ndarray] = []
        self._b0_ts: list[int] = []
        self.time = 0
        self.compressions = 0
        self.compression_levels: list[int] = []
        self.closed = False

    # ------------------------------------------------------------------ ingest
    def ingest(self, x) -> None:
        if self.closed:
            raise HorizonExceeded("structure is closed after exceeding its horizon")
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.dim:
            raise ValueError(f"expected dimension {self.dim}, got {x.size}")
        t = self.time + 1
        if len(self._b0_ts) >= self.m:
            self._compress(t)
        self._b0_coords.append(x)
        self._b0_ts.append(t)
        self.time = t
        if self.check:
            self._check_invariants()

    def ingest_many(self, X) -> None:
        for x in np.atleast_2d(np.asarray(X, dtype=float)):
            self.ingest(x)

    def _compress(self, t_new: int) -> None:
        level = next((i for i in range(1, self.num_slots) if self.blocks[i] is None), None)
        if level is None:
            self.closed = True
            raise HorizonExceeded(f"no empty level left after {self.time} points; raise the horizon")
        parts_x = [np.stack(self._b0_coords[::-1])]
        parts_w = [np.ones(len(self._b0_ts))]
        parts_hi = [np.asarray(self._b0_ts[::-1], dtype=np.int64)]
        parts_lo = [parts_hi[0]]
        parts_id = [parts_hi[0]]
        for i in range(1, level):
            b = self.blocks[i]
            if b is None:
                continue
            f = b.payload
            order = np.argsort(-f.ts_hi, kind="stable")
            parts_x.append(f.coords[order])
            parts_w.append(f.weight[order])
            parts_hi.append(f.ts_hi[order])
            parts_lo.append(f.ts_lo[order])
            parts_id.append(f.point_id[order])
        hi = np.concatenate(parts_hi)
        if self.check and len(hi) > 1:
            assert np.all(np.diff(hi) < 0), "block input must be strictly newest-first"
        coreset = OnlineCoreset(self._level_cfg, self.dim, self.rng, check=self.check, keep_log=False)
        coreset.ingest_many(np.concatenate(parts_x), np.concatenate(parts_w), hi,
                            np.concatenate(parts_id), np.concatenate(parts_lo))
        for i in range(1, level):
            self.blocks[i] = None
        self.blocks[level] = Block(level, coreset.frozen())
        self._b0_coords, self._b0_ts = [], []
        self.compressions += 1
        self.compression_levels.append(level)
        oldest_live = t_new - self.config.max_window + 1
        for i in range(1, self.num_slots):
            b = self.blocks[i]
            if b is not None and b.span[1] < oldest_live:
                self.blocks[i] = None

    # ----------------------------------------------------------------- queries
    @property
    def live_blocks(self) -> list[Block]:
        return [b for b in self.blocks[1:] if b is not None]

    @property
    def stored_points(self) -> int:
        return len(self._b0_ts) + sum(len(b) for b in self.live_blocks)

    def space_bound(self) -> float:
        n = max(self.time, 1)
        levels = math.ceil(math.log2(max(1.0, n / self.m))) + 2
        return self.m * levels * self.config.c_samples

    def _check_invariants(self) -> None:
        assert len(self._b0_ts) <= self.m
        if not self.config.coreset.exact_mode:
            assert self.stored_points <= self.space_bound(), "stored points exceed the space bound"
        for b in self.live_blocks:
            assert b.span[1] - b.span[0] + 1 <= 2 ** (b.level - 1) * self.m, "block covers too many arrivals"
        spans = sorted(b.span for b in self.live_blocks)
        for (a_lo, a_hi), (b_lo, b_hi) in zip(spans, spans[1:]):
            assert a_hi < b_lo, "block spans overlap"

    def query(self, window: int) -> WeightedSet:
        """Weighted coreset of the ``window`` most recent points."""
        if not 1 <= window <= min(self.config.max_window, self.time):
            raise ValueError(f"window {window} outside [1, {min(self.config.max_window, self.time)}]")
        thr = self.time - window + 1
        parts = []
        for b in reversed(self.live_blocks):
            if b.span[1] >= thr:
                parts.append(b.payload.restrict(thr))
        ts = np.asarray(self._b0_ts, dtype=np.int64)
        keep = ts >= thr
        if keep.any():
            X = np.stack(self._b0_coords)[keep]
            parts.append(WeightedSet(X, np.ones(int(keep.sum())), ts[keep], ts[keep]))
        return WeightedSet.concat(parts, self.dim)

    def solve(self, window: int, k: int | None = None, **solve_kwargs):
        """Cluster the window's coreset offline. Returns (centers, coreset-estimated cost)."""
        from .solver import weighted_kmeans

        ws = self.query(window)
        k = self.config.params.k if k is None else k
        solve_kwargs.setdefault("z", self.config.params.z)
        solve_kwargs.setdefault("metric", self.config.params.metric)
        return weighted_kmeans(ws.points, ws.weights, k, **solve_kwargs)

    # --------------------------------------------------------------- snapshots
    def to_json(self) -> str:
        state = {
            "version": SNAPSHOT_VERSION,
            "dim": self.dim,
            "config": self.config.to_json(),
            "time": self.time,
            "compressions": self.compressions,
            "compression_levels": self.compression_levels,
            "closed": self.closed,
            "b0": {"coords": [c.tolist() for c in self._b0_coords], "ts": list(self._b0_ts)},
            "blocks": [None if b is None else {"level": b.level, "payload": b.payload.to_json()}
                       for b in self.blocks],
            "rng": self.rng.bit_generator.state,
        }
        return json.dumps(state)

    @classmethod
    def from_json(cls, blob: str, check: bool = False) -> "SlidingWindowCoreset":
        state = json.loads(blob)
        if state.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {state.get('version')}")
        rng = np.random.default_rng()
        rng.bit_generator.state = state["rng"]
        obj = cls(SlidingWindowConfig.from_json(state["config"]), state["dim"], rng, check)
        obj.time = state["time"]
        obj.compressions = state["compressions"]
        obj.compression_levels = list(state["compression_levels"])
        obj.closed = state["closed"]
        obj._b0_coords = [np.asarray(c, dtype=float) for c in state["b0"]["coords"]]
        obj._b0_ts = list(state["b0"]["ts"])
        obj.blocks = [None if b is None else Block(b["level"], FrozenCoreset.from_json(b["payload"], obj.dim))
                      for b in state["blocks"]]
        return obj


def sw_ingest(state: SlidingWindowCoreset, x) -> None:
    state.ingest(x)


def sw_query(state: SlidingWindowCoreset, window: int) -> WeightedSet:
    return state.query(window)


def solve_window(state: SlidingWindowCoreset, window: int, k: int | None = None, **solve_kwargs):
    return state.solve(window, k, **solve_kwargs)


def sw_compress(state: SlidingWindowCoreset) -> None:
    """Fold the full raw buffer (and the occupied levels below the first empty one) into a block."""
    if len(state._b0_ts) < state.m:
        raise ValueError("raw buffer is not full")
    state._compress(state.time + 1)
