"""
Windows of any length from one structure
========================================

Blocks of the merge-and-reduce tree are built over the stream in reverse,
so each block's sample can be cut at a timestamp. A single structure then
answers queries for any window length, and the coreset of a window can be
clustered offline.
"""

import numpy as np

from swcoreset import CoresetConfig, SlidingWindowConfig, SlidingWindowCoreset, StreamParams, cost

rng = np.random.default_rng(2)
# the stream drifts: the second half comes from different clusters
first = rng.normal(size=(10_000, 2)) + rng.choice([-20, 0, 20], (10_000, 1))
second = rng.normal(size=(10_000, 2)) + rng.choice([-20, 20], (10_000, 1)) * [0, 1]
X = np.concatenate([first, second])

params = StreamParams(k=3, horizon=2**15, aspect_bound=2**20)
cfg = SlidingWindowConfig(CoresetConfig(params, target_samples=200, meyerson={"repetitions": 1, "capacity": 40}))
sw = SlidingWindowCoreset(cfg, dim=2, rng=rng)
sw.ingest_many(X)
print(f"block size m={sw.m}, live blocks {len(sw.live_blocks)}, stored {sw.stored_points} of {sw.time} points")

for W in (1000, 10_000, 20_000):
    ws = sw.query(W)
    centers, est = sw.solve(W, k=3, seed=0, restarts=3)
    true = cost(X[-W:], centers)
    print(f"W={W:6d}  coreset {len(ws):5d}  centers {np.round(centers, 1).tolist()}  "
          f"est {est:.4g} true {true:.4g}")
