"""
One sample, every prefix
========================

The ring sampler keeps a point with probability inversely proportional to
how many points already share its cost band and group. Because samples are
never removed, the samples that arrived by time t approximate the cost of
the first t points, for every t at once.
"""

import numpy as np

from swcoreset import CoresetConfig, OnlineCoreset, StreamParams, cost

rng = np.random.default_rng(1)
means = rng.normal(0, 10, (3, 2))
X = means[rng.integers(0, 3, 10_000)] + rng.normal(size=(10_000, 2))

params = StreamParams(k=3, horizon=2**14, aspect_bound=2**20)
cfg = CoresetConfig(params, target_samples=100, meyerson={"repetitions": 1, "capacity": 40})
oc = OnlineCoreset(cfg, dim=2, rng=rng)
oc.ingest_many(X)
print(f"{oc.num_records} records kept for {len(X)} points")

# a fixed set of query centers, evaluated on several prefixes
C = rng.uniform(X.min(axis=0), X.max(axis=0), (3, 2))
for t in (100, 1000, 5000, 10_000):
    ws = oc.extract(t)
    est, true = cost(ws, C), cost(X[:t], C)
    print(f"t={t:6d}  size {len(ws):5d}  estimate {est:.4g}  truth {true:.4g}  rel err {abs(est - true) / true:.3f}")

# exact mode keeps everything: a lossless reference
exact = OnlineCoreset(CoresetConfig(params, exact_mode=True), 2, rng)
exact.ingest_many(X[:2000])
print("exact mode error:", abs(cost(exact.extract(), C) - cost(X[:2000], C)) / cost(X[:2000], C))
