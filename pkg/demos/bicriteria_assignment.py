"""
Irrevocable assignments from a grid of Meyerson sketches
=========================================================

Every arriving point is assigned, once and for all, to a center of the
lowest-guess sketch that is still valid. Here we watch the active guess move
up as a stream of two clusters arrives, and compare the total assignment
cost with an offline k-means solution.
"""

import numpy as np

from swcoreset import MeyersonConfig, MultMeyerson, weighted_kmeans

rng = np.random.default_rng(0)
X = np.concatenate([rng.normal(0, 1, (1500, 2)), rng.normal(25, 1, (1500, 2))])
X = X[rng.permutation(len(X))]

# a small desk configuration: one repetition per guess, at most 40 centers each
cfg = MeyersonConfig(k=2, dim=2, horizon=2**12, aspect_bound=2**16, repetitions=1, capacity=40)
mm = MultMeyerson(cfg, rng)

for lo in range(0, len(X), 500):
    mm.ingest_many(X[lo:lo + 500])
    print(f"t={mm.time:5d}  active guess 2^{mm.guess_exponents[mm.active]}  centers so far {mm.num_centers}")

_, offline = weighted_kmeans(X, None, 2, seed=0, restarts=5)
print(f"assignment cost {mm.assigned_cost:.4g} vs offline k-means {offline:.4g} "
      f"(ratio {mm.assigned_cost / offline:.2f})")

# the log is append-only: the first assignments never change
log = mm.assignment_log()
print("first five assignments:", log["center_id"][:5].tolist())
