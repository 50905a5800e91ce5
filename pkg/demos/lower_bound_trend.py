"""
More instances need more samples
================================

The lower-bound stream is a sequence of instances, each repeating its unit
vectors more times than the last. An online coreset must stay accurate at
the end of every instance, so the smallest sampling target that keeps the
error below a tolerance grows with the number of instances.
"""

from swcoreset import LowerBoundConfig, lowerbound_sweep

cfg = LowerBoundConfig(d_prime=8, tau=4, gammas=(1, 2, 3), seeds=3, hi=1024)
for g, t in lowerbound_sweep(cfg).items():
    print(f"{g} instance(s): minimum target_samples {t}")
