"""Sliding-window coresets for (k, z)-clustering.

Pieces, bottom-up: distances and costs (``metric``), a bicriteria online
assignment (``meyerson``), ring/group importance sampling into an online
coreset (``ringsample``), merge-and-reduce over the reversed stream
(``sliding_window``), an offline weighted solver (``solver``), comparison
sketches (``baselines``) and the experiment harness (``experiment``).
"""
from .baselines import (BaselineConfig, ImportanceSampler, histogram_coreset, importance_expiry_coreset,
                        uniform_coreset)
from .datasets import (DatasetSpec, build_noisy_skin_stream, build_stream, gen_gaussian_mixture,
                       gen_lowerbound_stream, load_skin_dataset, outlier_synthetic_spec)
from .experiment import (ExperimentConfig, LowerBoundConfig, ResultRow, lowerbound_sweep,
                         measure_online_coreset_error, median_costs, rows_to_csv, run_experiment, summarize)
from .metric import (Point, StreamParams, WeightedPoint, WeightedSet, cost, dist, opt_cost_bruteforce)
from .meyerson import (MeyersonConfig, MeyersonInstance, MultMeyerson, meyerson_capacity, meyerson_step,
                       multmeyerson_ingest, multmeyerson_select)
from .ringsample import (CoresetConfig, OnlineCoreset, extract_coreset, gamma, group_index, ring_index,
                         ringsample_ingest)
from .sliding_window import (SlidingWindowConfig, SlidingWindowCoreset, solve_window, sw_compress, sw_ingest,
                             sw_query)
from .solver import kmeanspp_init, lloyd_iterate, weighted_kmeans

__version__ = "0.1.0"
