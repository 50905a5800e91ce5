"""
Expired outliers and the comparison sketches
============================================

Two far outliers arrive first and leave the window before the end. A sketch
that never looks at timestamps may keep one of them and place a center on
it. This runs a small version of the synthetic benchmark and prints the
median cost of each algorithm on the true window.
"""

from swcoreset import ExperimentConfig, median_costs, outlier_synthetic_spec, run_experiment

cfg = ExperimentConfig(dataset=outlier_synthetic_spec(0.02), k_grid=(3,), m_grid=(10,), repetitions=10,
                       iterations=3, seed=0, timing=False)
rows = run_experiment(cfg)
for algo, med in median_costs(rows, 3, 10).items():
    print(f"{algo:5s} median window cost {med:.4g}")
