"""Experiment orchestration: algorithm runners, result rows, online-error probes and the lower-bound sweep."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import histogram_coreset, importance_expiry_coreset, uniform_coreset
from .datasets import DatasetSpec, build_stream, densify, gen_lowerbound_stream, lowerbound_length
from .metric import StreamParams, WeightedSet, cost, nearest
from .ringsample import CoresetConfig, OnlineCoreset
from .sliding_window import SlidingWindowConfig, SlidingWindowCoreset
from .solver import weighted_kmeans

log = logging.getLogger(__name__)

ALGORITHMS = ("ours", "uni", "hist", "imp", "off")
CSV_HEADER = ["algo", "k", "m", "seed", "true_cost", "coreset_cost", "coreset_size", "wall_ms"]

# bicriteria knobs for desk-scale runs: one repetition, small capacity
DESK_MEYERSON = {"repetitions": 1, "capacity": 40}


@dataclass
class ResultRow:
    algo: str
    k: int
    m: int
    seed: int
    true_cost: float
    coreset_cost: float
    coreset_size: int
    wall_ms: float
    error: str | None = None

    def csv_row(self) -> list:
        return [self.algo, self.k, self.m, self.seed, repr(self.true_cost), repr(self.coreset_cost),
                self.coreset_size, f"{self.wall_ms:.3f}"]


@dataclass
class ExperimentConfig:
    """One grid: every algorithm on every (k, m, repetition) cell.

    ``ours_target`` maps the budget m to the sampler's target_samples
    (None means target_samples = m). ``timing = False`` writes wall_ms as 0 so
    reruns give byte-identical CSV files.
    """

    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    algorithms: tuple = ALGORITHMS
    k_grid: tuple = (3,)
    m_grid: tuple = (10,)
    repetitions: int = 3
    seed: int = 0
    iterations: int = 10
    restarts: int = 1
    z: int = 2
    epsilon: float = 0.5
    theta: float = 8.0
    ours_target: float | None = None
    meyerson: dict = field(default_factory=lambda: dict(DESK_MEYERSON))
    aspect_bound: float = 2.0**40
    timing: bool = True
    jobs: int = 1

    def __post_init__(self):
        if isinstance(self.dataset, dict):
            self.dataset = DatasetSpec(**self.dataset)
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}")
        if self.repetitions < 1 or not self.k_grid or not self.m_grid:
            raise ValueError("need at least one repetition, k and m")
        self.algorithms, self.k_grid, self.m_grid = tuple(self.algorithms), tuple(self.k_grid), tuple(self.m_grid)

    @classmethod
    def from_json(cls, d) -> "ExperimentConfig":
        if isinstance(d, str):
            with open(d) as fh:
                d = json.load(fh)
        return cls(**d)

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["dataset"] = self.dataset.to_json()
        return d

    def cells(self) -> list[tuple[int, int, int]]:
        return [(k, m, r) for k in self.k_grid for m in self.m_grid for r in range(self.repetitions)]


def _horizon_for(n: int) -> int:
    return 2 ** max(4, math.ceil(math.log2(n + 1)))


def ours_structure(X, window, k, m, cfg: ExperimentConfig, rng) -> SlidingWindowCoreset:
    params = StreamParams(k=k, z=cfg.z, aspect_bound=cfg.aspect_bound, horizon=_horizon_for(len(X)),
                          epsilon=cfg.epsilon, delta=0.1)
    target = m if cfg.ours_target is None else cfg.ours_target * m
    cc = CoresetConfig(params, target_samples=target, meyerson=dict(cfg.meyerson))
    sw = SlidingWindowCoreset(SlidingWindowConfig(cc, max_window=max(window, 1)), X.shape[1], rng)
    sw.ingest_many(X)
    return sw


def _coreset_for(algo, X, window, k, m, cfg, rng) -> WeightedSet:
    win = X[len(X) - window:]
    if algo == "ours":
        return ours_structure(X, window, k, m, cfg, rng).query(window)
    if algo == "uni":
        return uniform_coreset(win, m, rng)
    if algo == "hist":
        return histogram_coreset(X, m, cfg.theta, rng, cfg.z)
    if algo == "imp":
        return importance_expiry_coreset(X, m, window, rng, cfg.z)
    if algo == "off":
        return WeightedSet(win)
    raise ValueError(algo)


def run_cell(cfg: ExperimentConfig, index: int) -> list[ResultRow]:
    k, m, rep = cfg.cells()[index]
    seq = np.random.SeedSequence(cfg.seed, spawn_key=(index,))
    data_seq, *algo_seqs = seq.spawn(1 + len(cfg.algorithms))
    cell_seed = int(seq.generate_state(1)[0])
    X, window = build_stream(cfg.dataset, np.random.default_rng(data_seq))
    window = min(window, len(X))
    win = X[len(X) - window:]
    rows = []
    for algo, aseq in zip(cfg.algorithms, algo_seqs):
        sample_seq, solve_seq = aseq.spawn(2)
        t0 = time.perf_counter()
        try:
            ws = _coreset_for(algo, X, window, k, m, cfg, np.random.default_rng(sample_seq))
            centers, est = weighted_kmeans(ws.points, ws.weights, k, cfg.z, cfg.iterations, cfg.restarts,
                                           solve_seq)
            true = cost(win, centers, cfg.z)
            row = ResultRow(algo, k, m, cell_seed, true, est, len(ws), 0.0)
        except Exception as exc:  # recorded; the grid continues
            log.warning("cell %d (%s, k=%d, m=%d) failed: %s", index, algo, k, m, exc)
            row = ResultRow(algo, k, m, cell_seed, math.nan, math.nan, 0, 0.0, error=repr(exc))
        if cfg.timing:
            row.wall_ms = 1e3 * (time.perf_counter() - t0)
        rows.append(row)
    return rows


def run_experiment(cfg: ExperimentConfig, jobs: int | None = None) -> list[ResultRow]:
    """Rows ordered by cell index, then by algorithm order, whatever the parallelism."""
    jobs = cfg.jobs if jobs is None else jobs
    n = len(cfg.cells())
    if jobs <= 1:
        per_cell = [run_cell(cfg, i) for i in range(n)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_cell = list(pool.map(run_cell, [cfg] * n, range(n)))
    return [r for rows in per_cell for r in rows]


def rows_to_csv(rows: list[ResultRow], path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_row())
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def summarize(rows: list[ResultRow]) -> dict:
    """Mean, standard deviation and median of the true cost per (algo, k, m)."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.algo, r.k, r.m), []).append(r)
    out = []
    for (algo, k, m), rs in groups.items():
        ok = np.array([r.true_cost for r in rs if r.error is None])
        sizes = np.array([r.coreset_size for r in rs if r.error is None])
        out.append({
            "algo": algo, "k": k, "m": m, "runs": len(rs), "failures": len(rs) - len(ok),
            "mean_cost": float(ok.mean()) if len(ok) else None,
            "std_cost": float(ok.std(ddof=1)) if len(ok) > 1 else 0.0,
            "median_cost": float(np.median(ok)) if len(ok) else None,
            "mean_size": float(sizes.mean()) if len(sizes) else None,
        })
    return {"cells": out}


def median_costs(rows: list[ResultRow], k: int, m: int) -> dict[str, float]:
    return {c["algo"]: c["median_cost"] for c in summarize(rows)["cells"] if c["k"] == k and c["m"] == m}


# ------------------------------------------------------------ online error
def measure_online_coreset_error(stream, config: CoresetConfig, probe_times, center_sets,
                                 rng: np.random.Generator, per_point: bool = False,
                                 return_coreset: bool = False):
    """Max over probes t and center sets C of |cost(extract(t), C) - cost(prefix(t), C)| / cost(prefix(t), C).

    Zero-cost prefixes are skipped. ``per_point`` feeds one point per call,
    which makes the random draws of a stream identical to those of any
    stream it is a prefix of.
    """
    X = np.atleast_2d(np.asarray(stream, dtype=float))
    oc = OnlineCoreset(config, X.shape[1], rng, keep_log=False)
    if per_point:
        for x in X:
            oc.ingest(x)
    else:
        oc.ingest_many(X)
    z, metric = config.params.z, config.params.metric
    worst = 0.0
    probe_times = [int(t) for t in probe_times]
    for t in probe_times:
        if not 1 <= t <= len(X):
            raise ValueError(f"probe time {t} outside [1, {len(X)}]")
    extracts = {t: oc.extract(t) for t in set(probe_times)}
    # exactly rounded sums, so a lossless coreset reports an error of exactly 0
    for C in center_sets:
        C = np.atleast_2d(np.asarray(C, dtype=float))
        _, d = nearest(X, C, z, metric)
        for t in probe_times:
            true = math.fsum(d[:t])
            if true <= 0:
                continue
            ws = extracts[t]
            est = math.fsum(ws.weights * nearest(ws.points, C, z, metric)[1]) if len(ws) else 0.0
            worst = max(worst, abs(est - true) / true)
    return (worst, oc) if return_coreset else worst


# ------------------------------------------------------------ lower bound
@dataclass
class LowerBoundConfig:
    """Sweep of the minimum target_samples that keeps every prefix error under ``tolerance``.

    Every stream is embedded in the dimension of the largest instance count,
    fed one point at a time, and shares the horizon, so the stream for g
    instances is a prefix of the stream for g + 1 with identical randomness.
    """

    d_prime: int = 20
    tau: int = 5
    gammas: tuple = (1, 2, 3, 4)
    seeds: int = 5
    seed: int = 0
    k: int = 2
    tolerance: float = 0.2
    centers_per_instance: int = 4
    lo: int = 1
    hi: int = 4096
    meyerson: dict = field(default_factory=lambda: {"repetitions": 1, "capacity": 4})


def lowerbound_queries(cfg: LowerBoundConfig, gamma_lb: int, rng: np.random.Generator):
    """Probe times (end of each instance) and center sets of k unit vectors inside each instance's block."""
    dim = 2 * cfg.d_prime * max(cfg.gammas)
    probes = [lowerbound_length(cfg.d_prime, i, cfg.tau) for i in range(1, gamma_lb + 1)]
    centers = []
    for i in range(gamma_lb):
        base = 2 * i * cfg.d_prime
        for _ in range(cfg.centers_per_instance):
            C = np.zeros((cfg.k, dim))
            for c in range(cfg.k):
                support = rng.choice(2 * cfg.d_prime, size=rng.integers(1, 4), replace=False)
                C[c, base + support] = rng.random(len(support)) + 0.1
            centers.append(C / np.linalg.norm(C, axis=1, keepdims=True))
    return probes, centers


def _lb_error(cfg: LowerBoundConfig, gamma_lb: int, target: float) -> float:
    dim = 2 * cfg.d_prime * max(cfg.gammas)
    support, _ = gen_lowerbound_stream(cfg.d_prime, gamma_lb, cfg.tau)
    X = densify(support, dim)
    horizon = _horizon_for(lowerbound_length(cfg.d_prime, max(cfg.gammas), cfg.tau))
    params = StreamParams(k=cfg.k, z=2, aspect_bound=4.0, horizon=horizon, epsilon=0.5, delta=0.1)
    cc = CoresetConfig(params, target_samples=target, meyerson=dict(cfg.meyerson))
    # queries are drawn for the largest instance count and truncated, so they nest across gamma_lb
    probes, centers = lowerbound_queries(cfg, max(cfg.gammas), np.random.default_rng(cfg.seed))
    probes = probes[:gamma_lb]
    centers = centers[: gamma_lb * cfg.centers_per_instance]
    worst = 0.0
    for s in range(cfg.seeds):
        rng = np.random.default_rng([cfg.seed, s])
        worst = max(worst, measure_online_coreset_error(X, cc, probes, centers, rng, per_point=True))
    return worst


def min_target_samples(cfg: LowerBoundConfig, gamma_lb: int) -> float:
    """Bisection over integer target_samples in [lo, hi]; ``inf`` when even ``hi`` fails."""
    ok = lambda t: _lb_error(cfg, gamma_lb, t) <= cfg.tolerance
    lo, hi = cfg.lo, cfg.hi
    if ok(lo):
        return lo
    if not ok(hi):
        return math.inf
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def lowerbound_sweep(cfg: LowerBoundConfig) -> dict[int, float]:
    return {g: min_target_samples(cfg, g) for g in cfg.gammas}
