"""Command-line front end: ``swcoreset {generate,coreset,solve,bench,lowerbound,verify}``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import secrets
import sys

import numpy as np

from . import io as csvio
from .datasets import DatasetSpec, build_stream, outlier_synthetic_spec
from .experiment import (DESK_MEYERSON, ExperimentConfig, LowerBoundConfig, lowerbound_sweep,
                         measure_online_coreset_error, rows_to_csv, run_experiment, summarize)
from .metric import METRICS, StreamParams
from .ringsample import CoresetConfig
from .sliding_window import SlidingWindowConfig, SlidingWindowCoreset
from .solver import weighted_kmeans


class CliError(Exception):
    pass


def _resolve_seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(32)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


def _load_spec(arg) -> DatasetSpec:
    if arg == "outlier_synth":
        return outlier_synthetic_spec()
    return DatasetSpec.from_json(arg)


def _coreset_config(args, horizon: int) -> CoresetConfig:
    params = StreamParams(k=args.k, z=args.z, aspect_bound=args.aspect_bound, horizon=horizon,
                          epsilon=args.epsilon, delta=args.delta, metric=args.metric)
    return CoresetConfig(params, exact_mode=args.exact, target_samples=args.target_samples,
                         meyerson=dict(DESK_MEYERSON) if not args.theory_constants else {})


# ---------------------------------------------------------------- commands
def cmd_generate(args) -> int:
    seed = _resolve_seed(args)
    X, window = build_stream(_load_spec(args.spec), np.random.default_rng(seed))
    out = args.out or "-"
    if out == "-":
        fh = sys.stdout
        fh.write(",".join(["id", "timestamp"] + [f"c{i + 1}" for i in range(X.shape[1])]) + "\n")
        for t, x in enumerate(X, start=1):
            fh.write(f"{t},{t}," + ",".join(repr(float(v)) for v in x) + "\n")
    else:
        csvio.write_stream(out, X)
    print(f"rows: {len(X)} window: {window}", file=sys.stderr)
    return 0


def cmd_coreset(args) -> int:
    if args.input == "dump":
        if not args.snapshot:
            raise CliError("coreset dump needs --snapshot")
        with open(args.snapshot) as fh:
            sw = SlidingWindowCoreset.from_json(fh.read())
    else:
        seed = _resolve_seed(args)
        sw = None
        fh = sys.stdin if args.input == "-" else open(args.input, newline="")
        try:
            for _, _, x in csvio.iter_stream(fh):
                if sw is None:
                    cfg = SlidingWindowConfig(_coreset_config(args, args.horizon), block_size=args.block_size,
                                              max_window=args.max_window)
                    sw = SlidingWindowCoreset(cfg, x.size, np.random.default_rng(seed))
                sw.ingest(x)
        finally:
            if fh is not sys.stdin:
                fh.close()
        if sw is None:
            raise CliError("input stream is empty")
        if args.snapshot:
            with open(args.snapshot, "w") as out:
                out.write(sw.to_json())
    window = args.window if args.window is not None else min(sw.time, sw.config.max_window)
    ws = sw.query(window)
    out = _open_out(args.out)
    try:
        csvio.write_weighted(out, ws)
    finally:
        if out is not sys.stdout:
            out.close()
    print(f"points seen: {sw.time} stored: {sw.stored_points} coreset size: {len(ws)}", file=sys.stderr)
    return 0


def cmd_solve(args) -> int:
    seed = _resolve_seed(args)
    ws = csvio.read_weighted(args.input)
    C, c = weighted_kmeans(ws.points, ws.weights, args.k, args.z, args.iterations, args.restarts, seed,
                           args.metric)
    out = _open_out(args.out)
    try:
        out.write(f"# cost {c!r}\n")
        for row in C:
            out.write(",".join(repr(float(v)) for v in row) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_bench(args) -> int:
    cfg = ExperimentConfig.from_json(args.spec)
    if args.seed is not None:
        cfg.seed = args.seed
    rows = run_experiment(cfg, jobs=args.jobs)
    text = rows_to_csv(rows)
    out = _open_out(args.out)
    try:
        out.write(text)
    finally:
        if out is not sys.stdout:
            out.close()
    if args.summary:
        with open(args.summary, "w") as fh:
            json.dump(summarize(rows), fh, indent=2)
    failed = sum(r.error is not None for r in rows)
    if failed:
        print(f"{failed} of {len(rows)} runs failed", file=sys.stderr)
    return 0


def cmd_lowerbound(args) -> int:
    cfg = LowerBoundConfig(d_prime=args.d_prime, tau=args.tau, gammas=tuple(args.gammas), seeds=args.seeds,
                           seed=_resolve_seed(args), k=args.k, tolerance=args.tolerance, hi=args.max_target)
    res = lowerbound_sweep(cfg)
    out = _open_out(args.out)
    try:
        out.write("gamma_lb,min_target_samples\n")
        for g, t in res.items():
            out.write(f"{g},{t}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_verify(args) -> int:
    seed = _resolve_seed(args)
    rng = np.random.default_rng(seed)
    if args.input:
        X = csvio.read_stream(args.input).points
    elif args.spec:
        X, _ = build_stream(_load_spec(args.spec), rng)
    else:
        raise CliError("verify needs an input CSV or --spec")
    horizon = 2 ** max(4, math.ceil(math.log2(len(X) + 1)))
    cfg = _coreset_config(args, horizon)
    probes = np.unique(np.linspace(1, len(X), min(args.probes, len(X))).round().astype(int))
    lo, hi = X.min(axis=0), X.max(axis=0)
    centers = [rng.uniform(lo, hi, size=(args.k, X.shape[1])) for _ in range(args.center_sets)]
    err = measure_online_coreset_error(X, cfg, probes, centers, rng)
    print(f"max relative error: {err:.6g}")
    return 0


# ------------------------------------------------------------------ parser
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (printed to stderr when omitted)")
    common.add_argument("--out", default=None, help="output path (default: stdout)")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--k", type=int, default=3)
    model.add_argument("--z", type=int, default=2)
    model.add_argument("--epsilon", type=float, default=0.5)
    model.add_argument("--delta", type=float, default=0.1)
    model.add_argument("--metric", choices=METRICS, default="euclidean")
    model.add_argument("--aspect-bound", type=float, default=2.0**40)
    model.add_argument("--budget", "--target-samples", dest="target_samples", type=float, default=500.0,
                       help="target sample count replacing the theoretical oversampling factor")
    model.add_argument("--exact", action="store_true", help="keep every point (lossless testing mode)")
    model.add_argument("--theory-constants", action="store_true",
                       help="use the full bicriteria capacity and repetition count")

    p = argparse.ArgumentParser(prog="swcoreset", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a stream CSV from a dataset spec")
    g.add_argument("--spec", required=True, help="DatasetSpec JSON file, or 'outlier_synth'")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("coreset", parents=[common, model],
                       help="stream a CSV through the sliding-window structure and dump a weighted coreset")
    c.add_argument("input", help="stream CSV, '-' for stdin, or 'dump' to read --snapshot")
    c.add_argument("--window", type=int, default=None)
    c.add_argument("--horizon", type=int, default=2**20)
    c.add_argument("--max-window", type=int, default=None)
    c.add_argument("--block-size", type=int, default=None)
    c.add_argument("--snapshot", default=None, help="JSON state file to write (or read with 'dump')")
    c.set_defaults(func=cmd_coreset)

    s = sub.add_parser("solve", parents=[common], help="weighted k-means on a weighted CSV")
    s.add_argument("input")
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--z", type=int, choices=(1, 2), default=2)
    s.add_argument("--metric", choices=METRICS, default="euclidean")
    s.add_argument("--iterations", type=int, default=10)
    s.add_argument("--restarts", type=int, default=1)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", parents=[common], help="run an experiment grid from a JSON config")
    b.add_argument("--spec", required=True, help="ExperimentConfig JSON file")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--summary", default=None, help="JSON summary path")
    b.set_defaults(func=cmd_bench)

    lb = sub.add_parser("lowerbound", parents=[common], help="minimum target_samples per instance count")
    lb.add_argument("--d-prime", type=int, default=20)
    lb.add_argument("--tau", type=int, default=5)
    lb.add_argument("--gammas", type=int, nargs="+", default=[1, 2, 3, 4])
    lb.add_argument("--seeds", type=int, default=5)
    lb.add_argument("--k", type=int, default=2)
    lb.add_argument("--tolerance", type=float, default=0.2)
    lb.add_argument("--max-target", type=int, default=4096)
    lb.set_defaults(func=cmd_lowerbound)

    v = sub.add_parser("verify", parents=[common, model], help="max prefix error of the online coreset")
    v.add_argument("input", nargs="?", default=None, help="stream CSV")
    v.add_argument("--spec", default=None, help="DatasetSpec JSON instead of an input CSV")
    v.add_argument("--probes", type=int, default=20)
    v.add_argument("--center-sets", type=int, default=20)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (CliError, ValueError, OSError, RuntimeError) as exc:
        print(f"swcoreset {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
