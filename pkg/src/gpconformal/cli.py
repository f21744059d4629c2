"""Command-line entry point: ``gpconformal bench ...`` and ``gpconformal pareto ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import DomainError
from .experiments import (
    BenchmarkAborted,
    ExperimentConfig,
    ParetoConfig,
    run_benchmark,
    run_pareto,
    summary_path,
)

log = logging.getLogger("gpconformal")


def _int_list(text):
    return tuple(int(v) for v in text.split(",") if v)


def _str_list(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpconformal", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    # defaults are None so that a config file can supply them
    b = sub.add_parser("bench", help="coverage / width / IAE benchmark on a test function")
    b.add_argument("--config", help="JSON file with ExperimentConfig fields")
    b.add_argument("--function")
    b.add_argument("--p", type=_int_list, dest="p_values", help="comma-separated regularities")
    b.add_argument("--reps", type=int, dest="repetitions")
    b.add_argument("--alpha", type=float)
    b.add_argument("--beta", type=float)
    b.add_argument("--methods", type=_str_list)
    b.add_argument("--seed", type=int, dest="base_seed")
    b.add_argument("--n-train", type=int, dest="n_train")
    b.add_argument("--n-test", type=int, dest="n_test")
    b.add_argument("--iae-grid-size", type=int, dest="iae_grid_size")
    b.add_argument("--n-starts", type=int, dest="n_starts")
    b.add_argument("--timing", action="store_true", default=None, help="record wall times (breaks byte-identical output)")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", required=True)
    b.add_argument("--format", choices=("csv", "json"), default="csv")

    pa = sub.add_parser("pareto", help="IAE versus RMSE scatter over random hyperparameters")
    pa.add_argument("--function", default="goldstein_price")
    pa.add_argument("--n-train", type=int, default=150)
    pa.add_argument("--n-test", type=int, default=1500)
    pa.add_argument("--n-samples", type=int, default=200)
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("--p", type=int, default=2)
    pa.add_argument("--out", required=True)
    return parser


_BENCH_KEYS = (
    "function",
    "p_values",
    "repetitions",
    "alpha",
    "beta",
    "methods",
    "base_seed",
    "n_train",
    "n_test",
    "iae_grid_size",
    "n_starts",
    "timing",
)


def bench_config(args) -> ExperimentConfig:
    values = {}
    if args.config:
        with open(args.config) as fh:
            values.update(json.load(fh))
    for key in _BENCH_KEYS:
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    return ExperimentConfig.from_dict(values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "bench":
            config = bench_config(args)
            summary = run_benchmark(config, args.out, args.format, jobs=args.jobs)
            for row in summary:
                print(
                    f"{row['function']:>16} {row['method']:>14} p={row['p']:<2d} "
                    f"cov={row['coverage']:.3f} width={row['mean_width']:.4g} "
                    f"iae={row['iae']:.3f} rmse={row['rmse']:.4g} failed={row['n_failed']}"
                )
            log.info("summary written to %s", summary_path(args.out))
        else:
            config = ParetoConfig(
                function=args.function,
                n_train=args.n_train,
                n_test=args.n_test,
                n_samples=args.n_samples,
                seed=args.seed,
                p=args.p,
            )
            result = run_pareto(config, args.out)
            for row in result.rows[:2]:
                print(
                    f"{row.kind:>9} rmse_loo={row.rmse_loo:.4g} iae_loo={row.iae_loo:.3f} "
                    f"rmse_test={row.rmse_test:.4g} iae_test={row.iae_test:.3f}"
                )
            print(f"{len(result.rows) - 2} sampled rows, {result.n_skipped} skipped")
    except (DomainError, BenchmarkAborted, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"gpconformal: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
