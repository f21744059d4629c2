"""Per-repetition coverage at level alpha, grouped by method and regularity.

Writes a long-format CSV (method, p, repetition, coverage) ready for a
boxplot, and prints quartiles.

    python3 scripts/coverage_boxplot.py --function goldstein_price --p 1,3,5,7,9
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from gpconformal.experiments import ExperimentConfig, run_records


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--function", default="goldstein_price")
    ap.add_argument("--p", default="1,3,5,7,9")
    ap.add_argument("--reps", type=int, default=40)
    ap.add_argument("--alpha", type=float, default=0.9)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/coverage.csv")
    args = ap.parse_args()

    cfg = ExperimentConfig(
        function=args.function,
        p_values=tuple(int(p) for p in args.p.split(",")),
        repetitions=args.reps,
        alpha=args.alpha,
    )
    records = [r for r in run_records(cfg, args.jobs) if not r.failed]
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "p", "repetition", "coverage"])
        for r in records:
            w.writerow([r.method, r.p, r.repetition, "%.17g" % r.coverage])

    for p in cfg.p_values:
        for method in cfg.methods:
            cov = [r.coverage for r in records if r.p == p and r.method == method]
            q1, q2, q3 = np.percentile(cov, [25, 50, 75])
            print(f"p={p} {method:>14}: q1={q1:.3f} median={q2:.3f} q3={q3:.3f}")


if __name__ == "__main__":
    main()
