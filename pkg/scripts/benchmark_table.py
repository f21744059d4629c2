"""Coverage / width / IAE table over all test functions and regularities.

Writes one per-run CSV and one summary CSV per function into --outdir, then
prints the combined summary. Full size (40 reps, 6 functions, 3 p values)
takes a while on one core; use --reps and --functions for a quick look.

    python3 scripts/benchmark_table.py --outdir results/benchmark --reps 40 --jobs 4
"""
import argparse
import csv
from pathlib import Path

from gpconformal.experiments import ExperimentConfig, run_benchmark
from gpconformal.testbed import FUNCTIONS


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--outdir", default="results/benchmark")
    ap.add_argument("--functions", default=",".join(FUNCTIONS))
    ap.add_argument("--p", default="1,5,9")
    ap.add_argument("--reps", type=int, default=40)
    ap.add_argument("--alpha", type=float, default=0.9)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for name in args.functions.split(","):
        cfg = ExperimentConfig(
            function=name,
            p_values=tuple(int(p) for p in args.p.split(",")),
            repetitions=args.reps,
            alpha=args.alpha,
            base_seed=args.seed,
        )
        rows += run_benchmark(cfg, outdir / f"{name}.csv", jobs=args.jobs)

    with open(outdir / "table.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    print(f"{'function':>16} {'p':>2} {'method':>14} {'coverage':>8} {'width':>10} {'iae':>6}")
    for r in sorted(rows, key=lambda r: (r["function"], r["p"], r["method"])):
        print(f"{r['function']:>16} {r['p']:>2} {r['method']:>14} {r['coverage']:8.3f} {r['mean_width']:10.4g} {r['iae']:6.3f}")


if __name__ == "__main__":
    main()
