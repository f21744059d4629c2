"""IAE versus RMSE scatter for random hyperparameters around the REML fit.

    python3 scripts/pareto.py --out results/pareto.csv

The output has one row per hyperparameter draw plus a ``reml`` and a
``jplus_gp`` row; plot iae_* against rmse_* to get the two panels.
"""
import argparse
from pathlib import Path

import numpy as np

from gpconformal.experiments import ParetoConfig, run_pareto


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--function", default="goldstein_price")
    ap.add_argument("--n-train", type=int, default=150)
    ap.add_argument("--n-test", type=int, default=1500)
    ap.add_argument("--n-samples", type=int, default=200)
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/pareto.csv")
    args = ap.parse_args()

    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    cfg = ParetoConfig(args.function, args.n_train, args.n_test, args.n_samples, args.seed, args.p)
    res = run_pareto(cfg, args.out)
    samples = res.of_kind("sample")
    for row in res.of_kind("reml") + res.of_kind("jplus_gp"):
        print(f"{row.kind:>9}: rmse_test={row.rmse_test:.4g} iae_test={row.iae_test:.3f} iae_loo={row.iae_loo:.3f}")
    if samples:
        print(f"draws: {len(samples)} ok, {res.n_skipped} skipped, min iae_test {np.min([s.iae_test for s in samples]):.3f}")


if __name__ == "__main__":
    main()
