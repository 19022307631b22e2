"""Density-estimator percentiles and sqrt(n)-scaled corner-to-corner DBD.

    python scripts/convergence.py --ns 50,200,1000,5000 --trials 50 --out convergence.json
"""

import argparse
import logging

from graphdbd.experiments import run_convergence_experiment
from graphdbd.metric import MetricParams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ns", default="50,200,1000,5000")
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--q", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO)

    ns = [int(v) for v in args.ns.split(",")]
    rep = run_convergence_experiment(ns, args.trials, MetricParams(args.p, args.q), args.seed)
    print(f"{'n':>6} {'f25':>7} {'f50':>7} {'f75':>7} {'mean':>8} {'std':>8}")
    for row in rep.summary:
        print(f"{row['n']:>6} {row['density_p25']:7.3f} {row['density_p50']:7.3f} {row['density_p75']:7.3f} "
              f"{row['scaled_dbd_mean']:8.4f} {row['scaled_dbd_std']:8.4f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(rep.to_json())


if __name__ == "__main__":
    main()
