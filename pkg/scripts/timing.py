"""Dijkstra* against k-NN graph + Dijkstra on uniform data in [0,1]^d.

    python scripts/timing.py --n 50000 --d 10 --ks 15,30,100 --goals 100 --trials 3
"""

import argparse
import logging

from graphdbd.data import gen_uniform_square
from graphdbd.experiments import run_timing_experiment
from graphdbd.metric import MetricParams
from graphdbd.search import build_knn_graph, dijkstra_knn, dijkstra_star


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=50000)
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--ks", default="15,30,100")
    ap.add_argument("--goals", type=int, default=100)
    ap.add_argument("--trials", type=int, default=3)
    ap.add_argument("--q", type=float, default=8.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO)

    params = MetricParams(2.0, args.q)
    # compile once so the first trial is not charged for it
    warm = gen_uniform_square(300, args.d, 0)
    dijkstra_star(warm, [0], params)
    dijkstra_knn(build_knn_graph(warm, 5, params), [0])

    pts = gen_uniform_square(args.n, args.d, args.seed)
    rep = run_timing_experiment(pts, [int(k) for k in args.ks.split(",")], args.goals, args.trials, params, args.seed)
    star = rep.summary[0]["total_s_median"]
    print(f"{'engine':>8} {'k':>4} {'build':>8} {'search':>8} {'total':>8} {'ratio':>6} {'unreach':>8}")
    for row in rep.summary:
        print(f"{row['engine']:>8} {row['k']:>4} {row['build_s_median']:8.2f} {row['search_s_median']:8.2f} "
              f"{row['total_s_median']:8.2f} {row['total_s_median'] / star:6.2f} {row['unreachable_mean']:8.1f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(rep.to_json())


if __name__ == "__main__":
    main()
