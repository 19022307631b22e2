"""Two noisy bars, one seed each: 1-NN error of DBD against plain distance,
plus the two-arc routing contrast with ISOMAP."""

import argparse

import numpy as np

from graphdbd.classify import error_rate, predict_1nn_dbd
from graphdbd.data import gen_two_arcs, gen_two_clusters
from graphdbd.metric import MetricParams
from graphdbd.search import dijkstra_star, isomap_distances, reconstruct_path


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--separation", type=float, default=1.0)
    args = ap.parse_args()

    rows = []
    for seed in range(args.seeds):
        ds = gen_two_clusters(args.n, args.separation, seed=seed)
        errs = [error_rate(predict_1nn_dbd(ds, MetricParams(2, q)), ds.truth) for q in (1, 2, 4, 8)]
        errs.append(error_rate(predict_1nn_dbd(ds, engine="euclid"), ds.truth))
        rows.append(errs)
    mean = np.mean(rows, axis=0)
    print("mean 1-NN error over", args.seeds, "seeds")
    for name, e in zip(["q=1", "q=2", "q=4", "q=8", "euclid"], mean):
        print(f"  {name:>7}: {e:.3f}")

    pts, dense, sparse = gen_two_arcs()
    dbd = reconstruct_path(dijkstra_star(pts, [0], MetricParams(2, 8)), 1)
    iso = reconstruct_path(isomap_distances(pts, [0], 3), 1)
    print(f"two arcs: DBD path uses {np.isin(dbd, dense).sum()} dense-arc points, "
          f"ISOMAP path uses {np.isin(iso, sparse).sum()} sparse-arc points")


if __name__ == "__main__":
    main()
