"""Backward-cluster sizes in DSMC against the geometric law exp(-t) (1 - exp(-t))^n.

    python3 scripts/backward_clusters.py --N 100000 --replicas 8 --t 1.0
"""

import argparse
import math

import numpy as np

from clusterkin.analytics import backward_cluster_law
from clusterkin.clusters import backward_size_histogram
from clusterkin.dsmc import DsmcConfig, replica_seeds, run_dsmc


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--N", type=int, default=100_000)
    parser.add_argument("--replicas", type=int, default=8)
    parser.add_argument("--t", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=2014)
    parser.add_argument("--n-max", type=int, default=10)
    args = parser.parse_args()

    hists = []
    for seed in replica_seeds(args.seed, args.replicas):
        log, _ = run_dsmc(DsmcConfig(N=args.N, seed=seed, t_end=args.t))
        hists.append(backward_size_histogram(log, args.N, args.t))

    print("  n   empirical            law        z")
    for n in range(args.n_max + 1):
        p = np.array([h.get(n + 1, 0.0) for h in hists])
        se = p.std(ddof=1) / math.sqrt(len(p)) if len(p) > 1 else 0.0
        law = backward_cluster_law(n, args.t)
        z = (p.mean() - law) / se if se > 0 else float("nan")
        print(f"{n:3d}   {p.mean():.5f} +- {se:.5f}   {law:.5f}   {z:6.2f}")


if __name__ == "__main__":
    main()
