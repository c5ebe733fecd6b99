"""How quickly does FR energy drop below the random-initialisation energy?

Samples random sparse graphs (m ~ 1.2 n), runs FR from a uniform start and
reports, per iteration, the fraction of runs already below their initial
energy, plus the mean energy curve of a dense (K8) batch for contrast.

    python3 scripts/energy_descent.py --graphs 100 --iterations 50 --out descent.csv
"""

import argparse
import csv
import time

import numpy as np

from dellayout.analysis import energy_curve
from dellayout.graph import complete_graph, random_sparse_graph
from dellayout.layout import LayoutParams, fr_layout
from dellayout.sampler import SampleConfig


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--graphs", type=int, default=100)
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="optional CSV of per-iteration statistics")
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    params = LayoutParams(iterations=args.iterations)
    start = time.perf_counter()
    traces = []
    for i in range(args.graphs):
        n = int(rng.integers(10, 31))
        g = random_sparse_graph(n, round(1.2 * n), rng, f"sparse#{i}")
        traces.append(fr_layout(g, params, seed=args.seed * 1_000_003 + i)[1].values)
    traces = np.array(traces)
    below = (np.minimum.accumulate(traces, axis=1) < traces[:, :1]).mean(axis=0)
    sparse_curve = traces.mean(axis=0)
    dense = [complete_graph(8, f"k8#{i}") for i in range(20)]
    dense_curve = energy_curve(dense, SampleConfig(layouts_per_graph=4, base_seed=args.seed, layout_params=params),
                               args.iterations)
    elapsed = time.perf_counter() - start

    first = int(np.argmax(below >= 0.95)) if (below >= 0.95).any() else None
    print(f"{args.graphs} sparse graphs, {args.iterations} iterations, {elapsed:.2f} s")
    print(f"  95% of runs below initial energy by iteration {first}")
    print(f"  trace[N] < trace[0] in {(traces[:, -1] < traces[:, 0]).mean():.0%} of runs")
    print(f"  mean sparse curve: {sparse_curve[0]:.3f} -> {sparse_curve[-1]:.3f}")
    print(f"  mean K8 curve:     {dense_curve[0]:.3f} -> {dense_curve[-1]:.3f}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "frac_below_init", "mean_sparse_energy", "mean_k8_energy"])
            for t in range(args.iterations + 1):
                w.writerow([t, below[t], repr(float(sparse_curve[t])), repr(float(dense_curve[t]))])


if __name__ == "__main__":
    main()
