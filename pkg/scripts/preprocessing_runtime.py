"""Time layout sampling plus feature extraction on a MUTAG-sized workload.

Uses 188 synthetic graphs (n = 18, m = 20) unless --input points at a real
TUDataset directory. Reports wall time per thread count.

    python3 scripts/preprocessing_runtime.py --layouts 8 --threads 1 2 4
"""

import argparse
import time

import numpy as np

from dellayout.features import feature_tensors
from dellayout.graph import load_dataset, random_sparse_graph
from dellayout.layout import ALGORITHMS, LayoutParams
from dellayout.sampler import SampleConfig, sample_dataset


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--input", default=None, help="TUDataset directory (default: synthetic)")
    p.add_argument("--graphs", type=int, default=188)
    p.add_argument("--layouts", type=int, default=8)
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--algo", choices=ALGORITHMS, default="fr")
    p.add_argument("--threads", type=int, nargs="+", default=[1])
    args = p.parse_args()

    if args.input:
        graphs = list(load_dataset(args.input))
    else:
        rng = np.random.default_rng(0)
        graphs = [random_sparse_graph(18, 20, rng, f"syn#{i}") for i in range(args.graphs)]
    params = LayoutParams(algorithm=args.algo, iterations=args.iterations)
    print(f"{len(graphs)} graphs, mean n {np.mean([g.n for g in graphs]):.1f}, "
          f"mean m {np.mean([g.m for g in graphs]):.1f}, k={args.layouts}, algo {args.algo}")
    for threads in args.threads:
        cfg = SampleConfig(args.layouts, 0, params, threads)
        start = time.perf_counter()
        tensors = feature_tensors(sample_dataset(graphs, cfg), graphs)
        elapsed = time.perf_counter() - start
        print(f"  threads {threads:2d}: {elapsed:.2f} s ({len(tensors)} tensors)")


if __name__ == "__main__":
    main()
