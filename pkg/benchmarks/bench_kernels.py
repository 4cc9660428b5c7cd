"""Time each hot kernel on its numba and pure-numpy paths.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Inputs are sized like one training batch (128 molecule-sized graphs) or one
MUTAG-sized Gram matrix. Numba compile time is excluded by a warm-up call.
"""

import argparse
import time

import numpy as np

from dglc import kernels
from dglc.encoder import make_batch
from dglc.graph import build_features
from dglc.synthetic import motif_dataset


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(rng):
    ds = motif_dataset(128, seed=0)
    batch = make_batch(ds.graphs, build_features(ds))
    h = rng.normal(size=(batch.num_nodes, 64))
    g = ds.graphs[0]
    indptr, indices = g.csr()
    gram = rng.normal(size=(188, 188))
    gram = gram @ gram.T
    x, centers = rng.normal(size=(2000, 16)), rng.normal(size=(6, 16))
    return {
        "self_neighbor_sum": ("csr_self_neighbor_sum", (batch.indptr, batch.indices, h)),
        "segment_sum": ("segment_sum", (h, batch.segment_ids, batch.num_graphs)),
        "bfs_all_pairs": ("bfs_all_pairs", (indptr, indices, g.node_count)),
        "jacobi_eigh 188x188": ("jacobi_eigh", (gram, 1e-13, 100)),
        "nearest_center": ("nearest_center", (x, centers)),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>10}")
    for label, (base, inputs) in cases(rng).items():
        fast = getattr(kernels, f"{base}_numba")
        slow = getattr(kernels, f"{base}_numpy")
        repeat = 1 if base == "jacobi_eigh" else args.repeat
        t_fast = best_of(lambda: fast(*inputs), repeat)
        t_slow = best_of(lambda: slow(*inputs), repeat)
        print(f"{label:<22}{1e3 * t_fast:>12.3f}{1e3 * t_slow:>12.3f}{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
