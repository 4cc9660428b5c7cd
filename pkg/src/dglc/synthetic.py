"""Small seeded graph datasets for tests, demos and benchmarks.

``motif_dataset`` mimics a two-class molecule set: class 0 graphs are built
around rings, class 1 graphs are trees carrying a distinctive labelled
branch. Both share a noisy background of carbon-like nodes.
"""

from __future__ import annotations

import numpy as np

from .graph import Graph, GraphDataset


def _ring(start, size):
    return [(start + i, start + (i + 1) % size) for i in range(size)]


def _random_tree_edges(rng, nodes):
    return [(nodes[i], nodes[int(rng.integers(i))]) for i in range(1, len(nodes))]


def _ring_graph(rng):
    rings = int(rng.integers(1, 3))
    edges, labels, n = [], [], 0
    for r in range(rings):
        size = 6 if rng.random() < 0.8 else 5
        edges += _ring(n, size)
        if r > 0:
            edges.append((n - 1, n))
        labels += [0] * size
        n += size
    tail = int(rng.integers(1, 6))
    for i in range(tail):
        edges.append((int(rng.integers(n)), n))
        labels.append(1 if rng.random() < 0.3 else 0)
        n += 1
    return n, edges, labels


def _branch_graph(rng):
    n = int(rng.integers(8, 18))
    nodes = list(range(n))
    edges = _random_tree_edges(rng, nodes)
    labels = [0 if rng.random() < 0.75 else 1 for _ in nodes]
    anchors = rng.choice(n, size=int(rng.integers(1, 3)), replace=False)
    for a in anchors:
        hub = n
        edges += [(int(a), hub), (hub, hub + 1), (hub, hub + 2)]
        labels += [2, 3, 3]
        n += 3
    return n, edges, labels


def motif_dataset(n_graphs: int = 120, seed: int = 0, name: str = "SYNTH", noise: float = 0.0) -> GraphDataset:
    """Balanced two-class dataset; ``noise`` is the fraction of flipped class labels."""
    rng = np.random.default_rng(seed)
    graphs, ys = [], []
    for i in range(n_graphs):
        y = i % 2
        n, edges, labels = (_ring_graph if y == 0 else _branch_graph)(rng)
        perm = rng.permutation(n)
        g = Graph(n, perm[np.asarray(edges)], np.asarray(labels)[np.argsort(perm)])
        graphs.append(g)
        ys.append(y if rng.random() >= noise else 1 - y)
    return GraphDataset(graphs, np.asarray(ys), name=name)


def random_graph(rng, n: int, p: float = 0.3, num_labels: int = 3) -> Graph:
    """Erdos-Renyi graph with uniform random node labels."""
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return Graph(n, np.stack([iu[keep], ju[keep]], axis=1), rng.integers(num_labels, size=n))
