"""Graph containers, TUDataset flat-file I/O and one-hot node features."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DatasetFormatError(ValueError):
    """Raised when TUDataset files are missing or inconsistent."""


def _canonical_edges(edges) -> np.ndarray:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(e) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    e = np.sort(e, axis=1)
    e = e[e[:, 0] != e[:, 1]]
    if len(e) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    return np.unique(e, axis=0)


@dataclass(eq=False)
class Graph:
    """Undirected simple graph with optional integer node labels.

    ``edges`` holds each undirected edge once as a row ``(u, v)`` with
    ``u < v``, rows in lexicographic order. Self-loops are dropped.
    """

    node_count: int
    edges: np.ndarray
    node_labels: np.ndarray | None = None
    _csr: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        self.node_count = int(self.node_count)
        self.edges = _canonical_edges(self.edges)
        if len(self.edges) and (self.edges.min() < 0 or self.edges.max() >= self.node_count):
            raise ValueError("edge endpoint outside [0, node_count)")
        if self.node_labels is not None:
            self.node_labels = np.asarray(self.node_labels, dtype=np.int64)
            if self.node_labels.shape != (self.node_count,):
                raise ValueError("node_labels must have one entry per node")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Symmetric adjacency as ``(indptr, indices)`` with sorted neighbour lists."""
        if self._csr is None:
            src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
            dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
            order = np.lexsort((dst, src))
            src, dst = src[order], dst[order]
            indptr = np.zeros(self.node_count + 1, dtype=np.int64)
            np.add.at(indptr, src + 1, 1)
            self._csr = (np.cumsum(indptr), np.ascontiguousarray(dst, dtype=np.int64))
        return self._csr

    def degrees(self) -> np.ndarray:
        indptr, _ = self.csr()
        return np.diff(indptr)

    def same_as(self, other: "Graph") -> bool:
        if self.node_count != other.node_count or not np.array_equal(self.edges, other.edges):
            return False
        if (self.node_labels is None) != (other.node_labels is None):
            return False
        return self.node_labels is None or np.array_equal(self.node_labels, other.node_labels)


@dataclass(eq=False)
class GraphDataset:
    graphs: list[Graph]
    graph_labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        self.graph_labels = np.asarray(self.graph_labels, dtype=np.int64)
        if len(self.graph_labels) != len(self.graphs):
            raise ValueError("graph_labels length must equal the number of graphs")

    def __len__(self):
        return len(self.graphs)

    @property
    def num_classes(self) -> int:
        return int(len(np.unique(self.graph_labels)))

    @property
    def has_node_labels(self) -> bool:
        return bool(self.graphs) and all(g.node_labels is not None for g in self.graphs)

    def stats(self) -> dict:
        nodes = np.array([g.node_count for g in self.graphs])
        edges = np.array([g.edge_count for g in self.graphs])
        return {
            "name": self.name,
            "graphs": len(self.graphs),
            "classes": self.num_classes,
            "mean_nodes": float(nodes.mean()) if len(nodes) else 0.0,
            "min_nodes": int(nodes.min()) if len(nodes) else 0,
            "max_nodes": int(nodes.max()) if len(nodes) else 0,
            "mean_edges": float(edges.mean()) if len(edges) else 0.0,
        }

    def same_as(self, other: "GraphDataset") -> bool:
        return (
            self.name == other.name
            and len(self) == len(other)
            and np.array_equal(self.graph_labels, other.graph_labels)
            and all(a.same_as(b) for a, b in zip(self.graphs, other.graphs))
        )


# ---------------------------------------------------------------------------
# TUDataset flat files
# ---------------------------------------------------------------------------


def _file_prefix(directory: Path, name: str) -> str:
    for candidate in (name, name.replace("-", "_"), name.replace("_", "-")):
        if (directory / f"{candidate}_A.txt").exists():
            return candidate
    return name


def _read_ints(path: Path, ncols: int | None = None) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = [p for p in line.replace(",", " ").split() if p]
            try:
                vals = [int(float(p)) for p in parts]
            except ValueError:
                raise DatasetFormatError(f"{path.name}:{lineno}: not an integer row: {line!r}") from None
            if ncols is not None and len(vals) != ncols:
                raise DatasetFormatError(f"{path.name}:{lineno}: expected {ncols} values, got {len(vals)}")
            rows.append(vals if ncols and ncols > 1 else vals[0])
    if ncols and ncols > 1:
        return np.asarray(rows, dtype=np.int64).reshape(-1, ncols)
    return np.asarray(rows, dtype=np.int64)


def parse_tudataset(directory, name: str) -> GraphDataset:
    """Read ``{name}_A.txt``, ``_graph_indicator.txt``, ``_graph_labels.txt``
    (and ``_node_labels.txt`` if present) from ``directory``.

    Nodes are renumbered 0-based within each graph and graph labels are
    remapped to ``0..c-1`` in sorted order of the raw values.
    """
    directory = Path(directory)
    if (directory / name).is_dir() and not (directory / f"{name}_A.txt").exists():
        directory = directory / name
    prefix = _file_prefix(directory, name)
    paths = {
        key: directory / f"{prefix}_{key}.txt" for key in ("A", "graph_indicator", "graph_labels", "node_labels")
    }
    for key in ("A", "graph_indicator", "graph_labels"):
        if not paths[key].exists():
            raise DatasetFormatError(f"missing required file {paths[key]}")

    indicator = _read_ints(paths["graph_indicator"])
    raw_labels = _read_ints(paths["graph_labels"])
    edges = _read_ints(paths["A"], ncols=2)
    node_labels = _read_ints(paths["node_labels"]) if paths["node_labels"].exists() else None

    n_nodes = len(indicator)
    n_graphs = len(raw_labels)
    if n_nodes == 0 or n_graphs == 0:
        raise DatasetFormatError("empty graph indicator or graph label file")
    if indicator[0] != 1 or np.any(np.diff(indicator) < 0) or np.any(np.diff(indicator) > 1):
        raise DatasetFormatError("graph indicator must start at 1 and be contiguous and non-decreasing")
    if indicator[-1] != n_graphs:
        raise DatasetFormatError(
            f"graph indicator names {indicator[-1]} graphs but {n_graphs} graph labels were given"
        )
    if node_labels is not None and len(node_labels) != n_nodes:
        raise DatasetFormatError("node label count does not match graph indicator length")
    if len(edges) and (edges.min() < 1 or edges.max() > n_nodes):
        bad = edges[(edges < 1).any(axis=1) | (edges > n_nodes).any(axis=1)][0]
        raise DatasetFormatError(f"edge {tuple(bad)} references a nonexistent node (have {n_nodes})")

    edges = edges - 1
    gid = indicator - 1
    if len(edges) and np.any(gid[edges[:, 0]] != gid[edges[:, 1]]):
        raise DatasetFormatError("edge connects nodes of different graphs")

    starts = np.searchsorted(gid, np.arange(n_graphs), side="left")
    ends = np.searchsorted(gid, np.arange(n_graphs), side="right")
    edge_gid = gid[edges[:, 0]] if len(edges) else np.zeros(0, dtype=np.int64)
    order = np.argsort(edge_gid, kind="stable")
    edges, edge_gid = edges[order], edge_gid[order]
    e_starts = np.searchsorted(edge_gid, np.arange(n_graphs), side="left")
    e_ends = np.searchsorted(edge_gid, np.arange(n_graphs), side="right")

    graphs = []
    for g in range(n_graphs):
        lo, hi = starts[g], ends[g]
        local = edges[e_starts[g] : e_ends[g]] - lo
        labels = node_labels[lo:hi] if node_labels is not None else None
        graphs.append(Graph(int(hi - lo), local, labels))

    _, remapped = np.unique(raw_labels, return_inverse=True)
    return GraphDataset(graphs, remapped.reshape(-1), name=name)


def write_tudataset(dataset: GraphDataset, directory) -> Path:
    """Write ``dataset`` in TUDataset layout; both edge directions are listed."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    name = dataset.name
    offset = 0
    with open(directory / f"{name}_A.txt", "w") as fa, open(directory / f"{name}_graph_indicator.txt", "w") as fi:
        for gid, g in enumerate(dataset.graphs, 1):
            rows = np.concatenate([g.edges, g.edges[:, ::-1]]) + offset + 1
            rows = rows[np.lexsort((rows[:, 1], rows[:, 0]))]
            for u, v in rows:
                fa.write(f"{u}, {v}\n")
            fi.write(f"{gid}\n" * g.node_count)
            offset += g.node_count
    with open(directory / f"{name}_graph_labels.txt", "w") as fl:
        fl.writelines(f"{int(y)}\n" for y in dataset.graph_labels)
    if dataset.has_node_labels:
        with open(directory / f"{name}_node_labels.txt", "w") as fn:
            for g in dataset.graphs:
                fn.writelines(f"{int(x)}\n" for x in g.node_labels)
    return directory


def find_dataset_dir(name: str, data_dir=None) -> Path:
    """Resolve where ``name`` lives: ``data_dir``, ``$DGLC_DATA_DIR`` or ``./data``."""
    base = Path(data_dir or os.environ.get("DGLC_DATA_DIR") or "data")
    for candidate in (base / name, base / name.replace("-", "_"), base):
        if candidate.is_dir() and (candidate / f"{_file_prefix(candidate, name)}_A.txt").exists():
            return candidate
    raise FileNotFoundError(f"dataset {name!r} not found under {base}")


def load_dataset(name: str, data_dir=None) -> GraphDataset:
    return parse_tudataset(find_dataset_dir(name, data_dir), name)


# ---------------------------------------------------------------------------
# node features
# ---------------------------------------------------------------------------


def build_features(dataset: GraphDataset) -> list[np.ndarray]:
    """One-hot node features for every graph.

    Uses the dataset-wide set of node labels when every graph carries labels,
    otherwise a one-hot of node degree (width = max degree + 1).
    """
    if dataset.has_node_labels:
        alphabet = np.unique(np.concatenate([g.node_labels for g in dataset.graphs]))
        dim = len(alphabet)
        codes = [np.searchsorted(alphabet, g.node_labels) for g in dataset.graphs]
    else:
        degs = [g.degrees() for g in dataset.graphs]
        dim = int(max((d.max() if len(d) else 0) for d in degs)) + 1 if degs else 1
        codes = degs
    feats = []
    for g, c in zip(dataset.graphs, codes):
        x = np.zeros((g.node_count, dim))
        x[np.arange(g.node_count), c] = 1.0
        feats.append(x)
    return feats


def permute_graph(graph: Graph, features: np.ndarray, perm) -> tuple[Graph, np.ndarray]:
    """Relabel nodes so that old node ``v`` becomes ``perm[v]``."""
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (graph.node_count,):
        raise ValueError(f"permutation has length {len(perm)}, graph has {graph.node_count} nodes")
    if not np.array_equal(np.sort(perm), np.arange(graph.node_count)):
        raise ValueError("perm is not a bijection on node indices")
    new_feats = np.empty_like(features)
    new_feats[perm] = features
    labels = None
    if graph.node_labels is not None:
        labels = np.empty_like(graph.node_labels)
        labels[perm] = graph.node_labels
    return Graph(graph.node_count, perm[graph.edges], labels), new_feats
