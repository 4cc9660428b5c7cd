"""Graph kernels (Weisfeiler-Lehman subtree, shortest path), k-means and spectral clustering."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from . import kernels
from .graph import Graph


@dataclass
class GramMatrix:
    values: np.ndarray
    normalized: bool

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.values).min())

    def to_csv(self, path) -> Path:
        path = Path(path)
        np.savetxt(path, self.values, delimiter=",", fmt="%.12g")
        return path


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


class _Vocabulary:
    """Interns hashable keys into consecutive integer ids (collision-free)."""

    def __init__(self):
        self.ids = {}

    def __call__(self, key) -> int:
        idx = self.ids.get(key)
        if idx is None:
            idx = self.ids[key] = len(self.ids)
        return idx

    def __len__(self):
        return len(self.ids)


def _initial_labels(g: Graph):
    if g.node_labels is None:
        return [0] * g.node_count
    return [int(x) for x in g.node_labels]


def _sparse_histograms(rows, n_rows, n_cols):
    data, ri, ci = [], [], []
    for r, hist in enumerate(rows):
        for col, cnt in hist.items():
            ri.append(r)
            ci.append(col)
            data.append(cnt)
    return sparse.csr_matrix((np.asarray(data, dtype=np.float64), (ri, ci)), shape=(n_rows, max(n_cols, 1)))


def wl_features(graphs: list[Graph], iterations: int = 3):
    """Label-count histograms accumulated over WL iterations ``0..iterations``.

    At each iteration a node's new label is the interned pair (own label,
    sorted tuple of neighbour labels); ids never collide across iterations.
    """
    vocab = _Vocabulary()
    current = [_initial_labels(g) for g in graphs]
    hists = [dict() for _ in graphs]
    for it in range(iterations + 1):
        if it > 0:
            nxt = []
            for g, labels in zip(graphs, current):
                indptr, indices = g.csr()
                new = []
                for v in range(g.node_count):
                    neigh = tuple(sorted(labels[u] for u in indices[indptr[v] : indptr[v + 1]]))
                    new.append(vocab((it, labels[v], neigh)))
                nxt.append(new)
            current = nxt
        else:
            current = [[vocab((0, lab)) for lab in labels] for labels in current]
        for hist, labels in zip(hists, current):
            for lab in labels:
                hist[lab] = hist.get(lab, 0) + 1
    return _sparse_histograms(hists, len(graphs), len(vocab))


def sp_features(graphs: list[Graph]):
    """Histogram over (min label, max label, distance) for connected node pairs ``u < v``."""
    vocab = _Vocabulary()
    hists = []
    for g in graphs:
        hist = {}
        n = g.node_count
        if n > 1:
            indptr, indices = g.csr()
            dist = kernels.bfs_all_pairs(indptr, indices, n)
            labels = np.asarray(_initial_labels(g), dtype=np.int64)
            iu, ju = np.triu_indices(n, k=1)
            d = dist[iu, ju]
            keep = d > 0
            lo = np.minimum(labels[iu[keep]], labels[ju[keep]])
            hi = np.maximum(labels[iu[keep]], labels[ju[keep]])
            triples = np.stack([lo, hi, d[keep]], axis=1)
            if len(triples):
                uniq, counts = np.unique(triples, axis=0, return_counts=True)
                for key, cnt in zip(map(tuple, uniq.tolist()), counts.tolist()):
                    hist[vocab(key)] = cnt
        hists.append(hist)
    return _sparse_histograms(hists, len(graphs), len(vocab))


def cosine_normalize(k: np.ndarray) -> np.ndarray:
    """``k(x, y) / sqrt(k(x, x) k(y, y))``; an all-zero feature vector gets self-similarity 1."""
    diag = np.diag(k).copy()
    empty = diag <= 0
    inv = np.zeros_like(diag)
    inv[~empty] = 1.0 / np.sqrt(diag[~empty])
    out = k * inv[:, None] * inv[None, :]
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    return out


def _gram(features, normalize: bool) -> GramMatrix:
    k = (features @ features.T).toarray()
    if normalize:
        return GramMatrix(cosine_normalize(k), True)
    return GramMatrix(k, False)


def wl_kernel(graphs: list[Graph], iterations: int = 3, normalize: bool = True) -> GramMatrix:
    return _gram(wl_features(graphs, iterations), normalize)


def sp_kernel(graphs: list[Graph], normalize: bool = True) -> GramMatrix:
    return _gram(sp_features(graphs), normalize)


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    inertia_history: list


def kmeans_plusplus(x: np.ndarray, c: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    centers = [x[rng.integers(n)]]
    for _ in range(1, c):
        _, d2 = kernels.nearest_center(x, np.asarray(centers))
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(x[idx])
    return np.array(centers, dtype=np.float64)


def lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int = 300) -> KMeansResult:
    """Lloyd iterations until the assignment stops changing (or ``max_iter``).

    A cluster that loses all its points keeps its previous centroid.
    """
    centers = centers.copy()
    labels, d2 = kernels.nearest_center(x, centers)
    history = [float(d2.sum())]
    for _ in range(max_iter):
        for j in range(len(centers)):
            members = labels == j
            if members.any():
                centers[j] = x[members].mean(axis=0)
        new_labels, d2 = kernels.nearest_center(x, centers)
        history.append(float(d2.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return KMeansResult(labels, centers, history[-1], history)


def kmeans(x, c: int, seed: int = 0, restarts: int = 10, max_iter: int = 300) -> KMeansResult:
    """k-means++ seeding plus Lloyd iterations; best of ``restarts`` by inertia."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("kmeans expects an (n, d) matrix")
    if len(x) < c or c < 1:
        raise ValueError(f"kmeans needs at least c={c} points, got {len(x)}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        res = lloyd(x, kmeans_plusplus(x, c, rng), max_iter)
        if best is None or res.inertia < best.inertia:
            best = res
    return best


# ---------------------------------------------------------------------------
# spectral clustering
# ---------------------------------------------------------------------------


def jacobi_eigh(a, tol: float = 1e-13, max_sweeps: int = 100):
    """Eigenvalues (ascending) and eigenvectors of a symmetric matrix by cyclic Jacobi."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("jacobi_eigh expects a square matrix")
    w, v, _ = kernels.jacobi_eigh_raw(0.5 * (a + a.T), tol, max_sweeps)
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def spectral_embedding(s, c: int, eigensolver: str = "jacobi") -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    deg = s.sum(axis=1)
    inv = 1.0 / np.sqrt(deg)
    m = s * inv[:, None] * inv[None, :]
    if eigensolver == "jacobi":
        w, v = jacobi_eigh(m)
    elif eigensolver == "lapack":
        w, v = np.linalg.eigh(0.5 * (m + m.T))
    else:
        raise ValueError(f"unknown eigensolver {eigensolver!r}")
    top = np.argsort(-w, kind="stable")[:c]
    u = v[:, top]
    norms = np.linalg.norm(u, axis=1, keepdims=True)
    return np.divide(u, norms, out=np.zeros_like(u), where=norms > 0)


def spectral_clustering(s, c: int, seed: int = 0, eigensolver: str = "jacobi") -> np.ndarray:
    """Normalized spectral clustering on an affinity matrix.

    Negative entries are clipped to 0. Rows with zero degree are left out of
    the embedding and take the label of the nearest (Euclidean) non-zero row.
    """
    s = np.asarray(getattr(s, "values", s), dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("affinity must be square")
    s = np.clip(0.5 * (s + s.T), 0.0, None)
    deg = s.sum(axis=1)
    alive = np.flatnonzero(deg > 0)
    if len(alive) < c:
        raise ValueError(f"only {len(alive)} rows with nonzero degree for {c} clusters")
    sub = s[np.ix_(alive, alive)]
    emb = spectral_embedding(sub, c, eigensolver)
    labels = np.empty(len(s), dtype=np.int64)
    labels[alive] = kmeans(emb, c, seed=seed).labels
    dead = np.flatnonzero(deg <= 0)
    for i in dead:
        d = ((s[alive] - s[i]) ** 2).sum(axis=1)
        labels[i] = labels[alive[int(np.argmin(d))]]
    return labels
