"""Hot inner loops.

Every kernel exists twice: a ``*_numba`` version compiled with ``@njit`` and a
``*_numpy`` version built from vectorized numpy. The unsuffixed name dispatches
on :data:`dglc._accel.USE_NUMBA`. Both variants produce the same results
(bitwise for the integer kernels, to round-off for the float ones).
"""

import numpy as np

from . import _accel
from ._accel import njit

# ---------------------------------------------------------------------------
# neighbourhood sum:  out[v] = h[v] + sum_{u in N(v)} h[u]
# ---------------------------------------------------------------------------


@njit(cache=True)
def csr_self_neighbor_sum_numba(indptr, indices, h):
    n, d = h.shape
    out = np.empty_like(h)
    for v in range(n):
        for j in range(d):
            out[v, j] = h[v, j]
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            for j in range(d):
                out[v, j] += h[u, j]
    return out


def csr_self_neighbor_sum_numpy(indptr, indices, h):
    out = h.copy()
    counts = np.diff(indptr)
    dst = np.repeat(np.arange(len(counts)), counts)
    np.add.at(out, dst, h[indices])
    return out


def csr_self_neighbor_sum(indptr, indices, h):
    h = np.ascontiguousarray(h, dtype=np.float64)
    if _accel.USE_NUMBA:
        return csr_self_neighbor_sum_numba(indptr, indices, h)
    return csr_self_neighbor_sum_numpy(indptr, indices, h)


# ---------------------------------------------------------------------------
# segment sum over rows
# ---------------------------------------------------------------------------


@njit(cache=True)
def segment_sum_numba(values, segment_ids, num_segments):
    n, d = values.shape
    out = np.zeros((num_segments, d))
    for i in range(n):
        s = segment_ids[i]
        for j in range(d):
            out[s, j] += values[i, j]
    return out


def segment_sum_numpy(values, segment_ids, num_segments):
    out = np.zeros((num_segments, values.shape[1]))
    np.add.at(out, segment_ids, values)
    return out


def segment_sum(values, segment_ids, num_segments):
    values = np.ascontiguousarray(values, dtype=np.float64)
    segment_ids = np.ascontiguousarray(segment_ids, dtype=np.int64)
    if _accel.USE_NUMBA:
        return segment_sum_numba(values, segment_ids, num_segments)
    return segment_sum_numpy(values, segment_ids, num_segments)


# ---------------------------------------------------------------------------
# all-pairs unweighted shortest paths (-1 marks unreachable)
# ---------------------------------------------------------------------------


@njit(cache=True)
def bfs_all_pairs_numba(indptr, indices, n):
    dist = np.full((n, n), -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        dist[s, s] = 0
        head = 0
        tail = 0
        queue[tail] = s
        tail += 1
        while head < tail:
            v = queue[head]
            head += 1
            for e in range(indptr[v], indptr[v + 1]):
                u = indices[e]
                if dist[s, u] < 0:
                    dist[s, u] = dist[s, v] + 1
                    queue[tail] = u
                    tail += 1
    return dist


def bfs_all_pairs_numpy(indptr, indices, n):
    adj = np.zeros((n, n), dtype=bool)
    counts = np.diff(indptr)
    adj[np.repeat(np.arange(n), counts), indices] = True
    dist = np.full((n, n), -1, dtype=np.int64)
    frontier = np.eye(n, dtype=bool)
    visited = frontier.copy()
    dist[frontier] = 0
    level = 0
    while frontier.any():
        level += 1
        reached = (frontier.astype(np.int64) @ adj.astype(np.int64)) > 0
        frontier = reached & ~visited
        visited |= frontier
        dist[frontier] = level
    return dist


def bfs_all_pairs(indptr, indices, n):
    if _accel.USE_NUMBA:
        return bfs_all_pairs_numba(indptr, indices, n)
    return bfs_all_pairs_numpy(indptr, indices, n)


# ---------------------------------------------------------------------------
# cyclic Jacobi eigen-decomposition of a symmetric matrix
# ---------------------------------------------------------------------------


def _rotation(app, aqq, apq):
    theta = (aqq - app) / (2.0 * apq)
    sign = 1.0 if theta >= 0.0 else -1.0
    t = sign / (abs(theta) + np.sqrt(theta * theta + 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    return c, t * c


_rotation_numba = njit(cache=True)(_rotation)


@njit(cache=True)
def _off_norm_numba(a):
    n = a.shape[0]
    off = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                off += a[i, j] * a[i, j]
    return np.sqrt(off)


@njit(cache=True)
def jacobi_eigh_numba(a, tol, max_sweeps):
    a = a.copy()
    n = a.shape[0]
    v = np.eye(n)
    scale = np.sqrt(np.sum(a * a))
    sweeps = 0
    if scale == 0.0:
        return np.zeros(n), v, sweeps
    while sweeps < max_sweeps and _off_norm_numba(a) > tol * scale:
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                c, s = _rotation_numba(a[p, p], a[q, q], apq)
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, v, sweeps


def jacobi_eigh_numpy(a, tol, max_sweeps):
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.sqrt(np.sum(a * a))
    sweeps = 0
    if scale == 0.0:
        return np.zeros(n), v, sweeps
    off_mask = ~np.eye(n, dtype=bool)
    while sweeps < max_sweeps and np.sqrt(np.sum(a[off_mask] ** 2)) > tol * scale:
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                c, s = _rotation(a[p, p], a[q, q], apq)
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, sweeps


def jacobi_eigh_raw(a, tol=1e-13, max_sweeps=100):
    """Unsorted ``(eigenvalues, eigenvectors, sweeps)`` of symmetric ``a``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    if _accel.USE_NUMBA:
        return jacobi_eigh_numba(a, tol, max_sweeps)
    return jacobi_eigh_numpy(a, tol, max_sweeps)


# ---------------------------------------------------------------------------
# nearest-centre assignment for Lloyd iterations
# ---------------------------------------------------------------------------


@njit(cache=True)
def nearest_center_numba(x, centers):
    n, d = x.shape
    k = centers.shape[0]
    labels = np.empty(n, dtype=np.int64)
    best = np.empty(n)
    for i in range(n):
        best_j = 0
        best_d = np.inf
        for j in range(k):
            acc = 0.0
            for m in range(d):
                diff = x[i, m] - centers[j, m]
                acc += diff * diff
            if acc < best_d:
                best_d = acc
                best_j = j
        labels[i] = best_j
        best[i] = best_d
    return labels, best


def nearest_center_numpy(x, centers):
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels.astype(np.int64), d2[np.arange(len(x)), labels]


def nearest_center(x, centers):
    """Index of and squared distance to the closest centre (lowest index on ties)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    if _accel.USE_NUMBA:
        return nearest_center_numba(x, centers)
    return nearest_center_numpy(x, centers)
