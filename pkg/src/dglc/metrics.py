"""Clustering accuracy (Hungarian matching), NMI and ARI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass
class ContingencyTable:
    counts: np.ndarray  # rows: predicted clusters, columns: true classes

    @property
    def row_sums(self):
        return self.counts.sum(axis=1)

    @property
    def col_sums(self):
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _check(y_true, y_pred):
    y_true = np.asarray(y_true).reshape(-1)
    y_pred = np.asarray(y_pred).reshape(-1)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"label vectors differ in length: {len(y_true)} vs {len(y_pred)}")
    if len(y_true) == 0:
        raise ValueError("empty label vectors")
    return y_true, y_pred


def contingency(y_true, y_pred) -> ContingencyTable:
    y_true, y_pred = _check(y_true, y_pred)
    _, t = np.unique(y_true, return_inverse=True)
    _, p = np.unique(y_pred, return_inverse=True)
    counts = np.zeros((p.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(counts, (p.reshape(-1), t.reshape(-1)), 1)
    return ContingencyTable(counts)


def accuracy(y_true, y_pred) -> float:
    """Fraction matched under the best one-to-one cluster-to-class mapping."""
    table = contingency(y_true, y_pred).counts
    size = max(table.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: table.shape[0], : table.shape[1]] = table
    rows, cols = linear_sum_assignment(-padded)
    return float(padded[rows, cols].sum()) / table.sum()


def _entropy(counts):
    # sorted so that relabelling either partition gives a bitwise-equal result
    counts = np.sort(counts[counts > 0])
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def nmi(y_true, y_pred) -> float:
    """Mutual information over the arithmetic mean of the two entropies (natural log)."""
    table = contingency(y_true, y_pred)
    n = table.total
    h_pred = _entropy(table.row_sums)
    h_true = _entropy(table.col_sums)
    h_joint = _entropy(table.counts.reshape(-1))
    mi = h_true + h_pred - h_joint
    denom = 0.5 * (h_true + h_pred)
    if denom <= 0.0 or n == 0:
        return 0.0
    return float(min(1.0, max(0.0, mi / denom)))


def _pairs(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1.0) / 2.0


def ari(y_true, y_pred) -> float:
    table = contingency(y_true, y_pred)
    sum_ij = _pairs(table.counts).sum()
    sum_a = _pairs(table.row_sums).sum()
    sum_b = _pairs(table.col_sums).sum()
    total = _pairs(table.total)
    expected = sum_a * sum_b / total if total > 0 else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        # only reachable when both partitions are identical (all singletons or one cluster)
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


def evaluate(y_true, y_pred) -> dict:
    return {"acc": accuracy(y_true, y_pred), "nmi": nmi(y_true, y_pred), "ari": ari(y_true, y_pred)}
