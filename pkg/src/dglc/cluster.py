"""Cluster projector, Student-t soft assignment, sharpened targets and the KL loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from . import tensor as T
from .baselines import kmeans
from .tensor import Tensor

Q_FLOOR = 1e-12


class EmptyClusterError(ValueError):
    """A column of Q sums to zero, so the target distribution is undefined."""


@dataclass
class ProjectorParams:
    in_dim: int
    hidden_dim: int
    z_dim: int
    tensors: dict


def init_projector(in_dim: int, z_dim: int = 16, hidden_dim: int | None = None, rng=None) -> ProjectorParams:
    rng = rng if rng is not None else np.random.default_rng(0)
    hidden_dim = hidden_dim or in_dim
    tensors = nn.make_mlp(rng, [in_dim, hidden_dim, z_dim], "proj")
    return ProjectorParams(in_dim, hidden_dim, z_dim, tensors)


def project(graph_repr, params: ProjectorParams):
    """Two-layer MLP ``Linear -> ReLU -> Linear`` mapping graph readouts to cluster embeddings."""
    return nn.mlp(graph_repr, params.tensors, "proj", layers=2, final_relu=False)


def soft_assign(z, centers):
    """``q_jt`` proportional to ``(1 + ||z_j - mu_t||^2)^-1``, rows normalised."""
    z, centers = T.as_tensor(z), T.as_tensor(centers)
    n, d = z.shape
    c = centers.shape[0]
    diff = T.sub(T.reshape(z, (n, 1, d)), T.reshape(centers, (1, c, d)))
    sq = T.sum(T.square(diff), axis=2)
    kernel = T.div(1.0, T.add(sq, 1.0))
    return T.div(kernel, T.sum(kernel, axis=1, keepdims=True))


def target_distribution(q) -> np.ndarray:
    """Sharpen Q: square each entry, divide by its column mass, renormalise rows."""
    q = np.asarray(getattr(q, "value", q), dtype=np.float64)
    freq = q.sum(axis=0)
    if np.any(freq <= 0):
        raise EmptyClusterError("a cluster column of Q sums to zero")
    w = q * q / freq
    return w / w.sum(axis=1, keepdims=True)


def kl_loss(p, q):
    """``sum_jt p log(p / q)`` with P held constant; ``0 log 0`` counts as 0."""
    p = np.asarray(getattr(p, "value", p), dtype=np.float64)
    q = T.as_tensor(q)
    if p.shape != q.shape:
        raise ValueError(f"kl_loss: shape mismatch {p.shape} vs {q.shape}")
    plogp = float(np.sum(np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)))
    cross = T.sum(T.mul(T.log(T.clip_min(q, Q_FLOOR)), p))
    return T.sub(plogp, cross)


def init_centers(z, c: int, seed: int = 0, restarts: int = 10) -> np.ndarray:
    z = np.asarray(getattr(z, "value", z), dtype=np.float64)
    if len(np.unique(z, axis=0)) < c:
        raise ValueError(f"need at least {c} distinct embeddings to initialise {c} centres")
    return kmeans(z, c, seed=seed, restarts=restarts).centroids.copy()


def hard_labels(q) -> np.ndarray:
    q = np.asarray(getattr(q, "value", q))
    return np.argmax(q, axis=1).astype(np.int64)


def centers_tensor(centers: np.ndarray) -> Tensor:
    return Tensor(centers, requires_grad=True, name="centers")
