"""Jensen-Shannon local/global mutual-information objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from . import tensor as T
from .encoder import BatchEncoding


@dataclass
class DiscriminatorParams:
    """Local and global projectors ``Linear -> ReLU -> Linear`` into a shared score space."""

    in_dim: int
    mi_dim: int
    tensors: dict


def init_discriminator(in_dim: int, mi_dim: int | None = None, rng=None) -> DiscriminatorParams:
    rng = rng if rng is not None else np.random.default_rng(0)
    mi_dim = mi_dim or in_dim
    tensors = {}
    tensors.update(nn.make_mlp(rng, [in_dim, mi_dim, mi_dim], "local"))
    tensors.update(nn.make_mlp(rng, [in_dim, mi_dim, mi_dim], "global"))
    return DiscriminatorParams(in_dim, mi_dim, tensors)


def project_local(x, params: DiscriminatorParams):
    return nn.mlp(x, params.tensors, "local", layers=2, final_relu=False)


def project_global(x, params: DiscriminatorParams):
    return nn.mlp(x, params.tensors, "global", layers=2, final_relu=False)


def score_matrix(encoding: BatchEncoding, params: DiscriminatorParams):
    """``S[i, j] = T(node i, graph j)`` for every node/graph pair in the batch."""
    local = project_local(encoding.node_repr, params)
    glob = project_global(encoding.graph_repr, params)
    return T.matmul(local, T.transpose(glob))


def discriminator_score(local, global_, params: DiscriminatorParams) -> float:
    lp = project_local(T.Tensor(np.atleast_2d(local)), params).value
    gp = project_global(T.Tensor(np.atleast_2d(global_)), params).value
    return float(lp[0] @ gp[0])


def pair_masks(segment_ids, num_graphs):
    pos = np.zeros((len(segment_ids), num_graphs))
    pos[np.arange(len(segment_ids)), segment_ids] = 1.0
    return pos, 1.0 - pos


def js_loss_from_scores(scores, segment_ids, num_graphs):
    """``mean_pos sp(-S) + mean_neg sp(S)``, the negated JS estimate."""
    if num_graphs < 2:
        raise ValueError("MI objective needs at least 2 graphs in a batch (no negatives otherwise)")
    pos, neg = pair_masks(segment_ids, num_graphs)
    pos_term = T.sum(T.mul(T.softplus(T.scale(scores, -1.0)), pos)) * (1.0 / pos.sum())
    neg_term = T.sum(T.mul(T.softplus(scores), neg)) * (1.0 / neg.sum())
    return T.add(pos_term, neg_term)


def js_mi_loss(encoding: BatchEncoding, params: DiscriminatorParams):
    """Return ``L_r = -I`` as a scalar tensor.

    Positives pair each node with its own graph's readout; negatives pair it
    with every other graph's readout in the batch. Both expectations are plain
    means over the realised pairs.
    """
    num_graphs = encoding.graph_repr.shape[0]
    scores = score_matrix(encoding, params)
    return js_loss_from_scores(scores, encoding.segment_ids, num_graphs)
