"""GIN encoder with layer-wise concatenation and sum readout."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from . import tensor as T
from .graph import Graph
from .tensor import Tensor


@dataclass
class EncoderParams:
    """K GIN layers, each an MLP ``Linear -> ReLU -> Linear -> ReLU``.

    ``eps_gin`` is fixed at 0 (GIN-0): a node is combined with its neighbour
    sum by plain addition before the layer MLP.
    """

    d_in: int
    num_layers: int
    hidden_dim: int
    tensors: dict
    eps_gin: float = 0.0

    @property
    def out_dim(self) -> int:
        return self.num_layers * self.hidden_dim

    def layer(self, k: int) -> dict:
        return {name: t for name, t in self.tensors.items() if name.startswith(f"gin{k}.")}


def init_encoder(d_in: int, num_layers: int = 4, hidden_dim: int = 64, rng=None) -> EncoderParams:
    rng = rng if rng is not None else np.random.default_rng(0)
    tensors = {}
    for k in range(num_layers):
        fan_in = d_in if k == 0 else hidden_dim
        tensors.update(nn.make_mlp(rng, [fan_in, hidden_dim, hidden_dim], f"gin{k}"))
    return EncoderParams(d_in, num_layers, hidden_dim, tensors)


@dataclass
class Batch:
    """Disjoint union of graphs: stacked features, block-diagonal CSR adjacency."""

    x: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    segment_ids: np.ndarray
    num_graphs: int
    graph_index: np.ndarray

    @property
    def num_nodes(self) -> int:
        return len(self.segment_ids)


def make_batch(graphs: list[Graph], features: list[np.ndarray], graph_index=None) -> Batch:
    if not graphs:
        raise ValueError("batch must contain at least one graph")
    indptrs, indices, seg = [np.zeros(1, dtype=np.int64)], [], []
    node_off, edge_off = 0, 0
    for j, g in enumerate(graphs):
        ip, ix = g.csr()
        indptrs.append(ip[1:] + edge_off)
        indices.append(ix + node_off)
        seg.append(np.full(g.node_count, j, dtype=np.int64))
        node_off += g.node_count
        edge_off += len(ix)
    gi = np.arange(len(graphs)) if graph_index is None else np.asarray(graph_index)
    return Batch(
        x=np.concatenate(features, axis=0),
        indptr=np.concatenate(indptrs),
        indices=np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64),
        segment_ids=np.concatenate(seg),
        num_graphs=len(graphs),
        graph_index=gi,
    )


@dataclass
class BatchEncoding:
    node_repr: Tensor  # (total nodes, K * d_h)
    graph_repr: Tensor  # (n_b, K * d_h)
    segment_ids: np.ndarray


def gin_layer(h, indptr, indices, layer_params: dict, k: int, eps_gin: float = 0.0):
    """One GIN update: ``MLP_k((1 + eps) h_v + sum_{u in N(v)} h_u)``."""
    agg = T.self_neighbor_sum(h, indptr, indices)
    if eps_gin:
        agg = T.add(agg, T.scale(h, eps_gin))
    return nn.mlp(agg, layer_params, f"gin{k}", layers=2, final_relu=True)


def encode_batch(batch: Batch, params: EncoderParams) -> BatchEncoding:
    h = T.Tensor(batch.x)
    outputs = []
    for k in range(params.num_layers):
        h = gin_layer(h, batch.indptr, batch.indices, params.layer(k), k, params.eps_gin)
        outputs.append(h)
    node_repr = outputs[0] if len(outputs) == 1 else T.concat_cols(outputs)
    graph_repr = T.segment_sum(node_repr, batch.segment_ids, batch.num_graphs)
    return BatchEncoding(node_repr, graph_repr, batch.segment_ids)
