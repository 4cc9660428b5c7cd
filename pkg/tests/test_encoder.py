import numpy as np
import pytest
from helpers import gradcheck
from hypothesis import given, settings
from hypothesis import strategies as st

from dglc import tensor as T
from dglc.encoder import EncoderParams, encode_batch, gin_layer, init_encoder, make_batch
from dglc.graph import Graph, GraphDataset, build_features, permute_graph
from dglc.synthetic import random_graph
from dglc.tensor import Tensor


def identity_encoder(d, num_layers=1):
    tensors = {}
    for k in range(num_layers):
        tensors[f"gin{k}.w0"] = Tensor(np.eye(d), requires_grad=True)
        tensors[f"gin{k}.b0"] = Tensor(np.zeros(d), requires_grad=True)
        tensors[f"gin{k}.w1"] = Tensor(np.eye(d), requires_grad=True)
        tensors[f"gin{k}.b1"] = Tensor(np.zeros(d), requires_grad=True)
    return EncoderParams(d, num_layers, d, tensors)


def run_layer(graph, x, params):
    indptr, indices = graph.csr()
    return gin_layer(Tensor(x), indptr, indices, params.layer(0), 0).value


def test_isolated_node_sees_only_itself():
    x = np.array([[0.2, 0.7, 0.0]])
    np.testing.assert_array_equal(run_layer(Graph(1, []), x, identity_encoder(3)), x)


def test_edge_sums_both_endpoints():
    x = np.array([[1.0, 0.0], [0.3, 2.0]])
    out = run_layer(Graph(2, [(0, 1)]), x, identity_encoder(2))
    np.testing.assert_allclose(out, [[1.3, 2.0], [1.3, 2.0]])


@pytest.mark.parametrize("m", [1, 3, 6])
def test_star_center_collects_leaves(m):
    x = np.zeros((m + 1, 2))
    x[0] = [0.0, 0.5]
    x[1:] = [1.0, 0.0]
    g = Graph(m + 1, [(0, i) for i in range(1, m + 1)])
    out = run_layer(g, x, identity_encoder(2))
    np.testing.assert_allclose(out[0], [m, 0.5])
    np.testing.assert_allclose(out[1], [1.0, 0.5])


def test_single_node_graph_readout_is_node_output():
    params = init_encoder(3, num_layers=1, hidden_dim=5, rng=np.random.default_rng(0))
    batch = make_batch([Graph(1, [])], [np.array([[0.0, 1.0, 0.0]])])
    enc = encode_batch(batch, params)
    np.testing.assert_array_equal(enc.graph_repr.value, enc.node_repr.value)


def test_shapes_and_readout(rng):
    graphs = [random_graph(rng, n) for n in (4, 1, 7)]
    feats = build_features(GraphDataset(graphs, [0, 1, 0]))
    params = init_encoder(feats[0].shape[1], num_layers=4, hidden_dim=8, rng=rng)
    enc = encode_batch(make_batch(graphs, feats), params)
    assert enc.graph_repr.shape == (3, 32)
    assert enc.node_repr.shape == (12, 32)
    for j in range(3):
        np.testing.assert_allclose(enc.graph_repr.value[j], enc.node_repr.value[enc.segment_ids == j].sum(0), atol=1e-12)


def test_concatenation_order_matches_layers(rng):
    g = random_graph(rng, 5)
    x = build_features(GraphDataset([g], [0]))[0]
    params = init_encoder(x.shape[1], num_layers=3, hidden_dim=4, rng=rng)
    enc = encode_batch(make_batch([g], [x]), params)
    indptr, indices = g.csr()
    h = Tensor(x)
    for k in range(3):
        h = gin_layer(h, indptr, indices, params.layer(k), k)
        np.testing.assert_array_equal(enc.node_repr.value[:, 4 * k : 4 * (k + 1)], h.value)


def test_layer_dimensions():
    params = init_encoder(7, num_layers=3, hidden_dim=5)
    assert params.tensors["gin0.w0"].shape == (7, 5)
    assert params.tensors["gin1.w0"].shape == (5, 5)
    assert params.tensors["gin2.w1"].shape == (5, 5)
    assert params.out_dim == 15


def test_init_is_seeded():
    a = init_encoder(4, rng=np.random.default_rng(9))
    b = init_encoder(4, rng=np.random.default_rng(9))
    for name in a.tensors:
        np.testing.assert_array_equal(a.tensors[name].value, b.tensors[name].value)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 14), st.integers(0, 2**31))
def test_permutation_invariance(n, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, p=0.35)
    x = build_features(GraphDataset([g], [0]))[0]
    params = init_encoder(x.shape[1], num_layers=3, hidden_dim=8, rng=rng)
    h, hx = permute_graph(g, x, rng.permutation(n))
    a = encode_batch(make_batch([g], [x]), params).graph_repr.value
    b = encode_batch(make_batch([h], [hx]), params).graph_repr.value
    assert np.abs(a - b).max() < 1e-9


def test_isomorphic_duplicates_in_one_batch(rng):
    g = random_graph(rng, 9, p=0.4)
    x = build_features(GraphDataset([g], [0]))[0]
    h, hx = permute_graph(g, x, rng.permutation(9))
    other = random_graph(rng, 6)
    ox = np.eye(x.shape[1])[rng.integers(x.shape[1], size=6)]
    params = init_encoder(x.shape[1], num_layers=4, hidden_dim=6, rng=rng)
    out = encode_batch(make_batch([g, other, h], [x, ox, hx]), params).graph_repr.value
    np.testing.assert_allclose(out[0], out[2], rtol=0, atol=1e-9)


def test_encoder_weight_gradients(rng, backend):
    graphs = [random_graph(rng, 4, p=0.6), random_graph(rng, 3, p=0.6)]
    feats = build_features(GraphDataset(graphs, [0, 1]))
    params = init_encoder(feats[0].shape[1], num_layers=2, hidden_dim=3, rng=rng)
    batch = make_batch(graphs, feats)
    names = sorted(params.tensors)
    # random biases keep pre-activations away from the ReLU kink
    values = [params.tensors[n].value + 0.05 * rng.normal(size=params.tensors[n].shape) for n in names]
    mix = rng.normal(size=(2, params.out_dim))

    def build(*tensors):
        p = EncoderParams(params.d_in, params.num_layers, params.hidden_dim, dict(zip(names, tensors)))
        return T.sum(T.mul(encode_batch(batch, p).graph_repr, mix))

    assert gradcheck(build, values) <= 1.0
