import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dglc.graph import (
    DatasetFormatError,
    Graph,
    GraphDataset,
    build_features,
    find_dataset_dir,
    load_dataset,
    parse_tudataset,
    permute_graph,
    write_tudataset,
)
from dglc.synthetic import motif_dataset, random_graph


def write_files(directory, name, a, indicator, labels, node_labels=None):
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{name}_A.txt").write_text("".join(f"{u}, {v}\n" for u, v in a))
    (directory / f"{name}_graph_indicator.txt").write_text("".join(f"{i}\n" for i in indicator))
    (directory / f"{name}_graph_labels.txt").write_text("".join(f"{y}\n" for y in labels))
    if node_labels is not None:
        (directory / f"{name}_node_labels.txt").write_text("".join(f"{x}\n" for x in node_labels))


def test_single_edge_fixture(tmp_path):
    write_files(tmp_path, "T", [(1, 2), (2, 1)], [1, 1], [5])
    ds = parse_tudataset(tmp_path, "T")
    assert len(ds) == 1
    g = ds.graphs[0]
    assert g.node_count == 2
    assert g.edge_count == 1
    assert g.edges.tolist() == [[0, 1]]
    assert ds.graph_labels.tolist() == [0]
    assert ds.num_classes == 1
    assert not ds.has_node_labels


def test_multi_graph_renumbering_and_label_remap(tmp_path):
    a = [(1, 2), (2, 1), (2, 3), (3, 2), (4, 5), (5, 4)]
    write_files(tmp_path, "T", a, [1, 1, 1, 2, 2], [-1, 1], node_labels=[3, 3, 7, 7, 3])
    ds = parse_tudataset(tmp_path, "T")
    assert [g.node_count for g in ds.graphs] == [3, 2]
    assert ds.graphs[0].edges.tolist() == [[0, 1], [1, 2]]
    assert ds.graphs[1].edges.tolist() == [[0, 1]]
    assert ds.graph_labels.tolist() == [0, 1]
    assert ds.graphs[1].node_labels.tolist() == [7, 3]


def test_subdirectory_and_dash_alias(tmp_path):
    write_files(tmp_path / "IMDB-B", "IMDB_B", [(1, 2)], [1, 1], [0])
    ds = parse_tudataset(tmp_path, "IMDB-B")
    assert ds.graphs[0].edge_count == 1
    assert load_dataset("IMDB-B", tmp_path).graphs[0].node_count == 2


def test_data_dir_env_lookup(tmp_path, monkeypatch):
    write_files(tmp_path / "X", "X", [(1, 2)], [1, 1], [0])
    monkeypatch.setenv("DGLC_DATA_DIR", str(tmp_path))
    assert find_dataset_dir("X") == tmp_path / "X"
    with pytest.raises(FileNotFoundError):
        find_dataset_dir("MISSING")


@pytest.mark.parametrize(
    "a, indicator, labels, node_labels, match",
    [
        ([(1, 3)], [1, 1], [0], None, "nonexistent"),
        ([(0, 1)], [1, 1], [0], None, "nonexistent"),
        ([(1, 2)], [1, 2, 1], [0, 1], None, "indicator"),
        ([(1, 2)], [2, 2], [0], None, "indicator"),
        ([(1, 2)], [1, 1, 3], [0, 1, 2], None, "indicator"),
        ([(1, 2)], [1, 1], [0, 1], None, "graph labels"),
        ([(1, 3)], [1, 1, 2], [0, 1], None, "different graphs"),
        ([(1, 2)], [1, 1], [0], [1], "node label"),
    ],
)
def test_malformed_inputs(tmp_path, a, indicator, labels, node_labels, match):
    write_files(tmp_path, "T", a, indicator, labels, node_labels)
    with pytest.raises(DatasetFormatError, match=match):
        parse_tudataset(tmp_path, "T")


@pytest.mark.parametrize("missing", ["A", "graph_indicator", "graph_labels"])
def test_missing_required_file(tmp_path, missing):
    write_files(tmp_path, "T", [(1, 2)], [1, 1], [0])
    (tmp_path / f"T_{missing}.txt").unlink()
    with pytest.raises(DatasetFormatError, match="missing"):
        parse_tudataset(tmp_path, "T")


def test_non_integer_row(tmp_path):
    write_files(tmp_path, "T", [(1, 2)], [1, 1], [0])
    (tmp_path / "T_A.txt").write_text("1, x\n")
    with pytest.raises(DatasetFormatError, match="T_A.txt:1"):
        parse_tudataset(tmp_path, "T")


def test_graph_invariants():
    g = Graph(3, [(1, 0), (0, 1), (2, 2), (1, 2)])
    assert g.edges.tolist() == [[0, 1], [1, 2]]
    indptr, indices = g.csr()
    assert indptr.tolist() == [0, 1, 3, 4]
    assert indices.tolist() == [1, 0, 2, 1]
    assert g.degrees().tolist() == [1, 2, 1]
    with pytest.raises(ValueError):
        Graph(2, [(0, 2)])
    with pytest.raises(ValueError):
        Graph(2, [], node_labels=[0])
    with pytest.raises(ValueError):
        GraphDataset([g], [0, 1])


@pytest.mark.parametrize("with_labels", [True, False])
def test_round_trip_is_exact(tmp_path, with_labels):
    ds = motif_dataset(30, seed=3, name="RT")
    if not with_labels:
        ds = GraphDataset([Graph(g.node_count, g.edges) for g in ds.graphs], ds.graph_labels, name="RT")
    ds.graphs.append(Graph(1, [], [0] if with_labels else None))
    ds.graph_labels = np.append(ds.graph_labels, 1)
    write_tudataset(ds, tmp_path)
    back = parse_tudataset(tmp_path, "RT")
    assert back.same_as(ds)
    write_tudataset(back, tmp_path / "again")
    for f in sorted(tmp_path.glob("RT_*.txt")):
        assert f.read_bytes() == (tmp_path / "again" / f.name).read_bytes()


def test_features_from_node_labels():
    ds = GraphDataset([Graph(3, [(0, 1)], [0, 2, 1]), Graph(1, [], [2])], [0, 1])
    feats = build_features(ds)
    assert feats[0].shape == (3, 3)
    assert feats[0][2].tolist() == [0, 1, 0]
    assert feats[1].tolist() == [[0, 0, 1]]


def test_features_from_sparse_label_alphabet():
    ds = GraphDataset([Graph(2, [], [10, 40])], [0])
    assert build_features(ds)[0].tolist() == [[1, 0], [0, 1]]


def test_degree_fallback():
    ds = GraphDataset([Graph(3, [(0, 1)]), Graph(4, [(0, 1), (0, 2), (0, 3)])], [0, 1])
    feats = build_features(ds)
    assert feats[0].shape == (3, 4)
    assert feats[0][2].tolist() == [1, 0, 0, 0]
    assert feats[1][0].tolist() == [0, 0, 0, 1]


def test_mixed_label_presence_falls_back_to_degree():
    ds = GraphDataset([Graph(2, [(0, 1)], [5, 5]), Graph(1, [])], [0, 1])
    assert build_features(ds)[0].shape[1] == 2


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 15), st.integers(0, 2**31), st.booleans())
def test_feature_rows_are_one_hot(n, seed, labelled):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    if not labelled:
        g = Graph(g.node_count, g.edges)
    for x in build_features(GraphDataset([g], [0])):
        assert np.all(x.sum(axis=1) == 1)
        assert set(np.unique(x)) <= {0.0, 1.0}


def test_permute_identity_and_swap():
    g = Graph(2, [(0, 1)], [4, 5])
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    same, same_x = permute_graph(g, x, [0, 1])
    assert same.same_as(g)
    np.testing.assert_array_equal(same_x, x)
    swapped, sx = permute_graph(g, x, [1, 0])
    assert swapped.edges.tolist() == [[0, 1]]
    assert swapped.node_labels.tolist() == [5, 4]
    np.testing.assert_array_equal(sx, x[::-1])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 15), st.integers(0, 2**31))
def test_permute_then_inverse_restores(n, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    x = build_features(GraphDataset([g], [0]))[0]
    perm = rng.permutation(n)
    h, hx = permute_graph(g, x, perm)
    assert h.edge_count == g.edge_count
    np.testing.assert_array_equal(np.sort(h.degrees()), np.sort(g.degrees()))
    back, bx = permute_graph(h, hx, np.argsort(perm))
    assert back.same_as(g)
    np.testing.assert_array_equal(bx, x)


def test_permute_rejects_bad_perm():
    g = Graph(3, [(0, 1)])
    x = np.eye(3)
    with pytest.raises(ValueError, match="length"):
        permute_graph(g, x, [0, 1])
    with pytest.raises(ValueError):
        permute_graph(g, x, [0, 0, 1])


def test_stats():
    ds = GraphDataset([Graph(2, [(0, 1)]), Graph(4, [(0, 1), (1, 2)])], [1, 3], name="S")
    s = ds.stats()
    assert s == {"name": "S", "graphs": 2, "classes": 2, "mean_nodes": 3.0, "min_nodes": 2, "max_nodes": 4, "mean_edges": 1.5}
