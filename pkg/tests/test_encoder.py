import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from topo_lidar.core.geometry import PointCloud
from topo_lidar.core.graph import knn_graph
from topo_lidar.encoder import LayerWeights, graph_layer_forward, stack_encoder
from topo_lidar.errors import GeometryError, ShapeMismatchError


def loop_forward(H, neighbors, W):
    n, d = H.shape
    out = np.full((n, W.shape[0]), -np.inf)
    for i in range(n):
        for j in neighbors[i]:
            edge = np.concatenate([H[i], H[j] - H[i]])
            for o in range(W.shape[0]):
                out[i, o] = max(out[i, o], sum(W[o, c] * edge[c] for c in range(2 * d)))
    return out


def test_identity_weights_pass_features_through(rng):
    H = rng.normal(size=(15, 4))
    out = graph_layer_forward(H, knn_graph(H, 3), LayerWeights.identity(4))
    assert_array_equal(out, H)


def test_matches_nested_loops(rng):
    H = rng.normal(size=(10, 3))
    graph = knn_graph(H, 4)
    w = LayerWeights.random(3, 5, seed=3)
    assert_allclose(graph_layer_forward(H, graph, w), loop_forward(H, graph.neighbors, w.matrix), rtol=1e-12, atol=1e-14)


def test_chunking_does_not_change_results(rng, monkeypatch):
    H = rng.normal(size=(40, 3))
    graph = knn_graph(H, 5)
    w = LayerWeights.random(3, 8, seed=1)
    whole = graph_layer_forward(H, graph, w)
    monkeypatch.setattr("topo_lidar.encoder.CHUNK", 7)
    assert_allclose(graph_layer_forward(H, graph, w), whole, rtol=1e-12)


def test_default_stack_dimensions(rng):
    outputs = stack_encoder(PointCloud(rng.normal(size=(40, 3))), k=20, seed=0)
    assert [o.shape for o in outputs] == [(40, 64), (40, 128), (40, 256), (40, 512)]


def test_single_identity_layer_returns_coordinates(rng):
    X = rng.normal(size=(12, 3))
    (out,) = stack_encoder(PointCloud(X), widths=[3], k=4, weights=[LayerWeights.identity(3)])
    assert_array_equal(out, X)


def test_seeded_weights_are_reproducible(rng):
    cloud = PointCloud(rng.normal(size=(25, 3)))
    a = stack_encoder(cloud, widths=[8, 16], k=5, seed=4)
    b = stack_encoder(cloud, widths=[8, 16], k=5, seed=4)
    c = stack_encoder(cloud, widths=[8, 16], k=5, seed=5)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not np.array_equal(a[-1], c[-1])


def test_permutation_equivariance(rng):
    X = rng.normal(size=(30, 3))
    perm = rng.permutation(30)
    out = stack_encoder(PointCloud(X), widths=[8, 16], k=6, seed=2)[-1]
    permuted = stack_encoder(PointCloud(X[perm]), widths=[8, 16], k=6, seed=2)[-1]
    assert_array_equal(permuted, out[perm])


def test_random_weight_bounds():
    w = LayerWeights.random(8, 32, seed=0, layer=2)
    assert w.matrix.shape == (32, 16)
    assert np.all(np.abs(w.matrix) <= 0.25)
    assert not np.array_equal(w.matrix, LayerWeights.random(8, 32, seed=0, layer=3).matrix)
    with pytest.raises(GeometryError):
        LayerWeights.random(8, 32, seed=-1)


def test_dimension_mismatches(rng):
    H = rng.normal(size=(10, 3))
    graph = knn_graph(H, 3)
    with pytest.raises(ShapeMismatchError):
        graph_layer_forward(H, graph, LayerWeights.identity(4))
    with pytest.raises(ShapeMismatchError):
        graph_layer_forward(H[:5], graph, LayerWeights.identity(3))
    with pytest.raises(ShapeMismatchError):
        stack_encoder(PointCloud(H), widths=[3, 4], k=3, weights=[LayerWeights.identity(3)])
    with pytest.raises(GeometryError):
        stack_encoder(PointCloud(H), widths=[], k=3)
