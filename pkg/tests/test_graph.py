import numpy as np
import pytest
from hypothesis import given, strategies as st

from pxgl.exceptions import InputError
from pxgl.graph import Graph, induced_subgraph, normalized_adjacency, relabel
from pxgl.validation import check_adjacency, check_probability_ratios

from conftest import make_graph, random_graph


@st.composite
def graphs(draw, n_max=8):
    n = draw(st.integers(1, n_max))
    bits = draw(st.lists(st.booleans(), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2))
    a = np.zeros((n, n), dtype=np.uint8)
    a[np.triu_indices(n, 1)] = bits
    return Graph(a + a.T, np.arange(n, dtype=float)[:, None] + 1)


def test_single_node_operator_is_one():
    g = Graph(np.zeros((1, 1)), [[2.0]])
    assert normalized_adjacency(g).tolist() == [[1.0]]


def test_single_edge_operator_is_half():
    assert np.allclose(normalized_adjacency(make_graph([(0, 1)])), 0.5, atol=0, rtol=1e-15)


def test_triangle_operator_is_third(triangle):
    assert np.allclose(normalized_adjacency(triangle), 1 / 3, rtol=1e-15)


@given(graphs())
def test_operator_matches_elementwise_formula(g):
    u = normalized_adjacency(g)
    a_hat = g.adjacency + np.eye(g.n)
    d_hat = a_hat.sum(axis=1)
    for i in range(g.n):
        for j in range(g.n):
            assert abs(u[i, j] - a_hat[i, j] / np.sqrt(d_hat[i] * d_hat[j])) <= 1e-12
    assert np.array_equal(u, u.T)


def test_row_sums_can_exceed_one():
    # the spectral norm is at most 1, but a hub's row sum is not
    star = make_graph([(0, 1), (0, 2), (0, 3)])
    u = normalized_adjacency(star)
    assert u[0].sum() == pytest.approx(0.25 + 3 / np.sqrt(8))
    assert np.linalg.norm(u, 2) <= 1 + 1e-12


def test_operator_spectral_norm_at_most_one():
    rng = np.random.default_rng(3)
    for _ in range(100):
        g = random_graph(rng, 1, 10)
        assert np.linalg.norm(normalized_adjacency(g), 2) <= 1 + 1e-9


def test_induced_pair_of_triangle(triangle):
    s = induced_subgraph(triangle, [0, 1])
    assert s.adjacency.tolist() == [[0, 1], [1, 0]]


def test_induced_path_endpoints_have_no_edge(path3):
    s = induced_subgraph(path3, [0, 2])
    assert s.n == 2 and s.num_edges == 0


def test_induced_singleton_keeps_feature_row(path3):
    s = induced_subgraph(path3, [0])
    assert s.n == 1 and np.array_equal(s.features, path3.features[[0]])


@given(graphs())
def test_identity_node_list_reproduces_graph(g):
    s = induced_subgraph(g, range(g.n))
    assert np.array_equal(s.adjacency, g.adjacency)
    assert np.array_equal(s.features, g.features)


@given(graphs(), st.data())
def test_induced_subgraph_invariants(g, data):
    ids = data.draw(st.lists(st.integers(0, g.n - 1), min_size=1, unique=True))
    s = induced_subgraph(g, ids)
    for a, i in enumerate(ids):
        assert np.array_equal(s.features[a], g.features[i])
        for b, j in enumerate(ids):
            assert s.adjacency[a, b] == g.adjacency[i, j]


@pytest.mark.parametrize("ids", [[], [0, 0], [5], [-1]])
def test_bad_node_ids_raise(triangle, ids):
    with pytest.raises(InputError):
        induced_subgraph(triangle, ids)


@pytest.mark.parametrize("a", [
    [[0, 1], [0, 0]],          # asymmetric
    [[1, 0], [0, 0]],          # self-loop
    [[0, 2], [2, 0]],          # not binary
    np.zeros((2, 3)),          # not square
])
def test_invalid_adjacency_rejected(a):
    with pytest.raises(InputError):
        check_adjacency(a)


def test_feature_rows_must_match():
    with pytest.raises(InputError):
        Graph(np.zeros((2, 2)), np.ones((3, 1)))


def test_graph_arrays_are_read_only(triangle):
    with pytest.raises(ValueError):
        triangle.adjacency[0, 1] = 0


def test_relabel_moves_nodes():
    g = make_graph([(0, 1)], n=3)
    h = relabel(g, [2, 0, 1])
    assert h.adjacency[2, 0] == 1 and h.adjacency[0, 1] == 0
    assert np.array_equal(h.features[2], g.features[0])


def test_probability_ratios_validation():
    assert np.allclose(check_probability_ratios((0.8, 0.1, 0.1)), [0.8, 0.1, 0.1])
    with pytest.raises(InputError):
        check_probability_ratios((0.8, 0.1, 0.2))
