import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reeb_forest.bench import oracles
from reeb_forest.bench.generators import random_graph
from reeb_forest.graph import (
    GraphError,
    MetricGraph,
    approximate_graph,
    graph_bound,
    hyp_all_bases,
    hyp_base,
    hyp_full,
    induce_poset,
    p_regularity_violations,
    regularize,
    tree_approx_graph,
)

C4 = MetricGraph("pabc", [("p", "a", 1), ("a", "b", 1), ("b", "c", 1), ("c", "p", 1)], base="p")


def edge_set(G):
    return {(min(u, v), max(u, v)) for u, v, _ in G.edges()}


def test_single_edge():
    G = MetricGraph("uv", [("u", "v", 3)])
    assert G.distance_matrix()[0, 1] == 3


def test_c4_distances():
    d = C4.distance_matrix()
    assert d[C4.index("p"), C4.index("b")] == 2
    assert d[C4.index("a"), C4.index("c")] == 2


def test_long_triangle_edge_shortcut():
    G = MetricGraph("uvw", [("u", "v", 1), ("v", "w", 1), ("u", "w", 3)])
    assert G.distance_matrix()[0, 2] == 2


@pytest.mark.parametrize("vertices, edges", [
    ("ab", [("a", "b", 0)]),
    ("ab", [("a", "b", -1)]),
    ("abc", [("a", "b", 1)]),
    ("ab", [("a", "b", 1), ("b", "a", 2)]),
    ("a", [("a", "a", 1)]),
])
def test_invalid_graphs(vertices, edges):
    with pytest.raises(GraphError):
        MetricGraph(vertices, edges)


def test_c4_is_already_regular():
    G2, trace = regularize(C4, "p")
    assert trace.added == [] and edge_set(G2) == edge_set(C4)
    assert p_regularity_violations(C4, "p") == []


def test_triangle_gets_apex():
    T = MetricGraph("abc", [("a", "b", 1), ("b", "c", 1), ("a", "c", 1)])
    assert {v[0] for v in p_regularity_violations(T, "a")} == {"i"}
    G2, trace = regularize(T, "a")
    assert trace.n_apex == 1 and trace.n_midpoint == 0
    (apex,) = trace.added
    assert apex.offset == 0.5 and set(apex.host) == {"b", "c"}
    assert p_regularity_violations(G2, "a") == []
    assert G2.n == 4 and G2.betti() == 1


def test_equal_paths_get_midpoint():
    # v-w has length 2 and so does v-u-w: the direct edge is not the unique geodesic
    T = MetricGraph("vwu", [("v", "w", 2), ("v", "u", 1), ("u", "w", 1)])
    assert [c for c, _, _ in p_regularity_violations(T, "v")] == ["ii"]
    G2, trace = regularize(T, "v")
    assert trace.n_midpoint == 1 and trace.n_apex == 0
    assert trace.added[0].offset == 1
    assert sorted(L for _, _, L in G2.edges()) == [1, 1, 1, 1]
    assert oracles.count_geodesics(G2, G2.index("v"), G2.index("w")) == 2
    for u, v, _ in G2.edges():
        assert oracles.count_geodesics(G2, G2.index(u), G2.index(v)) == 1


def test_exact_apex_uses_fractions():
    T = MetricGraph("uvw", [("u", "v", 2), ("u", "w", 2), ("v", "w", 3)])
    G2, trace = regularize(T, "u", exact=True)
    assert trace.added[0].offset == Fraction(3, 2)
    assert all(isinstance(L, Fraction) for _, _, L in G2.edges())


def test_star_poset():
    S = MetricGraph("pxyz", [("p", "x", 1), ("p", "y", 2), ("p", "z", 1)])
    rp = induce_poset(S, "p")
    covers = {(rp.labels[a], rp.labels[b]) for a, b in rp.poset.cover_pairs()}
    assert covers == {("p", "x"), ("p", "y"), ("p", "z")}


def test_c4_poset():
    rp = induce_poset(C4, "p")
    covers = {(rp.labels[a], rp.labels[b]) for a, b in rp.poset.cover_pairs()}
    assert covers == {("p", "a"), ("a", "b"), ("p", "c"), ("c", "b")}
    assert rp.f.tolist() == [0, 1, 2, 1]


def test_path_poset_is_chain():
    G = MetricGraph("pvw", [("p", "v", 1), ("v", "w", 1)])
    rp = induce_poset(G, "p")
    assert rp.poset.lt[0, 1] and rp.poset.lt[1, 2]


def test_induce_poset_requires_regular():
    T = MetricGraph("abc", [("a", "b", 1), ("b", "c", 1), ("a", "c", 1)])
    with pytest.raises(GraphError):
        induce_poset(T, "a")


def test_hyp_values():
    d = C4.distance_matrix()
    assert hyp_all_bases(d).tolist() == [1, 1, 1, 1]
    assert hyp_full(d) == 1
    assert hyp_full(np.array([[0, 5], [5, 0]])) == 0
    tree = MetricGraph("rabcd", [("r", "a", 1), ("r", "b", 2), ("a", "c", 1), ("a", "d", 3)])
    assert hyp_full(tree.distance_matrix()) == 0
    assert hyp_base(d, 0) == 1


def test_graph_bound_formula():
    assert graph_bound(1, 1.0) == 6.0
    assert graph_bound(3, 0.0) == 0.0
    assert graph_bound(2, 0.5) == pytest.approx(2 * math.log2(12) * 0.5)


def test_golden_c4_pipeline():
    T, proj, rep = tree_approx_graph(C4, "p")
    assert (rep.distortion, rep.betti, rep.hyp, rep.bound_graph) == (2.0, 1, 1.0, 6.0)
    assert set(rep.worst_pair) == {"a", "c"}
    assert rep.ok and T.n == 3


def test_tree_graph_zero_distortion():
    tree = MetricGraph("rabcd", [("r", "a", 1), ("r", "b", 2), ("a", "c", 1), ("a", "d", 3)])
    for p in tree.vertices:
        rep = approximate_graph(tree, p).report
        assert rep.distortion == 0 and rep.bound_graph == 0 and rep.ok


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_pipeline_every_base(seed, n):
    G = random_graph(np.random.default_rng(seed), n)
    d0 = G.distance_matrix()
    np.testing.assert_allclose(d0, oracles.brute_graph_distances(G), atol=1e-9)
    hyps = hyp_all_bases(d0)
    assert (hyps[:, None] <= 2 * hyps[None, :] + 1e-9).all()
    for p in G.vertices:
        res = approximate_graph(G, p)
        rep = res.report
        assert rep.ok, rep.to_dict()
        assert rep.distortion <= rep.bound_graph + 1e-9
        idx = [res.graph.index(v) for v in G.vertices]
        np.testing.assert_allclose(res.d[np.ix_(idx, idx)], d0, atol=1e-9)
        assert p_regularity_violations(res.graph, p) == []
        assert regularize(res.graph, p)[1].added == []


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 7))
def test_exact_mode_agrees_with_float(seed, n):
    G = random_graph(np.random.default_rng(seed), n)
    p = G.vertices[0]
    a = approximate_graph(G, p).report
    b = approximate_graph(G, p, exact=True).report
    assert a.n_vertices == b.n_vertices
    assert a.distortion == pytest.approx(b.distortion, abs=1e-9)
    assert a.bound_graph == pytest.approx(b.bound_graph, abs=1e-9)
