import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reeb_forest.bench.generators import random_graph, random_poset
from reeb_forest.graph import approximate_graph
from reeb_forest.io import (
    ParseError,
    detect_format,
    format_number,
    newick_distances,
    parse_edge_tsv,
    parse_graph_json,
    parse_matrix_csv,
    parse_matrix_json,
    parse_newick,
    parse_poset_json,
    read_input,
    to_dot,
    to_newick,
)
from reeb_forest.metric import MetricError
from reeb_forest.reeb import ReebTree, reeb_tree, tree_metric_tf


def test_graph_json():
    G = parse_graph_json('{"vertices": ["p", "a"], "edges": [["p", "a", 2.5]], "base": "p"}')
    assert G.vertices == ("p", "a") and G.base == "p" and G.length("p", "a") == 2.5


def test_graph_json_infers_vertices():
    G = parse_graph_json('{"edges": [["x", "y", 1], ["y", "z", 2]]}')
    assert G.vertices == ("x", "y", "z")


def test_json_syntax_error_position():
    with pytest.raises(ParseError) as err:
        parse_graph_json('{\n  "edges": [["a", "b", 1],\n  ]\n}')
    assert err.value.line == 3


def test_bad_edge_entry():
    with pytest.raises(ParseError):
        parse_graph_json('{"edges": [["a", "b"]]}')


def test_edge_tsv():
    G = parse_edge_tsv("# cycle\np\ta\t1\na b 1\n\nb\tc\t1 # comment\nc\tp\t1\n", base="p")
    assert G.n == 4 and G.betti() == 1 and G.base == "p"


def test_edge_tsv_bad_number_position():
    with pytest.raises(ParseError) as err:
        parse_edge_tsv("p\ta\t1\na\tb\tone\n")
    assert (err.value.line, err.value.column) == (2, 5)


def test_edge_tsv_wrong_field_count():
    with pytest.raises(ParseError) as err:
        parse_edge_tsv("p a 1\nq r\n")
    assert err.value.line == 2


def test_matrix_csv_with_and_without_row_labels():
    plain = parse_matrix_csv("a,b\n0,1\n1,0\n")
    labelled = parse_matrix_csv(",a,b\na,0,1\nb,1,0\n")
    assert plain.labels == labelled.labels == ("a", "b")
    np.testing.assert_array_equal(plain.d, labelled.d)


def test_matrix_csv_bad_cell_position():
    with pytest.raises(ParseError) as err:
        parse_matrix_csv("a,b,c\n0,1,2\n1,0,?\n2,1,0\n")
    assert (err.value.line, err.value.column) == (3, 5)


def test_matrix_csv_row_count():
    with pytest.raises(ParseError):
        parse_matrix_csv("a,b\n0,1\n")


def test_matrix_triangle_violation():
    with pytest.raises(MetricError) as err:
        parse_matrix_csv("a,b,c\n0,1,5\n1,0,1\n5,1,0\n")
    assert err.value.triple is not None


def test_matrix_json():
    X = parse_matrix_json('{"labels": ["u", "v"], "d": [[0, 3], [3, 0]]}')
    assert X.d[0, 1] == 3


def test_poset_json():
    fp = parse_poset_json('{"labels": ["a", "b", "c"], "covers": [["a", "b"], ["c", "b"]], "f": [0, 2, 1]}')
    assert fp.poset.cover_pairs() == [(0, 1), (2, 1)]
    fp2 = parse_poset_json('{"n": 3, "covers": [[0, 1], [2, 1]], "f": [0, 2, 1]}')
    assert fp2.poset.same_order(fp.poset)
    with pytest.raises(ParseError):
        parse_poset_json('{"n": 3, "covers": [[0, 1], [2, 1]], "f": [0, 2]}')


@pytest.mark.parametrize("path, text, fmt", [
    ("g.tsv", "a b 1", "edge-tsv"),
    ("g.csv", "a,b\n0,1\n1,0", "matrix-csv"),
    ("g.json", '{"edges": []}', "graph-json"),
    ("g.json", '{"labels": [], "d": []}', "matrix-json"),
    (None, '{"covers": [], "f": []}', "poset-json"),
    (None, "a,b\n0,1\n1,0", "matrix-csv"),
    (None, "a b 1", "edge-tsv"),
])
def test_detect_format(path, text, fmt):
    assert detect_format(path, text) == fmt


def test_read_input_from_text():
    G = read_input(None, text="p a 1\na b 1\n", base="a")
    assert G.base == "a"


@pytest.mark.parametrize("x, s", [(2.0, "2"), (0.0, "0"), (1 / 3, "0.333333333333"), (7.169925001442312, "7.16992500144")])
def test_format_number(x, s):
    assert format_number(x) == s


def test_newick_quotes_and_lengths():
    T = ReebTree.from_parents([None, 0, 0], [0, 1.5, 2], labels=["root", "a b", "it's"])
    s = to_newick(T)
    assert s == "('a b':1.5,'it''s':2)root;"
    nodes = parse_newick(s)
    assert [n for n, _, _ in nodes] == ["root", "a b", "it's"]


def test_newick_parse_errors():
    with pytest.raises(ParseError) as err:
        parse_newick("(a:1,b:2")
    assert err.value.column == 9
    with pytest.raises(ParseError):
        parse_newick("(a:x)r;")
    with pytest.raises(ParseError):
        parse_newick("a; b")


def _roundtrip(T):
    names, d = newick_distances(parse_newick(to_newick(T)))
    order = [names.index(s) for s in T.labels]
    np.testing.assert_allclose(d[np.ix_(order, order)], tree_metric_tf(T), atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10))
def test_newick_roundtrip_posets(seed, n):
    T, _ = reeb_tree(random_poset(np.random.default_rng(seed), n))
    _roundtrip(T)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7))
def test_newick_roundtrip_graphs(seed, n):
    G = random_graph(np.random.default_rng(seed), n)
    _roundtrip(approximate_graph(G, G.vertices[0]).tree)


def test_dot_ranks_by_level():
    fp = parse_poset_json('{"labels": ["p", "a", "b", "c"], "covers": [["p","a"],["a","b"],["p","c"],["c","b"]], "f": [0,1,2,1]}')
    dot = to_dot(fp)
    assert '{ rank=same; "a" "c" }' in dot
    assert '"p" -> "a";' in dot and dot.count("->") == 4
