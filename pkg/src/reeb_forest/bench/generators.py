"""Seeded random posets, graphs and metric spaces for property checks."""

from __future__ import annotations

from typing import Iterator

import numpy as np
from scipy.sparse.csgraph import connected_components

from ..graph import MetricGraph
from ..metric import FiniteMetricSpace
from ..poset import Poset, transitive_closure
from ..reeb import FilteredPoset, ReebPoset

KINDS = ("poset", "filtered", "tree", "graph", "metric")


def _connected_dag(rng: np.random.Generator, n: int, p_edge: float) -> np.ndarray:
    rel = np.triu(rng.random((n, n)) < p_edge, 1)
    comp = transitive_closure(rel)
    ncomp, lab = connected_components(comp | comp.T, directed=False)
    if ncomp > 1:
        reps = [rng.choice(np.flatnonzero(lab == c)) for c in range(ncomp)]
        for a, b in zip(reps, reps[1:]):
            rel[min(a, b), max(a, b)] = True
    return transitive_closure(rel)


def _tree_order(rng: np.random.Generator, n: int) -> np.ndarray:
    rel = np.zeros((n, n), dtype=bool)
    for j in range(1, n):
        rel[rng.integers(0, j), j] = True
    return transitive_closure(rel)


def _filtration(rng: np.random.Generator, leq: np.ndarray, strict: bool) -> np.ndarray:
    # leq is upper triangular in index order, so predecessors come first
    n = leq.shape[0]
    f = np.zeros(n)
    lo = 1 if strict else 0
    for j in range(n):
        below = np.flatnonzero(leq[:j, j])
        start = f[below].max() if below.size else float(rng.integers(0, 3))
        f[j] = start + (rng.integers(lo, 4) if below.size else 0)
    return f


def _permute(rng: np.random.Generator, leq: np.ndarray, f: np.ndarray):
    perm = rng.permutation(leq.shape[0])
    return leq[np.ix_(perm, perm)], f[perm]


def random_poset(rng: np.random.Generator, n: int, *, strict: bool = True,
                 tree: bool = False) -> FilteredPoset:
    leq = _tree_order(rng, n) if tree else _connected_dag(rng, n, rng.uniform(0.15, 0.6))
    f = _filtration(rng, leq, strict)
    leq, f = _permute(rng, leq, f)
    P = Poset(leq, [f"e{i}" for i in range(n)])
    return ReebPoset(P, f) if strict else FilteredPoset(P, f)


def random_graph(rng: np.random.Generator, n: int, *, max_length: int = 4) -> MetricGraph:
    labels = [f"v{i}" for i in range(n)]
    edges = {}
    for j in range(1, n):
        i = int(rng.integers(0, j))
        edges[(i, j)] = int(rng.integers(1, max_length + 1))
    q = rng.uniform(0.0, 0.4)
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in edges and rng.random() < q:
                edges[(i, j)] = int(rng.integers(1, max_length + 1))
    return MetricGraph(labels, [(labels[i], labels[j], L) for (i, j), L in sorted(edges.items())])


def random_metric(rng: np.random.Generator, n: int) -> FiniteMetricSpace:
    G = random_graph(rng, n)
    return FiniteMetricSpace([f"m{i}" for i in range(n)], np.asarray(G.distance_matrix(), dtype=float))


def random_instances(kind: str, size: int, seed: int, count: int | None = None,
                     min_size: int = 1) -> Iterator:
    """Deterministic stream of random instances with ``min_size..size`` elements.

    ``kind`` is one of ``poset`` (Reeb posets), ``filtered`` (order
    preserving, ties allowed), ``tree`` (Reeb tree posets), ``graph``
    (connected metric graphs with integer lengths) or ``metric`` (shortest
    path metrics of random graphs).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
    rng = np.random.default_rng(seed)
    made = 0
    while count is None or made < count:
        n = int(rng.integers(min_size, size + 1))
        if kind == "poset":
            yield random_poset(rng, n)
        elif kind == "filtered":
            yield random_poset(rng, n, strict=False)
        elif kind == "tree":
            yield random_poset(rng, n, tree=True)
        elif kind == "graph":
            yield random_graph(rng, n)
        else:
            yield random_metric(rng, n)
        made += 1
