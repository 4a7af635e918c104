"""Finite metric spaces: graph embeddings, Gromov's bound and the tree metric ``t_X``."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .graph import GraphApproximation, MetricGraph, approximate_graph, graph_bound, hyp_full, regularize
from .poset import DEFAULT_FENCE_BUDGET
from .reeb import TOL
from .report import ApproximationReport

__all__ = [
    "MetricError",
    "EmbeddingError",
    "FiniteMetricSpace",
    "complete_graph_embedding",
    "gromov_bound_upsilon",
    "phi_of_embedding",
    "tree_approx_metric_space",
    "approximate_metric_space",
    "sweep_bases",
    "tree_realization",
    "four_point_defect",
]


class MetricError(ValueError):
    """Invalid distance matrix; ``pair``/``triple`` name the offending points."""

    def __init__(self, message: str, *, pair=None, triple=None):
        super().__init__(message)
        self.pair = pair
        self.triple = triple


class EmbeddingError(ValueError):
    def __init__(self, message: str, pair=None):
        super().__init__(message)
        self.pair = pair


class FiniteMetricSpace:
    """Labelled points with a validated distance matrix."""

    def __init__(self, labels: Sequence, d, *, tol: float = TOL):
        d = np.array(d, dtype=float)
        labels = tuple(str(s) for s in labels)
        n = len(labels)
        if d.shape != (n, n):
            raise MetricError(f"distance matrix must be {n}x{n}, got {d.shape}")
        if len(set(labels)) != n:
            raise MetricError("labels must be distinct")
        if not np.isfinite(d).all():
            raise MetricError("distances must be finite")
        for i in range(n):
            if abs(d[i, i]) > tol:
                raise MetricError(f"nonzero diagonal at {labels[i]}", pair=(labels[i], labels[i]))
        asym = np.abs(d - d.T) > tol
        if asym.any():
            i, j = map(int, np.argwhere(asym)[0])
            raise MetricError(f"not symmetric: d({labels[i]},{labels[j]}) != d({labels[j]},{labels[i]})",
                              pair=(labels[i], labels[j]))
        off = ~np.eye(n, dtype=bool)
        if (d[off] <= 0).any():
            i, j = map(int, np.argwhere((d <= 0) & off)[0])
            raise MetricError(f"non-positive distance between {labels[i]} and {labels[j]}",
                              pair=(labels[i], labels[j]))
        # viol[i, j, k]: d(i, k) > d(i, j) + d(j, k)
        for j in range(n):
            viol = d > d[:, j, None] + d[None, j, :] + tol
            if viol.any():
                i, k = map(int, np.argwhere(viol)[0])
                raise MetricError(
                    f"triangle inequality fails: d({labels[i]},{labels[k]}) = {d[i, k]:g} > "
                    f"d({labels[i]},{labels[j]}) + d({labels[j]},{labels[k]}) = "
                    f"{d[i, j] + d[j, k]:g}", triple=(labels[i], labels[j], labels[k]))
        d = (d + d.T) / 2
        np.fill_diagonal(d, 0.0)
        d.setflags(write=False)
        self.labels = labels
        self.d = d
        self._index = {s: i for i, s in enumerate(labels)}

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        return f"FiniteMetricSpace(n={len(self)})"

    def index(self, label) -> int:
        return self._index[str(label)]

    def distance_matrix(self) -> np.ndarray:
        return self.d

    @classmethod
    def from_graph(cls, G: MetricGraph) -> "FiniteMetricSpace":
        return cls(G.vertices, np.asarray(G.distance_matrix(), dtype=float))


def complete_graph_embedding(X: FiniteMetricSpace) -> MetricGraph:
    """Every pair joined by an edge of length ``d(x, y)``; isometric on ``X``."""
    n = len(X)
    edges = [(X.labels[i], X.labels[j], float(X.d[i, j])) for i in range(n) for j in range(i + 1, n)]
    return MetricGraph(X.labels, edges)


def tree_realization(X: FiniteMetricSpace, *, tol: float = TOL) -> MetricGraph:
    """Weighted tree whose vertex distances restrict to ``d_X``; needs hyp(X) = 0.

    Points are inserted one at a time. A new point ``z`` hangs off the
    current tree at height ``h = min (d(a, z) + d(b, z) - d(a, b)) / 2``
    over placed pairs, on the path from ``a`` to ``b`` at ``d(a, z) - h``
    from ``a``. Branch points that are not in ``X`` get fresh ``s<k>`` labels.
    """
    if four_point_defect(X.d) > tol:
        raise MetricError("not a tree metric (four-point condition fails)")
    labels, d = X.labels, X.d
    taken = set(labels)
    names = [labels[0]]
    adj: dict[str, dict[str, float]] = {labels[0]: {}}
    steiner = 0

    def link(u, v, L):
        adj[u][v] = adj[v][u] = float(L)

    def path(a, b):
        prev = {a: None}
        stack = [a]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in prev:
                    prev[v] = u
                    stack.append(v)
        out = [b]
        while out[-1] != a:
            out.append(prev[out[-1]])
        return out[::-1]

    placed = [0]
    for z in range(1, len(labels)):
        best = None
        for i in placed:
            for j in placed:
                if j < i:
                    continue
                h = (d[i, z] + d[j, z] - d[i, j]) / 2
                if best is None or h < best[0] - tol:
                    best = (h, i, j)
        h, i, j = best
        h = max(h, 0.0)
        offset = d[i, z] - h
        route = path(labels[i], labels[j])
        at, walked = None, 0.0
        for u, v in zip(route, route[1:] + [None]):
            if abs(walked - offset) <= tol:
                at = u
                break
            L = adj[u][v]
            if walked + L > offset + tol:
                # split edge u-v at the attachment point
                while f"s{steiner}" in taken:
                    steiner += 1
                at = labels[z] if h <= tol else f"s{steiner}"
                taken.add(at)
                adj[at] = {}
                del adj[u][v], adj[v][u]
                link(u, at, offset - walked)
                link(at, v, walked + L - offset)
                break
            walked += L
        if at != labels[z]:
            if h <= tol:
                # the attachment point is an earlier branch point: rename it
                adj[labels[z]] = adj.pop(at)
                for v, L in adj[labels[z]].items():
                    del adj[v][at]
                    adj[v][labels[z]] = L
            else:
                adj[labels[z]] = {}
                link(at, labels[z], h)
        placed.append(z)
    vertices = list(labels) + sorted(v for v in adj if v not in set(labels))
    edges = sorted({(min(u, v), max(u, v), L) for u in adj for v, L in adj[u].items()})
    return MetricGraph(vertices, edges)


def gromov_bound_upsilon(X) -> float:
    """``2 hyp(X) log2(2 |X|)``."""
    d = X.distance_matrix() if hasattr(X, "distance_matrix") else np.asarray(X, dtype=float)
    h = hyp_full(d)
    return 2.0 * h * math.log2(2 * d.shape[0]) if h > 0 else 0.0


def phi_of_embedding(G: MetricGraph, base=None, *, tol: float = TOL, exact: bool = False) -> float:
    """``2 hyp log2(4 beta1 + 4)`` for a metric graph.

    ``hyp`` is taken on the vertex set of ``G`` regularized at ``base``
    (default: the graph's base point, else its first vertex), a finite
    proxy for the hyperbolicity of the whole graph.
    """
    if base is None:
        base = G.base if G.base is not None else G.vertices[0]
    G2, _ = regularize(G, base, tol=tol, exact=exact)
    return graph_bound(G.betti(), hyp_full(np.asarray(G2.distance_matrix(), dtype=float)))


def four_point_defect(t: np.ndarray) -> float:
    """Hyperbolicity of a (pseudo-)metric matrix; zero for tree metrics."""
    return hyp_full(np.asarray(t, dtype=float))


def _check_isometric(X: FiniteMetricSpace, G: MetricGraph, tol: float) -> None:
    missing = [s for s in X.labels if s not in G.vertices]
    if missing:
        raise EmbeddingError(f"embedding lacks points {missing}")
    idx = [G.index(s) for s in X.labels]
    dg = np.asarray(G.distance_matrix(), dtype=float)[np.ix_(idx, idx)]
    bad = np.abs(dg - X.d) > tol
    if bad.any():
        i, j = map(int, np.argwhere(bad)[0])
        raise EmbeddingError(
            f"embedding not isometric: d({X.labels[i]},{X.labels[j]}) = {X.d[i, j]:g} "
            f"but graph distance is {dg[i, j]:g}", pair=(X.labels[i], X.labels[j]))


def sweep_bases(G: MetricGraph, bases: Sequence[str], *, points: Sequence[str] | None = None,
                mf_mode: str = "bound", tol: float = TOL, exact: bool = False,
                budget: int = DEFAULT_FENCE_BUDGET) -> GraphApproximation:
    """Run the graph pipeline at each base and keep the smallest graph bound.

    Ties go to the earlier base in ``bases``.
    """
    best = None
    for b in bases:
        res = approximate_graph(G, b, mf_mode=mf_mode, tol=tol, exact=exact, budget=budget,
                                points=points)
        if best is None or res.report.bound_graph < best.report.bound_graph - tol:
            best = res
    if len(bases) > 1:
        best.report.notes.append(f"base chosen by sweep over {len(bases)} points")
    return best


def approximate_metric_space(X: FiniteMetricSpace, embedding: MetricGraph | None = None,
                             base=None, *, mf_mode: str = "bound", tol: float = TOL,
                             exact: bool = False, budget: int = DEFAULT_FENCE_BUDGET,
                             compare_complete: bool = True) -> GraphApproximation:
    """Like :func:`tree_approx_metric_space` but returns the whole pipeline result."""
    notes = []
    if embedding is not None:
        G = embedding
    elif len(X) > 1 and four_point_defect(X.d) <= tol:
        G = tree_realization(X, tol=tol)
        notes.append("tree metric: embedded in its tree realization")
    else:
        G = complete_graph_embedding(X)
    _check_isometric(X, G, tol)
    bases = [str(base)] if base is not None else list(X.labels)
    best = sweep_bases(G, bases, points=X.labels, mf_mode=mf_mode, tol=tol, exact=exact,
                       budget=budget)
    rep = best.report
    rep.upsilon = gromov_bound_upsilon(X)
    phis = [rep.phi_of_G]
    if embedding is not None and compare_complete:
        phis.append(phi_of_embedding(complete_graph_embedding(X), rep.base, tol=tol, exact=exact))
    rep.phi_upper = min(phis)
    rep.notes += notes
    return best


def tree_approx_metric_space(X: FiniteMetricSpace, embedding: MetricGraph | None = None,
                             base=None, *, mf_mode: str = "bound", tol: float = TOL,
                             exact: bool = False, budget: int = DEFAULT_FENCE_BUDGET,
                             compare_complete: bool = True) -> tuple[np.ndarray, ApproximationReport]:
    """Tree pseudo-metric ``t_X`` on ``X`` through a graph embedding.

    Without ``base`` every point of ``X`` is tried and the one with the
    smallest graph bound wins (ties go to the earlier label). The report's
    ``phi_upper`` is the smallest ``phi`` among the supplied embedding and
    the complete-graph embedding: an upper bound on the infimum over all
    embeddings, not the infimum itself.
    """
    res = approximate_metric_space(X, embedding, base, mf_mode=mf_mode, tol=tol, exact=exact,
                                   budget=budget, compare_complete=compare_complete)
    return res.tree_metric_on(X.labels), res.report
