"""Metric graphs, base-point regularization and the graph-to-Reeb-poset pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .poset import DEFAULT_FENCE_BUDGET, Poset, betti_covering
from .reeb import (
    TOL,
    Projection,
    ReebPoset,
    ReebTree,
    floyd_warshall,
    gromov_products,
    hyp_poset,
    induced_metric_df,
    poset_bound,
    product_defect,
    pulled_back_tf,
    reeb_tree,
    resolve_mf,
)
from .report import ApproximationReport

__all__ = [
    "GraphError",
    "PRegularityError",
    "MetricGraph",
    "AddedVertex",
    "RegularizationTrace",
    "GraphApproximation",
    "shortest_paths",
    "regularize",
    "p_regularity_violations",
    "induce_poset",
    "gromov_products_base",
    "hyp_base",
    "hyp_all_bases",
    "hyp_full",
    "graph_bound",
    "approximate_graph",
    "tree_approx_graph",
]


class GraphError(ValueError):
    pass


class PRegularityError(GraphError):
    def __init__(self, clause: str, edge: tuple[str, str], detail: str):
        self.clause = clause
        self.edge = edge
        super().__init__(f"graph is not p-regular: clause ({clause}) fails on edge "
                         f"{edge[0]}-{edge[1]}: {detail}")


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    # decimal repr keeps user-facing values like 0.1 as 1/10
    return Fraction(repr(float(x)))


class MetricGraph:
    """Finite connected simple graph with positive edge lengths.

    Lengths may be ints, floats or ``Fraction``; a graph holding any
    ``Fraction`` computes its distances exactly.
    """

    def __init__(self, vertices: Sequence, edges: Iterable[tuple], base=None):
        self.vertices = tuple(str(v) for v in vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise GraphError("vertex labels must be distinct")
        self._index = {v: i for i, v in enumerate(self.vertices)}
        n = len(self.vertices)
        self.lengths: dict[tuple[int, int], Real] = {}
        adj: list[list[int]] = [[] for _ in range(n)]
        for e in edges:
            u, v, length = e
            i, j = self.index(u), self.index(v)
            if i == j:
                raise GraphError(f"loop at {self.vertices[i]}")
            key = (min(i, j), max(i, j))
            if key in self.lengths:
                raise GraphError(f"multiple edges between {self.vertices[i]} and {self.vertices[j]}")
            if not length > 0:
                raise GraphError(f"edge {self.vertices[i]}-{self.vertices[j]} has non-positive length")
            if isinstance(length, float) and not math.isfinite(length):
                raise GraphError(f"edge {self.vertices[i]}-{self.vertices[j]} has infinite length")
            self.lengths[key] = length
            adj[i].append(j)
            adj[j].append(i)
        self.adj = tuple(tuple(sorted(a)) for a in adj)
        if n == 0:
            raise GraphError("graph has no vertices")
        if n > 1:
            a = np.zeros((n, n), dtype=bool)
            for i, j in self.lengths:
                a[i, j] = True
            if connected_components(a, directed=False)[0] > 1:
                raise GraphError("graph is not connected")
        self.base = None if base is None else self.vertices[self.index(base)]
        self._dist = None

    def __repr__(self) -> str:
        return f"MetricGraph(V={self.n}, E={len(self.lengths)}, base={self.base!r})"

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def exact(self) -> bool:
        return any(isinstance(x, Fraction) for x in self.lengths.values())

    def index(self, v) -> int:
        if isinstance(v, (int, np.integer)) and not isinstance(v, bool) and str(v) not in self._index:
            if 0 <= v < self.n:
                return int(v)
        try:
            return self._index[str(v)]
        except KeyError:
            raise GraphError(f"{v!r} is not a vertex") from None

    def edges(self) -> list[tuple[str, str, Real]]:
        return [(self.vertices[i], self.vertices[j], L) for (i, j), L in sorted(self.lengths.items())]

    def length(self, u, v) -> Real:
        i, j = self.index(u), self.index(v)
        return self.lengths[(min(i, j), max(i, j))]

    def betti(self) -> int:
        return 1 - self.n + len(self.lengths)

    def as_exact(self) -> "MetricGraph":
        return MetricGraph(self.vertices, [(u, v, _exact(L)) for u, v, L in self.edges()], self.base)

    def with_base(self, base) -> "MetricGraph":
        return MetricGraph(self.vertices, self.edges(), base)

    def weight_matrix(self) -> np.ndarray:
        if self.exact:
            w = np.full((self.n, self.n), math.inf, dtype=object)
        else:
            w = np.full((self.n, self.n), np.inf)
        for (i, j), L in self.lengths.items():
            w[i, j] = w[j, i] = L
        return w

    def distance_matrix(self) -> np.ndarray:
        if self._dist is None:
            d = floyd_warshall(self.weight_matrix())
            d.setflags(write=False)
            self._dist = d
        return self._dist


def shortest_paths(G: MetricGraph) -> np.ndarray:
    """Exact all-pairs shortest-path distances (object dtype for exact graphs)."""
    return G.distance_matrix()


@dataclass(frozen=True)
class AddedVertex:
    label: str
    host: tuple[str, str]
    offset: Real
    reason: str  # "apex" | "midpoint"

    def to_dict(self) -> dict:
        return {"label": self.label, "host": list(self.host), "offset": float(self.offset),
                "reason": self.reason}


@dataclass
class RegularizationTrace:
    added: list[AddedVertex] = field(default_factory=list)
    vertex_map: dict[str, int] = field(default_factory=dict)

    @property
    def n_apex(self) -> int:
        return sum(a.reason == "apex" for a in self.added)

    @property
    def n_midpoint(self) -> int:
        return sum(a.reason == "midpoint" for a in self.added)

    def to_list(self) -> list[dict]:
        return [a.to_dict() for a in self.added]


def _fmt(x) -> str:
    return str(x) if isinstance(x, Fraction) else f"{float(x):.12g}"


def _fresh(label: str, taken: set[str]) -> str:
    while label in taken:
        label += "'"
    taken.add(label)
    return label


def regularize(G: MetricGraph, p, *, tol: float = TOL,
               exact: bool = False) -> tuple[MetricGraph, RegularizationTrace]:
    """Subdivide ``G`` until it is ``p``-regular.

    First each edge ``{v, w}`` of length ``L`` gets its apex, the point at
    offset ``s = (L + d(p, w) - d(p, v)) / 2`` from ``v`` where ``d(p, .)``
    peaks, whenever ``0 < s < L``. Then every edge that ties with another
    path between its endpoints is split at its midpoint. Distances between
    the original vertices do not change. Offsets within ``tol`` of an
    endpoint count as the endpoint; ``exact=True`` switches to rational
    arithmetic with no tolerance.
    """
    if exact or G.exact:
        G = G.as_exact() if not G.exact else G
        tol = 0
    pi = G.index(p)
    dp = G.distance_matrix()[pi]
    labels = list(G.vertices)
    taken = set(labels)
    added: list[AddedVertex] = []
    # segments: (a, b, length, host, offset of a along host, offset of b along host)
    segs: list[tuple] = []
    for (i, j), L in sorted(G.lengths.items()):
        host = (G.vertices[i], G.vertices[j])
        s = (L + dp[j] - dp[i]) / 2
        if not isinstance(s, Fraction):
            s = float(s)
        if tol < s < L - tol:
            t = len(labels)
            labels.append(_fresh(f"{host[0]}~{host[1]}@{_fmt(s)}", taken))
            added.append(AddedVertex(labels[t], host, s, "apex"))
            segs.append((i, t, s, host, 0 * L, s))
            segs.append((t, j, L - s, host, s, L))
        else:
            segs.append((i, j, L, host, 0 * L, L))

    G1 = MetricGraph(labels, [(labels[a], labels[b], L) for a, b, L, *_ in segs], G.vertices[pi])
    d1 = G1.distance_matrix()
    out_edges = []
    for a, b, L, host, oa, ob in segs:
        # another a-b path of length <= L must leave a through a different edge
        alt = min((G1.lengths[(min(a, u), max(a, u))] + d1[u, b] for u in G1.adj[a] if u != b),
                  default=math.inf)
        if alt <= L + tol:
            m = len(labels)
            off = (oa + ob) / 2
            labels.append(_fresh(f"{host[0]}~{host[1]}@{_fmt(off)}", taken))
            added.append(AddedVertex(labels[m], host, off, "midpoint"))
            out_edges += [(labels[a], labels[m], L / 2), (labels[m], labels[b], L / 2)]
        else:
            out_edges.append((labels[a], labels[b], L))
    G2 = MetricGraph(labels, out_edges, G.vertices[pi])
    return G2, RegularizationTrace(added, {v: G2.index(v) for v in G.vertices})


def p_regularity_violations(G: MetricGraph, p, *, tol: float = TOL) -> list[tuple[str, tuple[str, str], str]]:
    """``(clause, edge, detail)`` for every failure of the two regularity clauses."""
    if G.exact:
        tol = 0
    d = G.distance_matrix()
    pi = G.index(p)
    out = []
    for (i, j), L in sorted(G.lengths.items()):
        edge = (G.vertices[i], G.vertices[j])
        rise = abs(d[pi, i] - d[pi, j])
        if abs(L - d[i, j]) > tol or abs(L - rise) > tol:
            out.append(("i", edge, f"l={_fmt(L)}, d={_fmt(d[i, j])}, |dp diff|={_fmt(rise)}"))
        alt = min((G.lengths[(min(i, u), max(i, u))] + d[u, j] for u in G.adj[i] if u != j),
                  default=math.inf)
        if alt <= L + tol:
            out.append(("ii", edge, f"another path of length {_fmt(alt)} <= {_fmt(L)}"))
    return out


def _snap(values: np.ndarray, tol: float) -> np.ndarray:
    """Merge filtration values closer than ``tol`` into the smallest of each run."""
    out = values.copy()
    if tol <= 0 or values.size == 0:
        return out
    order = np.argsort(values, kind="stable")
    anchor = values[order[0]]
    for k in order:
        if values[k] - anchor > tol:
            anchor = values[k]
        out[k] = anchor
    return out


def induce_poset(G: MetricGraph, p, *, tol: float = TOL, check: bool = True) -> ReebPoset:
    """The Reeb poset ``(V, <=_p, d(p, .))`` of a ``p``-regular graph.

    ``x <=_p y`` iff ``d(p, y) - d(p, x) = d(x, y)``.
    """
    if G.exact:
        tol = 0
    if check:
        bad = p_regularity_violations(G, p, tol=tol)
        if bad:
            raise PRegularityError(*bad[0])
    d = G.distance_matrix()
    dp = d[G.index(p)]
    slack = dp[None, :] - dp[:, None] - d
    if d.dtype == object:
        leq = np.vectorize(lambda s: s == 0, otypes=[bool])(slack)
    else:
        leq = np.abs(slack) <= tol
    f = _snap(np.array(dp, dtype=float), tol)
    return ReebPoset(Poset(leq, G.vertices), f)


def _matrix(X) -> np.ndarray:
    if hasattr(X, "distance_matrix"):
        X = X.distance_matrix()
    return np.asarray(X, dtype=float)


def _base_index(X, p) -> int:
    if hasattr(X, "index"):
        return X.index(p)
    return int(p)


def gromov_products_base(d: np.ndarray, p: int) -> np.ndarray:
    return (d[p, :, None] + d[p, None, :] - d) / 2.0


def hyp_base(X, p) -> float:
    """``p``-hyperbolicity by an exact triple scan."""
    return product_defect(gromov_products_base(_matrix(X), _base_index(X, p)))


def hyp_all_bases(X) -> np.ndarray:
    d = _matrix(X)
    return np.array([product_defect(gromov_products_base(d, p)) for p in range(d.shape[0])])


def hyp_full(X) -> float:
    """Hyperbolicity: the largest ``p``-hyperbolicity over all base points."""
    return float(hyp_all_bases(X).max())


def graph_bound(beta: int, hyp: float) -> float:
    """``2 log2(4 beta + 4) hyp``."""
    if hyp <= 0.0:
        return 0.0
    return 2.0 * math.log2(4 * beta + 4) * hyp


@dataclass
class GraphApproximation:
    tree: ReebTree
    projection: Projection
    report: ApproximationReport
    graph: MetricGraph          # regularized
    trace: RegularizationTrace
    d: np.ndarray               # shortest paths on the regularized graph
    t: np.ndarray               # pulled-back tree metric on the regularized graph

    def tree_metric_on(self, labels: Sequence[str]) -> np.ndarray:
        idx = [self.graph.index(v) for v in labels]
        return self.t[np.ix_(idx, idx)]


def approximate_graph(G: MetricGraph, p=None, *, mf_mode: str = "bound", tol: float = TOL,
                      exact: bool = False, budget: int = DEFAULT_FENCE_BUDGET,
                      points: Sequence[str] | None = None) -> GraphApproximation:
    """Full pipeline: regularize, induce the poset, take its Reeb tree, measure.

    ``points`` restricts the reported distortion (default: the vertices of
    ``G``); bounds always refer to the regularized graph.
    """
    if p is None:
        p = G.base if G.base is not None else G.vertices[0]
    p = G.vertices[G.index(p)]
    G2, trace = regularize(G, p, tol=tol, exact=exact)
    if G2.exact:
        tol = 0.0
    rp = induce_poset(G2, p, tol=tol)
    eps = tol if tol > 0 else TOL
    d = np.asarray(G2.distance_matrix(), dtype=float)
    T, proj = reeb_tree(rp)
    t = pulled_back_tf(T, proj)
    notes: list[str] = []

    # the Hasse diagram of (V, <=_p) is the graph itself, so both must match
    consistent = True
    if np.abs(induced_metric_df(rp) - d).max() > eps:
        consistent = False
        notes.append("Reeb metric differs from graph metric")
    beta = G2.betti()
    if betti_covering(rp.poset) != beta:
        consistent = False
        notes.append("covering graph Betti number differs from graph")

    g = gromov_products(rp, d)
    hyp_p = hyp_poset(rp, g)
    hyp = hyp_full(d)
    mf, mf_used, fallback, mf_notes = resolve_mf(rp.poset, mf_mode, budget)
    notes += mf_notes

    pts = list(G.vertices) if points is None else list(points)
    idx = np.array([G2.index(v) for v in pts])
    err_full = np.abs(d - t)
    err = err_full[np.ix_(idx, idx)]
    i, j = np.unravel_index(int(np.argmax(err)), err.shape)
    distortion = float(err[i, j])
    distortion_full = float(err_full.max())

    sub = d[np.ix_(idx, idx)]
    hyp_pts = hyp_full(sub)
    upsilon = 2.0 * hyp_pts * math.log2(2 * len(pts)) if hyp_pts > 0 else 0.0
    tsub = t[np.ix_(idx, idx)]
    collapsed = int(((tsub <= eps) & ~np.eye(len(pts), dtype=bool)).sum() // 2)

    bound_main = poset_bound(mf, hyp_p)
    bound_graph = graph_bound(beta, hyp)
    bound_graph_p = graph_bound(beta, hyp_p)
    ok_main = distortion_full <= bound_main + eps
    ok_graph = distortion <= bound_graph + eps and distortion <= bound_graph_p + eps
    ok_chain = distortion <= bound_main + eps and bound_main <= bound_graph_p + eps \
        and bound_graph_p <= bound_graph + eps
    report = ApproximationReport(
        base=p, n_points=len(pts), n_vertices=G2.n, distortion=distortion,
        distortion_full=distortion_full, worst_pair=(pts[i], pts[j]), hyp=hyp, hyp_p=hyp_p,
        betti=beta, MF=mf, MF_mode=mf_used, mf_cap=2 * beta + 2, bound_main=bound_main,
        bound_graph=bound_graph, bound_graph_p=bound_graph_p, phi_of_G=bound_graph,
        upsilon=upsilon, collapsed_pairs=collapsed, ok_main=ok_main, ok_graph=ok_graph,
        ok_chain=ok_chain, ok=ok_main and ok_graph and ok_chain and consistent,
        mf_fallback=fallback, trace=trace.to_list(), notes=notes)
    return GraphApproximation(T, proj, report, G2, trace, d, t)


def tree_approx_graph(G: MetricGraph, p=None, **kwargs) -> tuple[ReebTree, Projection, ApproximationReport]:
    """Tree approximation of a metric graph; see :func:`approximate_graph`."""
    res = approximate_graph(G, p, **kwargs)
    return res.tree, res.projection, res.report
