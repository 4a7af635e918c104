"""The ``Z_n`` family: a graph where Gromov's bound and the Betti bound grow alike.

The graph is a fan of ``n`` bananas hanging off a base point ``p``: edges
``p - x_i`` of length ``R`` for ``i = 0..n`` and edges ``x_{i-1} - y_i``,
``x_i - y_i`` of length ``r`` for ``i = 1..n``. It has ``2n + 2`` vertices,
``3n + 1`` edges, first Betti number ``n``, and under ``<=_p`` the sequence
``x_0, y_1, x_1, ..., y_n, x_n`` is a fence of length ``2n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..graph import (
    MetricGraph,
    approximate_graph,
    induce_poset,
    hyp_full,
    p_regularity_violations,
    regularize,
)
from ..metric import FiniteMetricSpace, complete_graph_embedding, phi_of_embedding
from ..poset import Fence, betti_covering
from ..reeb import TOL


@dataclass(frozen=True)
class ZnInstance:
    n: int
    R: float
    r: float
    graph: MetricGraph
    sample: tuple[str, ...]
    fence: tuple[str, ...]

    def metric_space(self) -> FiniteMetricSpace:
        return FiniteMetricSpace.from_graph(self.graph)


def make_zn(n: int, R: float = 1.0, r: float = 1.0) -> ZnInstance:
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    if not (R >= r > 0):
        raise ValueError("need R >= r > 0")
    xs = [f"x{i}" for i in range(n + 1)]
    ys = [f"y{i}" for i in range(1, n + 1)]
    edges = [("p", x, R) for x in xs]
    for i in range(1, n + 1):
        edges += [(xs[i - 1], ys[i - 1], r), (xs[i], ys[i - 1], r)]
    sample = ("p", *xs, *ys)
    G = MetricGraph(sample, edges, base="p")
    fence = tuple(v for pair in zip(xs, ys + [None]) for v in pair if v is not None)

    assert G.betti() == n, "Z_n must have first Betti number n"
    assert not p_regularity_violations(G, "p"), "Z_n graph must be p-regular"
    rp = induce_poset(G, "p")
    Fence(tuple(rp.poset.index(v) for v in fence)).check(rp.poset)
    return ZnInstance(n, R, r, G, sample, fence)


def subdivide(G: MetricGraph, k: int) -> MetricGraph:
    """Split every edge into ``k`` equal pieces (a finer sample of the same metric graph)."""
    vertices = list(G.vertices)
    edges = []
    for u, v, L in G.edges():
        prev = u
        for j in range(1, k):
            mid = f"{u}~{v}#{j}"
            vertices.append(mid)
            edges.append((prev, mid, L / k))
            prev = mid
        edges.append((prev, v, L / k))
    return MetricGraph(vertices, edges, base=G.base)


def verify_lower_bound_argument(Z: ZnInstance, G: MetricGraph | None = None,
                                *, tol: float = TOL) -> dict:
    """Check that any isometric host graph keeps the 2n-fence and has ``beta1 >= n - 1``.

    ``G`` defaults to the ``Z_n`` graph itself; it is regularized at ``p``
    before the poset ``<=_p`` is formed.
    """
    if G is None:
        G = Z.graph
    X = Z.metric_space()
    idx = [G.index(v) for v in X.labels]
    dg = np.asarray(G.distance_matrix(), dtype=float)[np.ix_(idx, idx)]
    if np.abs(dg - X.d).max() > tol:
        raise ValueError("embedding is not isometric on Z_n")
    G2, _ = regularize(G, "p", tol=tol)
    rp = induce_poset(G2, "p", tol=tol)
    fence = Fence(tuple(rp.poset.index(v) for v in Z.fence))
    found = fence.is_fence_in(rp.poset)
    beta = betti_covering(rp.poset)
    return {
        "n": Z.n,
        "fence_found": found,
        "fence_length": fence.length,
        "betti": beta,
        "betti_lower": Z.n - 1,
        "vertices": G2.n,
        "ok": found and fence.length == 2 * Z.n and beta >= Z.n - 1 and beta == G2.betti(),
    }


def growth_comparison(n_range, R: float = 1.0, r: float = 1.0, *,
                      complete_max_n: int = 0, tol: float = TOL) -> list[dict]:
    """Per ``n``: hyp(Z_n), Gromov's bound, phi of the ``Z_n`` graph, observed distortion.

    ``ratio`` is ``phi / upsilon`` and must be 1 when ``R == r``.
    ``phi_upper`` also considers the complete-graph embedding for
    ``n <= complete_max_n`` (that graph is large, so it is opt-in).
    """
    rows = []
    for n in n_range:
        Z = make_zn(n, R, r)
        d = np.asarray(Z.graph.distance_matrix(), dtype=float)
        hyp = hyp_full(d)
        upsilon = 2.0 * hyp * math.log2(2 * len(Z.sample)) if hyp > 0 else 0.0
        phi = phi_of_embedding(Z.graph, "p", tol=tol)
        res = approximate_graph(Z.graph, "p", mf_mode="exact", tol=tol)
        phis = [phi]
        if n <= complete_max_n:
            phis.append(phi_of_embedding(complete_graph_embedding(Z.metric_space()), "p", tol=tol))
        phi_upper = min(phis)
        lower = 2.0 * math.log2(4 * n) * hyp
        rep = res.report
        ratio = phi / upsilon if upsilon > 0 else math.nan
        row = {
            "n": n,
            "hyp": hyp,
            "upsilon": upsilon,
            "phi": phi,
            "distortion": rep.distortion,
            "ratio": ratio,
            "bound_main": rep.bound_main,
            "lower": lower,
            "phi_upper": phi_upper,
        }
        row["ok"] = bool(
            rep.distortion <= min(upsilon, phi, rep.bound_main) + tol
            and lower <= phi_upper + tol
            and (R != r or abs(ratio - 1.0) <= 1e-9))
        rows.append(row)
    return rows
