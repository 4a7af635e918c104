"""Definition-level brute-force oracles for small instances (about ten elements).

Nothing here calls the production algorithms: paths are enumerated
explicitly, fences come from subset enumeration, and the Reeb quotients are
computed straight from their defining relations.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from ..graph import MetricGraph
from ..poset import Poset
from ..reeb import FilteredPoset


def _neighbors(P: Poset) -> list[list[int]]:
    return [[y for y in range(P.n) if y != x and P.comparable[x, y]] for x in range(P.n)]


def simple_path_min(nbrs, weight, x: int, y: int) -> float:
    """Minimum of ``sum(weight)`` over simple paths from ``x`` to ``y``."""
    if x == y:
        return 0.0
    best = [math.inf]
    on_path = {x}

    def dfs(u, length):
        if length >= best[0]:
            return  # weights are non-negative
        for v in nbrs[u]:
            if v in on_path:
                continue
            step = length + weight(u, v)
            if v == y:
                best[0] = min(best[0], step)
                continue
            on_path.add(v)
            dfs(v, step)
            on_path.discard(v)

    dfs(x, 0.0)
    return best[0]


def simple_path_maximin(nbrs, value, x: int, y: int) -> float:
    """Maximum over simple paths from ``x`` to ``y`` of the minimum vertex value."""
    if x == y:
        return value(x)
    best = [-math.inf]
    on_path = {x}

    def dfs(u, low):
        if low <= best[0]:
            return  # the minimum along a path can only drop
        for v in nbrs[u]:
            if v in on_path:
                continue
            m = min(low, value(v))
            if v == y:
                best[0] = max(best[0], m)
                continue
            on_path.add(v)
            dfs(v, m)
            on_path.discard(v)

    dfs(x, value(x))
    return best[0]


def brute_df(fp: FilteredPoset) -> np.ndarray:
    nbrs = _neighbors(fp.poset)
    f = fp.f
    n = fp.n
    out = np.zeros((n, n))
    for x in range(n):
        for y in range(x + 1, n):
            out[x, y] = out[y, x] = simple_path_min(nbrs, lambda u, v: abs(f[u] - f[v]), x, y)
    return out


def brute_merge(fp: FilteredPoset) -> np.ndarray:
    nbrs = _neighbors(fp.poset)
    f = fp.f
    n = fp.n
    out = np.diag(np.array(f, dtype=float))
    for x in range(n):
        for y in range(x + 1, n):
            out[x, y] = out[y, x] = simple_path_maximin(nbrs, lambda u: f[u], x, y)
    return out


def brute_graph_distances(G: MetricGraph) -> np.ndarray:
    nbrs = [list(a) for a in G.adj]
    n = G.n
    out = np.zeros((n, n))
    w = lambda u, v: float(G.lengths[(min(u, v), max(u, v))])  # noqa: E731
    for x in range(n):
        for y in range(x + 1, n):
            out[x, y] = out[y, x] = simple_path_min(nbrs, w, x, y)
    return out


def count_geodesics(G: MetricGraph, x: int, y: int, tol: float = 1e-9) -> int:
    """Number of simple paths from ``x`` to ``y`` whose length is the distance."""
    target = float(np.asarray(G.distance_matrix(), dtype=float)[x, y])
    count = [0]
    on_path = {x}

    def dfs(u, length):
        if length > target + tol:
            return
        if u == y:
            count[0] += abs(length - target) <= tol
            return
        for v in G.adj[u]:
            if v not in on_path:
                on_path.add(v)
                dfs(v, length + float(G.lengths[(min(u, v), max(u, v))]))
                on_path.discard(v)

    dfs(x, 0.0)
    return count[0]


def _reachable(nbrs, start: int, allowed) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in nbrs[u]:
            if v not in seen and allowed(v):
                seen.add(v)
                stack.append(v)
    return seen


def definition_reeb_tree(fp: FilteredPoset) -> tuple[np.ndarray, np.ndarray]:
    """``(same, below)`` boolean matrices straight from the merge-tree relations.

    ``same[x, y]``: a comparability path joins them staying at or above
    ``max(f(x), f(y))``. ``below[x, y]``: a path from ``x`` to ``y`` staying
    at or above ``f(x)``.
    """
    nbrs = _neighbors(fp.poset)
    f = fp.f
    n = fp.n
    same = np.zeros((n, n), dtype=bool)
    below = np.zeros((n, n), dtype=bool)
    for x in range(n):
        up = _reachable(nbrs, x, lambda v: f[v] >= f[x])
        for y in up:
            below[x, y] = True
            if f[y] == f[x]:
                same[x, y] = True
    return same, below


def definition_reeb_poset(fp: FilteredPoset) -> tuple[np.ndarray, np.ndarray]:
    """``(same, below)`` for the Reeb poset: ``f``-constant and ``f``-nondecreasing paths."""
    P, f = fp.poset, fp.f
    n = fp.n
    flat = [[y for y in range(n) if y != x and P.comparable[x, y] and f[y] == f[x]] for x in range(n)]
    up = [[y for y in range(n) if y != x and P.comparable[x, y] and f[y] >= f[x]] for x in range(n)]
    same = np.zeros((n, n), dtype=bool)
    below = np.zeros((n, n), dtype=bool)
    for x in range(n):
        same[x, list(_reachable(flat, x, lambda v: True))] = True
        below[x, list(_reachable(up, x, lambda v: True))] = True
    return same, below


def quotient_matches(same: np.ndarray, below: np.ndarray, proj) -> list[str]:
    """Compare a projection against oracle relations; returns mismatch descriptions."""
    m = np.asarray(proj.map)
    lab = proj.source.labels
    tgt = proj.target.poset.leq
    out = []
    n = len(m)
    for x in range(n):
        for y in range(n):
            if (m[x] == m[y]) != bool(same[x, y]):
                out.append(f"class mismatch {lab[x]},{lab[y]}")
            if bool(tgt[m[x], m[y]]) != bool(below[x, y]):
                out.append(f"order mismatch {lab[x]},{lab[y]}")
    return out


def _is_path_subset(P: Poset, elems: tuple[int, ...]) -> list[int] | None:
    """Order ``elems`` into an induced path of the comparability graph, if possible."""
    k = len(elems)
    if k == 1:
        return [elems[0]]
    sub = P.comparable[np.ix_(elems, elems)].copy()
    np.fill_diagonal(sub, False)
    deg = sub.sum(axis=1)
    if sub.sum() != 2 * (k - 1) or deg.max() > 2 or (deg == 0).any():
        return None
    ends = np.flatnonzero(deg == 1)
    if len(ends) != 2:
        return None
    order = [int(ends[0])]
    prev = -1
    while len(order) < k:
        nxt = [int(v) for v in np.flatnonzero(sub[order[-1]]) if v != prev]
        if not nxt:
            return None
        prev = order[-1]
        order.append(nxt[0])
    return [elems[i] for i in order]


def all_fences(P: Poset) -> list[list[int]]:
    """Every fence of ``P`` (one orientation each), by subset enumeration."""
    out = []
    for k in range(1, P.n + 1):
        for elems in combinations(range(P.n), k):
            path = _is_path_subset(P, elems)
            if path is not None:
                out.append(path)
    return out


def brute_max_fence(P: Poset) -> int:
    return max(len(F) - 1 for F in all_fences(P))
