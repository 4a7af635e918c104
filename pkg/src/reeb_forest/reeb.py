"""Filtered posets, their Reeb quotients, induced metrics and poset hyperbolicity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .poset import (
    BoundUnavailable,
    BudgetExceeded,
    DEFAULT_FENCE_BUDGET,
    Poset,
    PosetError,
    is_tree,
    max_fence_length,
    transitive_closure,
)

__all__ = [
    "TOL",
    "FilteredPoset",
    "ReebPoset",
    "ReebTree",
    "Projection",
    "PosetReport",
    "floyd_warshall",
    "product_defect",
    "reeb_poset",
    "reeb_tree",
    "induced_metric_df",
    "merge_matrix",
    "merge_value",
    "tree_metric_tf",
    "pulled_back_tf",
    "gromov_products",
    "gromov_product_poset",
    "hyp_poset",
    "poset_bound",
    "approximation_bound",
]

TOL = 1e-9


def floyd_warshall(w: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths; ``w`` holds edge weights and ``inf`` for non-edges.

    Works on float arrays and on object arrays of exact numbers alike.
    """
    d = np.array(w, copy=True)
    n = d.shape[0]
    for i in range(n):
        d[i, i] = 0
    for k in range(n):
        d = np.minimum(d, d[:, k, None] + d[None, k, :])
    return d


def product_defect(g: np.ndarray, chunk: int = 64) -> float:
    """``max(0, max_{x,y,z} min(g[x,y], g[y,z]) - g[x,z])`` for a product matrix."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    worst = 0.0
    for lo in range(0, n, chunk):
        # maxmin[x, z] = max_y min(g[x, y], g[y, z])
        block = np.minimum(g[lo:lo + chunk, :, None], g[None, :, :]).max(axis=1)
        worst = max(worst, float((block - g[lo:lo + chunk]).max()))
    return worst


class FilteredPoset:
    """A poset with an order-preserving filtration ``f``."""

    _strict = False

    def __init__(self, poset: Poset, f: Sequence[float]):
        f = np.array(f, dtype=float)
        if f.shape != (poset.n,):
            raise PosetError(f"filtration needs {poset.n} values, got {f.shape}")
        if not np.isfinite(f).all():
            raise PosetError("filtration values must be finite")
        xs, ys = np.nonzero(poset.lt)
        bad = f[xs] > f[ys] if not self._strict else f[xs] >= f[ys]
        if bad.any():
            x, y = int(xs[bad][0]), int(ys[bad][0])
            what = "strictly order preserving" if self._strict else "order preserving"
            raise PosetError(
                f"filtration not {what}: {poset.labels[x]} < {poset.labels[y]} but "
                f"f = {f[x]:g}, {f[y]:g}")
        f.setflags(write=False)
        self.poset = poset
        self.f = f

    @property
    def n(self) -> int:
        return self.poset.n

    @property
    def labels(self) -> tuple[str, ...]:
        return self.poset.labels

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n}, f={self.f.tolist()})"


class ReebPoset(FilteredPoset):
    """A poset with a strictly order-preserving filtration."""

    _strict = True


class ReebTree(ReebPoset):
    """A Reeb poset whose order is a tree; ``parent[x]`` is the element ``x`` covers."""

    def __init__(self, poset: Poset, f: Sequence[float]):
        super().__init__(poset, f)
        if not is_tree(poset):
            raise PosetError("Reeb tree requires a tree poset")
        self.parent = tuple(
            poset.lower_covers[x][0] if poset.lower_covers[x] else None for x in range(poset.n))
        self.root = poset.minimum

    @classmethod
    def from_parents(cls, parent: Sequence[int | None], f: Sequence[float],
                     labels: Sequence[str] | None = None) -> "ReebTree":
        n = len(parent)
        leq = np.eye(n, dtype=bool)
        for x in range(n):
            seen = set()
            y = parent[x]
            while y is not None:
                if y in seen:
                    raise PosetError("parent links contain a cycle")
                seen.add(y)
                leq[y, x] = True
                y = parent[y]
        return cls(Poset(leq, labels), f)

    def children(self, x: int) -> tuple[int, ...]:
        return self.poset.upper_covers[x]


@dataclass(frozen=True, eq=False)
class Projection:
    """Quotient map from ``source`` elements onto ``target`` elements."""

    source: FilteredPoset
    target: FilteredPoset
    map: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "map", tuple(int(x) for x in self.map))

    def __call__(self, x: int) -> int:
        return self.map[x]

    def fibers(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.target.n)]
        for x, y in enumerate(self.map):
            out[y].append(x)
        return out

    def check(self) -> None:
        """Surjective, order preserving, and ``f``-preserving (raises ``AssertionError``)."""
        m = np.asarray(self.map)
        assert len(m) == self.source.n
        assert set(self.map) == set(range(self.target.n)), "projection not surjective"
        xs, ys = np.nonzero(self.source.poset.leq)
        assert self.target.poset.leq[m[xs], m[ys]].all(), "projection not order preserving"
        assert np.array_equal(self.source.f, self.target.f[m]), "projection changes f"


def _class_labels(P: Poset, classes: list[list[int]]) -> list[str]:
    return ["|".join(P.labels[x] for x in members) for members in classes]


def _comparability_edges(P: Poset) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = np.nonzero(np.triu(P.comparable, 1))
    return xs, ys


def reeb_poset(fp: FilteredPoset) -> tuple[ReebPoset, Projection]:
    """Collapse ``f``-constant comparable runs; order classes by ``f``-nondecreasing paths."""
    P, f = fp.poset, fp.f
    ds = DisjointSet(range(P.n))
    xs, ys = _comparability_edges(P)
    for x, y in zip(xs.tolist(), ys.tolist()):
        if f[x] == f[y]:
            ds.merge(x, y)
    roots = sorted({ds[x] for x in range(P.n)}, key=lambda r: min(ds.subset(r)))
    cls_of = {r: i for i, r in enumerate(roots)}
    pi = [cls_of[ds[x]] for x in range(P.n)]
    classes: list[list[int]] = [[] for _ in roots]
    for x, c in enumerate(pi):
        classes[c].append(x)

    k = len(classes)
    rel = np.zeros((k, k), dtype=bool)
    for x, y in zip(*np.nonzero(P.leq)):
        rel[pi[x], pi[y]] = True
    leq = transitive_closure(rel)
    rp = ReebPoset(Poset(leq, _class_labels(P, classes)), [f[c[0]] for c in classes])
    return rp, Projection(fp, rp, pi)


def reeb_tree(fp: FilteredPoset) -> tuple[ReebTree, Projection]:
    """Merge-tree quotient of a filtered poset.

    Distinct filtration levels are swept from the top down. A union-find
    holds the components of the comparability graph restricted to
    ``f >= level``. At each level the new points are first joined to each
    other and to already active neighbours; every resulting component that
    contains a point of the current level becomes one tree node, and the
    previous top nodes of the components it absorbed become its children.
    """
    P, f = fp.poset, fp.f
    if P.n == 0:
        raise PosetError("empty poset")
    nbrs = [np.flatnonzero(P.comparable[x]).tolist() for x in range(P.n)]
    levels: dict[float, list[int]] = {}
    for x in range(P.n):
        levels.setdefault(float(f[x]), []).append(x)

    ds = DisjointSet()
    active = np.zeros(P.n, dtype=bool)
    top: dict[int, int] = {}          # union-find root -> current top node
    node_level: list[float] = []
    node_members: list[list[int]] = []
    node_parent: list[int | None] = []
    node_of = [-1] * P.n

    for v in sorted(levels, reverse=True):
        pts = levels[v]
        old_roots = set()
        for x in pts:
            for y in nbrs[x]:
                if active[y]:
                    old_roots.add(ds[y])
        for x in pts:
            ds.add(x)
            active[x] = True
        for x in pts:
            for y in nbrs[x]:
                if active[y] and y != x:
                    ds.merge(x, y)
        new_nodes: dict[int, int] = {}
        for x in pts:
            r = ds[x]
            if r not in new_nodes:
                new_nodes[r] = len(node_level)
                node_level.append(v)
                node_members.append([])
                node_parent.append(None)
            node = new_nodes[r]
            node_members[node].append(x)
            node_of[x] = node
        for r0 in old_roots:
            child = top.pop(r0)
            node_parent[child] = new_nodes[ds[r0]]
        # stale keys for roots that merged away are harmless but drop them anyway
        for r, node in new_nodes.items():
            top[r] = node
        for r in list(top):
            if ds[r] != r:
                del top[r]

    # canonical node order: by level, then by smallest member
    order = sorted(range(len(node_level)), key=lambda i: (node_level[i], min(node_members[i])))
    renum = {old: new for new, old in enumerate(order)}
    parent = [None if node_parent[i] is None else renum[node_parent[i]] for i in order]
    members = [sorted(node_members[i]) for i in order]
    tree = ReebTree.from_parents(parent, [node_level[i] for i in order],
                                 _class_labels(P, members))
    return tree, Projection(fp, tree, [renum[node_of[x]] for x in range(P.n)])


def induced_metric_df(fp: FilteredPoset) -> np.ndarray:
    """Reeb metric: shortest comparability paths weighted by ``|f(u) - f(v)|``.

    On a plain filtered poset this is a pseudo-metric (``f``-constant
    comparable pairs sit at distance zero).
    """
    f = fp.f
    w = np.where(fp.poset.comparable, np.abs(f[:, None] - f[None, :]), np.inf)
    return floyd_warshall(w)


def merge_matrix(fp: FilteredPoset) -> np.ndarray:
    """Max-min value of ``f`` over comparability paths, for all pairs.

    Kruskal sweep: comparability edges are added in decreasing order of
    ``min(f(u), f(v))``; when two components first meet, every cross pair
    gets that edge's value.
    """
    P, f = fp.poset, fp.f
    m = np.diag(f).astype(float)
    xs, ys = _comparability_edges(P)
    w = np.minimum(f[xs], f[ys])
    ds = DisjointSet(range(P.n))
    for e in np.argsort(-w, kind="stable"):
        x, y = int(xs[e]), int(ys[e])
        rx, ry = ds[x], ds[y]
        if rx == ry:
            continue
        a, b = list(ds.subset(rx)), list(ds.subset(ry))
        m[np.ix_(a, b)] = w[e]
        m[np.ix_(b, a)] = w[e]
        ds.merge(x, y)
    return m


def merge_value(fp: FilteredPoset, x, y) -> float:
    i, j = fp.poset.index(x), fp.poset.index(y)
    return float(merge_matrix(fp)[i, j])


def tree_metric_tf(T: ReebTree) -> np.ndarray:
    """``f(x) + f(y) - 2 f(p_xy)`` with ``p_xy`` the top of the common down-set."""
    leq, f = T.poset.leq, T.f
    common = leq[:, :, None] & leq[:, None, :]
    top = np.where(common, f[:, None, None], -np.inf).max(axis=0)
    return f[:, None] + f[None, :] - 2.0 * top


def pulled_back_tf(T: ReebTree, proj: Projection) -> np.ndarray:
    """``t_f(pi(x), pi(y))`` on the source elements."""
    m = np.asarray(proj.map)
    return tree_metric_tf(T)[np.ix_(m, m)]


def gromov_products(fp: FilteredPoset, d: np.ndarray | None = None) -> np.ndarray:
    """``(f(x) + f(y) - d_f(x, y)) / 2`` for all pairs."""
    if d is None:
        d = induced_metric_df(fp)
    f = fp.f
    return (f[:, None] + f[None, :] - d) / 2.0


def gromov_product_poset(rp: ReebPoset, x, y) -> float:
    i, j = rp.poset.index(x), rp.poset.index(y)
    return float(gromov_products(rp)[i, j])


def hyp_poset(rp: ReebPoset, g: np.ndarray | None = None) -> float:
    """Smallest ``eps >= 0`` with ``g(x,z) >= min(g(x,y), g(y,z)) - eps`` for all triples."""
    if g is None:
        g = gromov_products(rp)
    return product_defect(g)


def poset_bound(mf: int, hyp: float) -> float:
    """``2 log2(2 M_F) hyp``; zero when ``hyp`` is zero."""
    if hyp <= 0.0:
        return 0.0
    return 2.0 * math.log2(2 * mf) * hyp


@dataclass
class PosetReport:
    distortion: float
    hyp_f: float
    MF: int
    MF_mode: str
    bound: float
    ok: bool
    worst_pair: tuple[str, str] | None = None
    identity_residual: float = 0.0
    identity_ok: bool = True
    lipschitz_ok: bool = True
    mf_fallback: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "distortion": self.distortion,
            "hyp_f": self.hyp_f,
            "MF": self.MF,
            "MF_mode": self.MF_mode,
            "bound": self.bound,
            "ok": self.ok,
            "worst_pair": list(self.worst_pair) if self.worst_pair else None,
            "identity_residual": self.identity_residual,
            "identity_ok": self.identity_ok,
            "lipschitz_ok": self.lipschitz_ok,
            "mf_fallback": self.mf_fallback,
            "log_base": 2,
            "notes": list(self.notes),
        }


def resolve_mf(P: Poset, mode: str, budget: int = DEFAULT_FENCE_BUDGET) -> tuple[int, str, bool, list[str]]:
    """``(M_F, mode used, fell back?, notes)``; exact falls back to the Betti bound."""
    notes: list[str] = []
    if mode == "exact":
        try:
            return max_fence_length(P, "exact", budget=budget), "exact", False, notes
        except BudgetExceeded as exc:
            notes.append(str(exc))
            fallback = True
    elif mode == "bound":
        fallback = False
    else:
        raise ValueError(f"unknown M_F mode {mode!r}")
    try:
        mf = max_fence_length(P, "bound")
    except BoundUnavailable:
        mf = max_fence_length(P, "bound", virtual_bottom=True)
        notes.append("no smallest element: bound computed with a virtual bottom")
    return mf, "bound", fallback, notes


def approximation_bound(rp: ReebPoset, mf_mode: str = "exact", *, tol: float = TOL,
                        budget: int = DEFAULT_FENCE_BUDGET) -> tuple[float, PosetReport]:
    """Distortion of the Reeb tree quotient against ``2 log2(2 M_F) hyp``.

    Also verifies, pair by pair, that ``d_f - t_f = 2 (m_f - g_f) >= 0``.
    """
    if not isinstance(rp, ReebPoset):
        raise TypeError("approximation_bound needs a ReebPoset (strict filtration)")
    d = induced_metric_df(rp)
    T, proj = reeb_tree(rp)
    t = pulled_back_tf(T, proj)
    g = gromov_products(rp, d)
    m = merge_matrix(rp)
    diff = d - t
    residual = float(np.abs(diff - 2.0 * (m - g)).max()) if rp.n else 0.0
    lipschitz_ok = bool((m - g >= -tol).all())
    err = np.abs(diff)
    i, j = np.unravel_index(int(np.argmax(err)), err.shape)
    distortion = float(err[i, j])
    hyp = hyp_poset(rp, g)
    mf, used, fallback, notes = resolve_mf(rp.poset, mf_mode, budget)
    bound = poset_bound(mf, hyp)
    report = PosetReport(
        distortion=distortion, hyp_f=hyp, MF=mf, MF_mode=used, bound=bound,
        ok=distortion <= bound + tol and residual <= tol and lipschitz_ok,
        worst_pair=(rp.labels[i], rp.labels[j]), identity_residual=residual,
        identity_ok=residual <= tol, lipschitz_ok=lipschitz_ok, mf_fallback=fallback,
        notes=notes)
    return bound, report
