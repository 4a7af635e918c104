"""Per-instance property checks and the seeded verification harness.

Each ``check_*`` function returns a list of failure messages (empty when
every property holds), so one bad instance never hides the others.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable

import networkx as nx
import numpy as np

from ..graph import (
    MetricGraph,
    approximate_graph,
    gromov_products_base,
    hyp_all_bases,
    induce_poset,
    p_regularity_violations,
    regularize,
)
from ..metric import FiniteMetricSpace, four_point_defect, tree_approx_metric_space
from ..poset import (
    Fence,
    betti_euler,
    betti_merging,
    count_merging_lower_bound,
    covering_graph,
    is_tree,
    longest_fence,
    merging_points,
)
from ..reeb import (
    TOL,
    FilteredPoset,
    ReebPoset,
    approximation_bound,
    gromov_products,
    hyp_poset,
    induced_metric_df,
    merge_matrix,
    product_defect,
    pulled_back_tf,
    reeb_poset,
    reeb_tree,
    tree_metric_tf,
)
from . import oracles
from .generators import random_instances

THREADS_ENV = "REEB_FOREST_THREADS"


def same_quotient(pa, pb, tol: float = TOL) -> bool:
    """True if two projections of one source induce isomorphic quotients."""
    ma, mb = np.asarray(pa.map), np.asarray(pb.map)
    if pa.target.n != pb.target.n:
        return False
    fwd = {}
    for a, b in zip(ma.tolist(), mb.tolist()):
        if fwd.setdefault(a, b) != b:
            return False
    if len(set(fwd.values())) != len(fwd):
        return False
    perm = np.array([fwd[a] for a in range(pa.target.n)])
    return bool((pa.target.poset.leq == pb.target.poset.leq[np.ix_(perm, perm)]).all()
                and np.allclose(pa.target.f, pb.target.f[perm], atol=tol))


def compose(first, second):
    """Projection ``second . first`` as a plain map (for :func:`same_quotient`)."""
    class _Composite:
        source = first.source
        target = second.target
        map = tuple(second.map[y] for y in first.map)
    return _Composite


def check_log_hyp_chains(rp: ReebPoset, g: np.ndarray, hyp: float, rng: np.random.Generator,
                         max_len: int = 8, per_len: int = 4, tol: float = TOL) -> list[str]:
    """``g(x0, xn) >= min_i g(x_i, x_i+1) - ceil(log2 n) hyp`` on random comparability walks."""
    out = []
    nbrs = [np.flatnonzero(rp.poset.comparable[x]) for x in range(rp.n)]
    for n in range(1, max_len + 1):
        for _ in range(per_len):
            walk = [int(rng.integers(rp.n))]
            for _ in range(n):
                walk.append(int(rng.choice(nbrs[walk[-1]])))
            lhs = g[walk[0], walk[-1]]
            rhs = min(g[a, b] for a, b in zip(walk, walk[1:])) - math.ceil(math.log2(n)) * hyp
            if lhs < rhs - tol:
                out.append(f"log-hyp chain fails on {walk}: {lhs} < {rhs}")
    return out


def check_reeb_instance(rp: ReebPoset, seed: int = 0, *, oracle: bool = True,
                        tol: float = TOL) -> list[str]:
    """Bound, metric identities, quotient structure and oracles on one Reeb poset."""
    out: list[str] = []
    P = rp.poset
    bound, rep = approximation_bound(rp, "exact")
    if not rep.ok:
        out.append(f"main bound fails: distortion {rep.distortion} > {bound} "
                   f"(pair {rep.worst_pair}, identity residual {rep.identity_residual})")
    d = induced_metric_df(rp)
    f = rp.f
    gap = d - np.abs(f[:, None] - f[None, :])
    if (gap < -tol).any():
        out.append("d_f below |f(x) - f(y)|")
    if ((np.abs(gap) <= tol) != P.comparable).any():
        out.append("d_f = |df| does not match comparability")

    T, proj = reeb_tree(rp)
    proj.check()
    T2, proj2 = reeb_tree(T)
    if proj2.map != tuple(range(T.n)):
        out.append("Reeb tree not a fixed point")
    t = tree_metric_tf(T)
    if np.abs(t - induced_metric_df(T)).max() > tol:
        out.append("tree metric formula differs from Reeb metric of the tree")
    m = merge_matrix(rp)
    tt = pulled_back_tf(T, proj)
    if np.abs(tt - (f[:, None] + f[None, :] - 2 * m)).max() > tol:
        out.append("t_f differs from f(x) + f(y) - 2 m_f")
    if four_point_defect(t) > tol:
        out.append("tree metric violates the four-point condition")

    g = gromov_products(rp, d)
    hyp = hyp_poset(rp, g)
    if (hyp <= tol) != is_tree(P):
        out.append(f"hyp = {hyp} but is_tree = {is_tree(P)}")
    out += check_log_hyp_chains(rp, g, hyp, np.random.default_rng(seed), tol=tol)

    fence = longest_fence(P)
    if len(merging_points(P)) < count_merging_lower_bound(fence, P):
        out.append("fence forces more merging points than exist")
    if P.has_minimum():
        if betti_euler(P) != betti_merging(P):
            out.append("Betti formulas disagree")
        if fence.length > 2 * betti_euler(P) + 2:
            out.append("fence longer than 2 beta + 2")

    if oracle and rp.n <= 10:
        if np.abs(d - oracles.brute_df(rp)).max() > tol:
            out.append("d_f differs from simple-path oracle")
        if np.abs(m - oracles.brute_merge(rp)).max() > tol:
            out.append("merge values differ from simple-path oracle")
        out += oracles.quotient_matches(*oracles.definition_reeb_tree(rp), proj)
        if fence.length != oracles.brute_max_fence(P):
            out.append("exact M_F differs from subset enumeration")
    return out


def check_filtered_instance(fp: FilteredPoset, *, oracle: bool = True, tol: float = TOL) -> list[str]:
    """Quotient idempotence and factorization on a possibly non-strict filtration."""
    out: list[str] = []
    R, pr = reeb_poset(fp)
    pr.check()
    R2, pr2 = reeb_poset(R)
    if pr2.map != tuple(range(R.n)) or not R2.poset.same_order(R.poset):
        out.append("Reeb poset not idempotent")
    T, pt = reeb_tree(fp)
    pt.check()
    TR, ptr = reeb_tree(R)
    if not same_quotient(pt, compose(pr, ptr), tol):
        out.append("T_f(X) and T_f(R_f(X)) differ")
    m = merge_matrix(fp)
    t = pulled_back_tf(T, pt)
    f = fp.f
    if np.abs(t - (f[:, None] + f[None, :] - 2 * m)).max() > tol:
        out.append("t_f differs from f(x) + f(y) - 2 m_f")
    if oracle and fp.n <= 10:
        out += oracles.quotient_matches(*oracles.definition_reeb_tree(fp), pt)
        out += oracles.quotient_matches(*oracles.definition_reeb_poset(fp), pr)
        if np.abs(m - oracles.brute_merge(fp)).max() > tol:
            out.append("merge values differ from simple-path oracle")
    return out


def check_tree_characterization(fp: FilteredPoset, tol: float = TOL) -> list[str]:
    """is_tree <=> hyp = 0 <=> (smallest element and acyclic Hasse diagram) <=> short fences."""
    P = fp.poset
    tree = is_tree(P)
    hyp = hyp_poset(fp) if isinstance(fp, ReebPoset) else None
    acyclic = nx.is_forest(covering_graph(P).to_undirected())
    out = []
    if hyp is not None and (hyp <= tol) != tree:
        out.append(f"hyp {hyp} vs is_tree {tree}")
    if (acyclic and P.has_minimum()) != tree:
        out.append(f"covering graph acyclic={acyclic}, minimum={P.has_minimum()}, is_tree={tree}")
    if P.n <= 8:
        fences = oracles.all_fences(P)
        short = all(len(F) <= 3 for F in fences) and all(
            P.lt[F[1], F[0]] and P.lt[F[1], F[2]] for F in fences if len(F) == 3)
        if P.has_minimum() and short != tree:
            out.append(f"fence characterization {short} vs is_tree {tree}")
    if tree and not P.has_minimum():
        out.append("tree without smallest element")
    return out


def check_graph_instance(G: MetricGraph, *, tol: float = TOL, mf_mode: str = "bound",
                         oracle: bool = True) -> list[str]:
    """Pipeline and regularization properties for every base point of ``G``."""
    out: list[str] = []
    d0 = np.asarray(G.distance_matrix(), dtype=float)
    if oracle and G.n <= 10 and np.abs(d0 - oracles.brute_graph_distances(G)).max() > tol:
        out.append("shortest paths differ from simple-path oracle")
    hyps = hyp_all_bases(d0)
    if (hyps[:, None] > 2 * hyps[None, :] + tol).any():
        out.append("hyp_p <= 2 hyp_q fails")
    for p in G.vertices:
        res = approximate_graph(G, p, mf_mode=mf_mode, tol=tol)
        rep = res.report
        if not rep.ok:
            out.append(f"base {p}: pipeline check failed: {rep.to_dict()}")
        G2 = res.graph
        idx = [G2.index(v) for v in G.vertices]
        if np.abs(res.d[np.ix_(idx, idx)] - d0).max() > tol:
            out.append(f"base {p}: regularization changed distances")
        if p_regularity_violations(G2, p, tol=tol):
            out.append(f"base {p}: regularized graph not p-regular")
        G3, tr = regularize(G2, p, tol=tol)
        if tr.added:
            out.append(f"base {p}: regularization not idempotent")
        rp = res.projection.source
        cover = {tuple(sorted((G2.vertices[a], G2.vertices[b]))) for a, b in rp.poset.cover_pairs()}
        edges = {tuple(sorted((u, v))) for u, v, _ in G2.edges()}
        if cover != edges:
            out.append(f"base {p}: covering graph differs from regularized graph")
        f = rp.f
        for a, b in rp.poset.cover_pairs():
            if abs(abs(f[a] - f[b]) - float(G2.length(a, b))) > tol:
                out.append(f"base {p}: cover weight differs from edge length")
                break
        hp = product_defect(gromov_products_base(res.d, G2.index(p)))
        if abs(hp - rep.hyp_p) > tol:
            out.append(f"base {p}: poset hyperbolicity {rep.hyp_p} != hyp_p {hp}")
    return out


def check_metric_instance(X: FiniteMetricSpace, *, tol: float = TOL) -> list[str]:
    out: list[str] = []
    t, rep = tree_approx_metric_space(X, tol=tol)
    if four_point_defect(t) > tol:
        out.append("t_X violates the four-point condition")
    if not rep.ok:
        out.append(f"metric pipeline check failed: {rep.to_dict()}")
    if np.abs(t - X.d).max() > rep.bound_graph + tol:
        out.append("distortion above the graph bound")
    return out


SUITES: dict[str, tuple[str, Callable]] = {
    "reeb": ("poset", check_reeb_instance),
    "filtered": ("filtered", check_filtered_instance),
    "trees": ("tree", check_reeb_instance),
    "characterization": ("poset", check_tree_characterization),
    "graph": ("graph", check_graph_instance),
    "metric": ("metric", check_metric_instance),
}


def _run_one(args) -> tuple[str, int, list[str]]:
    suite, idx, inst = args
    return suite, idx, SUITES[suite][1](inst)


def worker_count() -> int:
    cap = os.environ.get(THREADS_ENV)
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def run_verification(seed: int = 7, count: int = 100, size: int = 10, *,
                     suites=None, workers: int | None = None) -> dict:
    """Run property suites on ``count`` seeded instances each; merge into one summary.

    Graph and metric suites use at most ``min(size, 10)`` points to keep
    exhaustive hyperbolicity scans cheap.
    """
    suites = list(SUITES) if suites is None else list(suites)
    jobs = []
    for k, suite in enumerate(suites):
        kind = SUITES[suite][0]
        sz = min(size, 10) if kind in ("graph", "metric") else size
        for i, inst in enumerate(random_instances(kind, sz, seed + 1000 * k, count)):
            jobs.append((suite, i, inst))
    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_one, jobs, chunksize=16))
    else:
        results = [_run_one(j) for j in jobs]
    summary: dict = {"seed": seed, "count": count, "size": size, "suites": {}}
    for suite in suites:
        fails = [f"#{i}: {msg}" for s, i, msgs in results if s == suite for msg in msgs]
        summary["suites"][suite] = {"instances": count, "failures": fails, "ok": not fails}
    summary["ok"] = all(v["ok"] for v in summary["suites"].values())
    return summary
