"""Acceptance criteria 1-7, each recorded as one PASS/FAIL line."""

import itertools
import json
import subprocess
import sys
import time

import networkx as nx
import numpy as np

from reeb_forest.bench import oracles
from reeb_forest.bench.generators import random_instances, random_poset
from reeb_forest.bench.zn import growth_comparison, make_zn
from reeb_forest.graph import MetricGraph, approximate_graph, induce_poset
from reeb_forest.io import dump_json
from reeb_forest.metric import four_point_defect
from reeb_forest.poset import (
    Fence,
    Poset,
    PosetError,
    betti_euler,
    betti_merging,
    covering_graph,
    is_tree,
    max_fence_length,
    transitive_closure,
)
from reeb_forest.reeb import (
    ReebPoset,
    approximation_bound,
    hyp_poset,
    induced_metric_df,
    merge_matrix,
    reeb_poset,
    reeb_tree,
    tree_metric_tf,
)
from reeb_forest.report import jsonable

SLACK = 1e-9


def all_small_posets(max_n: int):
    """Every connected poset on up to ``max_n`` elements with a natural labelling."""
    for n in range(1, max_n + 1):
        slots = [(i, j) for i in range(n) for j in range(i + 1, n)]
        seen = set()
        for mask in range(1 << len(slots)):
            rel = np.zeros((n, n), dtype=bool)
            for k, (i, j) in enumerate(slots):
                if mask >> k & 1:
                    rel[i, j] = True
            leq = transitive_closure(rel)
            key = leq.tobytes()
            if key in seen:
                continue
            seen.add(key)
            try:
                yield Poset(leq)
            except PosetError:
                continue  # disconnected


def downset_filtration(P: Poset, rng) -> np.ndarray:
    """Strict order-preserving values: sum of positive weights over the down-set."""
    w = rng.integers(1, 5, size=P.n).astype(float)
    return P.leq.T.astype(float) @ w


def test_1_main_inequality(acceptance):
    start = time.perf_counter()
    count, worst, failures = 0, np.inf, []
    for rp in random_instances("poset", 12, seed=101, count=1000):
        bound, rep = approximation_bound(rp, "exact")
        slack = bound - rep.distortion
        worst = min(worst, slack)
        if slack < -SLACK:
            failures.append((rp.n, rep.worst_pair, slack))
        count += 1
    elapsed = time.perf_counter() - start
    ok = not failures and count >= 1000 and elapsed < 60
    acceptance(1, ok, f"{count} Reeb posets (|X| <= 12), min slack {worst:.3g}, "
                      f"{len(failures)} failures, {elapsed:.1f}s < 60s")
    assert ok, failures[:5]


def test_2_graph_inequality_every_base(acceptance):
    start = time.perf_counter()
    graphs = runs = 0
    worst, failures = np.inf, []
    for G in random_instances("graph", 10, seed=202, count=500, min_size=2):
        graphs += 1
        for p in G.vertices:
            rep = approximate_graph(G, p, mf_mode="bound").report
            runs += 1
            slack = rep.bound_graph - rep.distortion
            worst = min(worst, slack)
            if slack < -SLACK or not rep.ok:
                failures.append((G.n, p, rep.worst_pair, slack))
    elapsed = time.perf_counter() - start
    ok = not failures and graphs >= 500 and elapsed < 120
    acceptance(2, ok, f"{graphs} graphs (<= 10 vertices), {runs} base points, "
                      f"min slack {worst:.3g}, {len(failures)} failures, {elapsed:.1f}s < 120s")
    assert ok, failures[:5]


def test_3_oracle_equivalence(acceptance):
    mismatches = []
    checked = 0
    streams = [random_instances("poset", 10, seed=303, count=300),
               random_instances("filtered", 10, seed=304, count=300)]
    for fp in itertools.chain(*streams):
        checked += 1
        _, proj = reeb_tree(fp)
        mismatches += oracles.quotient_matches(*oracles.definition_reeb_tree(fp), proj)
        _, pr = reeb_poset(fp)
        mismatches += oracles.quotient_matches(*oracles.definition_reeb_poset(fp), pr)
        if np.abs(induced_metric_df(fp) - oracles.brute_df(fp)).max() > SLACK:
            mismatches.append("d_f")
        if np.abs(merge_matrix(fp) - oracles.brute_merge(fp)).max() > SLACK:
            mismatches.append("merge value")
        if max_fence_length(fp.poset) != oracles.brute_max_fence(fp.poset):
            mismatches.append("M_F")
    for G in random_instances("graph", 10, seed=305, count=200):
        checked += 1
        if np.abs(G.distance_matrix() - oracles.brute_graph_distances(G)).max() > SLACK:
            mismatches.append("graph distances")
    ok = not mismatches
    acceptance(3, ok, f"{checked} instances (<= 10 elements), {len(mismatches)} mismatches "
                      "(T_f, R_f, d_f, merge values, M_F, graph distances)")
    assert ok, mismatches[:10]


def test_4_tree_characterization(acceptance):
    rng = np.random.default_rng(404)
    problems = []
    count = 0
    trees = 0
    worst_defect = 0.0

    def check(P: Poset, fs):
        nonlocal count, trees, worst_defect
        count += 1
        tree = is_tree(P)
        trees += tree
        acyclic = nx.is_forest(covering_graph(P).to_undirected())
        if tree != (acyclic and P.has_minimum()):
            problems.append(("acyclic", P.n))
        for f in fs:
            rp = ReebPoset(P, f)
            if (hyp_poset(rp) <= SLACK) != tree:
                problems.append(("hyp", P.n, tree))
            T, _ = reeb_tree(rp)
            worst_defect = max(worst_defect, four_point_defect(tree_metric_tf(T)))

    exhaustive = 0
    for P in all_small_posets(5):
        exhaustive += 1
        check(P, [downset_filtration(P, rng), downset_filtration(P, rng)])
    for k in range(10_000):
        n = int(rng.integers(1, 9))
        rp = random_poset(rng, n, tree=k % 3 == 0)
        check(rp.poset, [rp.f, downset_filtration(rp.poset, rng)])
    ok = not problems and count >= 10_000 and worst_defect <= SLACK
    acceptance(4, ok, f"{count} posets (all {exhaustive} naturally labelled connected posets "
                      f"on <= 5 elements + random <= 8), {trees} trees, two strict f each; "
                      f"{len(problems)} disagreements; max four-point defect {worst_defect:.3g}")
    assert ok, problems[:10]


def test_5_zn_reproduction(acceptance):
    problems = []
    for n in range(1, 9):
        Z = make_zn(n)
        G = Z.graph
        if G.n != 2 * n + 2 or G.betti() != n:
            problems.append((n, "size/betti"))
        rp = induce_poset(G, "p")
        F = Fence(tuple(rp.poset.index(v) for v in Z.fence))
        if not (F.is_fence_in(rp.poset) and F.length == 2 * n):
            problems.append((n, "fence"))
    rows = growth_comparison(range(1, 9), 1.0, 1.0)
    ratios = [row["ratio"] for row in rows]
    for row in rows:
        if abs(row["ratio"] - 1.0) > 1e-9 or not row["ok"]:
            problems.append((row["n"], "ratio", row["ratio"]))
    ok = not problems
    acceptance(5, ok, f"Z_n for n = 1..8: |V| = 2n+2, beta = n, 2n-fence present; "
                      f"phi/Upsilon ratios {sorted(set(round(r, 12) for r in ratios))}")
    assert ok, problems


def test_6_combinatorial_identities(acceptance):
    betti_checked = mf_checked = 0
    problems = []

    def check(P: Poset):
        nonlocal betti_checked, mf_checked
        if P.has_minimum():
            betti_checked += 1
            b_euler, b_merge = betti_euler(P), betti_merging(P)
            if b_euler != b_merge or not isinstance(b_euler, int):
                problems.append(("betti", b_euler, b_merge))
            mf = max_fence_length(P, "exact")
            mf_checked += 1
            if mf > 2 * b_euler + 2:
                problems.append(("fence", mf, b_euler))

    for P in all_small_posets(5):
        check(P)
    for rp in random_instances("poset", 12, seed=606, count=3000):
        check(rp.poset)
    for n in range(1, 9):
        check(induce_poset(make_zn(n).graph, "p").poset)
    ok = not problems and betti_checked > 0
    acceptance(6, ok, f"Euler = merging-point Betti on {betti_checked} posets with a minimum; "
                      f"M_F <= 2 beta + 2 on {mf_checked} exact M_F runs; {len(problems)} violations")
    assert ok, problems[:10]


VEE_JSON = '{"labels": ["a", "b", "c"], "covers": [["a", "b"], ["c", "b"]], "f": [0, 2, 1]}'
C4_TSV = "p\ta\t1\na\tb\t1\nb\tc\t1\nc\tp\t1\n"


def test_7_golden_micro_examples(acceptance, tmp_path):
    from reeb_forest.poset import build_poset

    problems = []
    vee = ReebPoset(build_poset([("a", "b"), ("c", "b")], labels="abc"), [0, 2, 1])
    c4 = MetricGraph("pabc", [("p", "a", 1), ("a", "b", 1), ("b", "c", 1), ("c", "p", 1)])
    dumps = []
    for _ in range(2):
        bound, rep = approximation_bound(vee)
        if (rep.distortion, bound) != (2.0, 4.0):
            problems.append(("vee", rep.distortion, bound))
        g = approximate_graph(c4, "p").report
        if (g.distortion, g.bound_graph) != (2.0, 6.0):
            problems.append(("4-cycle", g.distortion, g.bound_graph))
        dumps.append(dump_json(jsonable([rep.to_dict(), g.to_dict()])))
    if dumps[0] != dumps[1]:
        problems.append("in-process reports differ")

    (tmp_path / "vee.json").write_text(VEE_JSON)
    (tmp_path / "c4.tsv").write_text(C4_TSV)
    outputs = []
    for _ in range(2):
        run = []
        for name in ("vee.json", "c4.tsv"):
            res = subprocess.run([sys.executable, "-m", "reeb_forest.cli", "approximate",
                                  "--input", str(tmp_path / name), "--base",
                                  "a" if name == "vee.json" else "p"],
                                 capture_output=True)
            run.append((res.returncode, res.stdout))
        outputs.append(run)
    if outputs[0] != outputs[1]:
        problems.append("CLI output not byte-identical across runs")
    vee_rep, c4_rep = (json.loads(out) for _, out in outputs[0])
    if (vee_rep["distortion"], vee_rep["bound"]) != (2, 4):
        problems.append(("vee cli", vee_rep))
    if (c4_rep["distortion"], c4_rep["bound_graph"]) != (2, 6):
        problems.append(("4-cycle cli", c4_rep))
    ok = not problems
    acceptance(7, ok, "vee (f = 0,2,1): distortion 2, bound 4; unit 4-cycle: distortion 2, "
                      "bound 6; identical bytes across repeated runs")
    assert ok, problems
