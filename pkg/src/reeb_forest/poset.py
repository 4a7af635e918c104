"""Finite posets: covers, merging points, fences and the fence-length invariant."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import networkx as nx
import numpy as np
from scipy.sparse.csgraph import connected_components

__all__ = [
    "Poset",
    "Fence",
    "PosetError",
    "BudgetExceeded",
    "BoundUnavailable",
    "build_poset",
    "transitive_closure",
    "merging_points",
    "is_tree",
    "covering_graph",
    "betti_covering",
    "betti_euler",
    "betti_merging",
    "max_fence_length",
    "longest_fence",
    "count_merging_lower_bound",
]

DEFAULT_FENCE_BUDGET = 40


class PosetError(ValueError):
    """Raised when a relation is not a connected finite partial order."""


class BudgetExceeded(RuntimeError):
    """Exact fence search refused: the poset is over the size budget."""


class BoundUnavailable(ValueError):
    """The 2*beta+2 fence bound needs a smallest element."""


def transitive_closure(rel: np.ndarray) -> np.ndarray:
    """Reflexive-transitive closure of a boolean relation (Warshall)."""
    leq = np.array(rel, dtype=bool, copy=True)
    np.fill_diagonal(leq, True)
    for k in range(leq.shape[0]):
        leq |= np.outer(leq[:, k], leq[k, :])
    return leq


class Poset:
    """A finite connected partial order on ``0..n-1``.

    Parameters
    ----------
    leq : (n, n) array_like of bool
        ``leq[x, y]`` is true iff ``x <= y``. Must already be reflexive,
        antisymmetric and transitive; use :func:`build_poset` to start from
        cover pairs.
    labels : sequence of str, optional
        Element names; defaults to ``"0" .. "n-1"``.
    """

    def __init__(self, leq, labels: Sequence[str] | None = None, *, check: bool = True):
        leq = np.array(leq, dtype=bool, copy=True)
        if leq.ndim != 2 or leq.shape[0] != leq.shape[1]:
            raise PosetError("relation must be a square matrix")
        n = leq.shape[0]
        if labels is None:
            labels = [str(i) for i in range(n)]
        labels = tuple(str(s) for s in labels)
        if len(labels) != n:
            raise PosetError(f"expected {n} labels, got {len(labels)}")
        if len(set(labels)) != n:
            raise PosetError("labels must be distinct")

        lt = leq & ~np.eye(n, dtype=bool)
        if check:
            if n and not leq.diagonal().all():
                raise PosetError("not a partial order: relation is not reflexive")
            if (lt & lt.T).any():
                raise PosetError("not a partial order: relation has a cycle")
            li = leq.astype(np.int64)
            if ((li @ li > 0) & ~leq).any():
                raise PosetError("not a partial order: relation is not transitive")

        comp = leq | leq.T
        if n > 1:
            ncomp, _ = connected_components(comp, directed=False)
            if ncomp > 1:
                raise PosetError("poset not connected")

        lti = lt.astype(np.int64)
        cover = lt & ~(lti @ lti > 0)

        for arr in (leq, lt, comp, cover):
            arr.setflags(write=False)
        self.n = n
        self.labels = labels
        self.leq = leq
        self.lt = lt
        self.comparable = comp
        # cover[x, y]: y covers x
        self.cover = cover
        self.lower_covers = tuple(tuple(np.flatnonzero(cover[:, y]).tolist()) for y in range(n))
        self.upper_covers = tuple(tuple(np.flatnonzero(cover[x, :]).tolist()) for x in range(n))
        self._index = {s: i for i, s in enumerate(labels)}

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Poset(n={self.n}, covers={self.cover_pairs()})"

    def index(self, label) -> int:
        if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
            if 0 <= label < self.n:
                return int(label)
            raise KeyError(label)
        return self._index[str(label)]

    def cover_pairs(self) -> list[tuple[int, int]]:
        """All pairs ``(x, y)`` with ``y`` covering ``x``, in index order."""
        xs, ys = np.nonzero(self.cover)
        return list(zip(xs.tolist(), ys.tolist()))

    def iota(self, x: int) -> int:
        """Number of elements covered by ``x``."""
        return len(self.lower_covers[x])

    @property
    def minimum(self) -> int | None:
        """The smallest element, or ``None``."""
        below_all = np.flatnonzero(self.leq.all(axis=1))
        return int(below_all[0]) if below_all.size else None

    def has_minimum(self) -> bool:
        return self.minimum is not None

    def same_order(self, other: "Poset") -> bool:
        return self.n == other.n and bool((self.leq == other.leq).all())


def build_poset(cover_pairs: Iterable[tuple], n: int | None = None,
                labels: Sequence[str] | None = None) -> Poset:
    """Build a poset from generating pairs ``(x, y)`` meaning ``x < y``.

    Pairs may use integer indices or labels. The closure of the pairs is
    taken, so redundant (implied) pairs simply disappear from the covers.
    """
    pairs = list(cover_pairs)
    if labels is not None:
        labels = [str(s) for s in labels]
        if n is None:
            n = len(labels)
        lookup = {s: i for i, s in enumerate(labels)}
    else:
        lookup = {}
    if n is None:
        raise PosetError("element count is required without labels")

    def idx(v):
        if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
            i = int(v)
        elif str(v) in lookup:
            i = lookup[str(v)]
        else:
            raise PosetError(f"unknown element {v!r}")
        if not 0 <= i < n:
            raise PosetError(f"element {i} out of range 0..{n - 1}")
        return i

    rel = np.zeros((n, n), dtype=bool)
    for x, y in pairs:
        i, j = idx(x), idx(y)
        if i == j:
            raise PosetError(f"not a partial order: self-pair ({x}, {y})")
        rel[i, j] = True
    return Poset(transitive_closure(rel), labels)


@dataclass(frozen=True)
class Fence:
    """A zigzag ``x0 < x1 > x2 < ...`` (or its dual) given by element indices."""

    elements: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(int(x) for x in self.elements))

    @property
    def length(self) -> int:
        return len(self.elements) - 1

    def check(self, P: Poset) -> None:
        """Raise ``PosetError`` unless this is a fence in ``P``."""
        els = self.elements
        if not els:
            raise PosetError("empty fence")
        if len(set(els)) != len(els):
            raise PosetError("fence elements must be distinct")
        for i, x in enumerate(els):
            for j in range(i + 1, len(els)):
                comparable = bool(P.comparable[x, els[j]])
                if (j == i + 1) != comparable:
                    kind = "consecutive elements incomparable" if j == i + 1 else \
                        "non-consecutive elements comparable"
                    raise PosetError(f"invalid fence: {kind} at positions {i}, {j}")
        # alternation follows from the induced-path condition, but keep it explicit
        ups = [bool(P.lt[a, b]) for a, b in zip(els, els[1:])]
        if any(u == v for u, v in zip(ups, ups[1:])):
            raise PosetError("invalid fence: directions do not alternate")

    def is_fence_in(self, P: Poset) -> bool:
        try:
            self.check(P)
        except PosetError:
            return False
        return True


def merging_points(P: Poset) -> frozenset[int]:
    """Elements covering more than one element."""
    return frozenset(x for x in range(P.n) if P.iota(x) > 1)


def covering_graph(P: Poset) -> nx.DiGraph:
    """Hasse diagram: edge ``x -> y`` for each ``y`` covering ``x``."""
    G = nx.DiGraph()
    for i, s in enumerate(P.labels):
        G.add_node(i, label=s)
    G.add_edges_from(P.cover_pairs())
    return G


def is_tree(P: Poset) -> bool:
    """True iff no element is a merging point.

    Cross-checked (when assertions are on) against the covering graph: a
    poset is a tree iff it has a smallest element and its Hasse diagram is
    acyclic. The smallest-element clause matters: the vee ``a < b > c`` has an
    acyclic Hasse diagram but is not a tree.
    """
    tree = not merging_points(P)
    if __debug__:
        acyclic = nx.is_forest(covering_graph(P).to_undirected())
        assert tree == (acyclic and P.has_minimum()), "tree characterizations disagree"
    return tree


def betti_euler(P: Poset) -> int:
    """``1 - V + E`` of the (connected) covering graph."""
    return 1 - P.n + int(P.cover.sum())


def betti_merging(P: Poset) -> int:
    """``sum(iota(x) - 1)`` over elements covering something."""
    return sum(P.iota(x) - 1 for x in range(P.n) if P.iota(x) >= 1)


def betti_covering(P: Poset) -> int:
    """First Betti number of the covering graph.

    When ``P`` has a smallest element the merging-point sum is computed too
    and must agree with Euler's formula.
    """
    beta = betti_euler(P)
    if P.has_minimum():
        merged = betti_merging(P)
        if merged != beta:
            raise AssertionError(f"Betti formulas disagree: euler={beta}, merging={merged}")
    return beta


def with_virtual_bottom(P: Poset) -> Poset:
    """``P`` with a new element below everything, labelled ``"_bottom"``."""
    n = P.n
    leq = np.zeros((n + 1, n + 1), dtype=bool)
    leq[1:, 1:] = P.leq
    leq[0, :] = True
    label = "_bottom"
    while label in P.labels:
        label = "_" + label
    return Poset(leq, (label,) + P.labels, check=False)


def _fence_cap(P: Poset) -> int:
    # any fence of length l forces floor((l-1)/2) merging points, so l <= 2m + 2
    cap = max(P.n - 1, 0)
    cap = min(cap, 2 * len(merging_points(P)) + 2)
    if P.has_minimum():
        cap = min(cap, 2 * betti_euler(P) + 2)
    return cap


def longest_fence(P: Poset, budget: int = DEFAULT_FENCE_BUDGET) -> Fence:
    """A fence of maximal length, by depth-first search over induced paths.

    Fences are exactly the induced paths of the comparability graph, so the
    search extends a path only by elements comparable to its last element
    and incomparable to every earlier one. Starting elements are tried in
    index order and the search stops once the merging-point cap is reached.
    """
    if P.n > budget:
        raise BudgetExceeded(f"budget exceeded, use bound ({P.n} elements > {budget})")
    if P.n == 0:
        raise PosetError("empty poset")
    nbr = [0] * P.n
    closed = [0] * P.n
    for x in range(P.n):
        bits = 0
        for y in np.flatnonzero(P.comparable[x]).tolist():
            if y != x:
                bits |= 1 << y
        nbr[x] = bits
        closed[x] = bits | (1 << x)
    cap = _fence_cap(P)
    best: list[int] = [0]

    def dfs(path: list[int], forbidden: int) -> bool:
        # forbidden: elements in or adjacent to path[:-1], plus path[-1]
        if len(path) > len(best):
            best[:] = path
            if len(best) - 1 >= cap:
                return True
        last = path[-1]
        cand = nbr[last] & ~forbidden
        while cand:
            low = cand & -cand
            y = low.bit_length() - 1
            cand ^= low
            if dfs(path + [y], forbidden | closed[last] | low):
                return True
        return False

    for s in range(P.n):
        if dfs([s], 1 << s):
            break
    return Fence(tuple(best))


def max_fence_length(P: Poset, mode: str = "exact", *, budget: int = DEFAULT_FENCE_BUDGET,
                     virtual_bottom: bool = False) -> int:
    """Maximal fence length ``M_F`` of ``P``.

    ``mode="exact"`` runs :func:`longest_fence` (exponential in the worst
    case, refused above ``budget`` elements). ``mode="bound"`` returns
    ``2 * beta + 2`` which needs a smallest element; pass
    ``virtual_bottom=True`` to adjoin one instead of raising.
    """
    if mode == "exact":
        return longest_fence(P, budget).length
    if mode != "bound":
        raise ValueError(f"unknown mode {mode!r}")
    if not P.has_minimum():
        if not virtual_bottom:
            raise BoundUnavailable("bound unavailable: poset has no smallest element")
        P = with_virtual_bottom(P)
    return 2 * betti_covering(P) + 2


def count_merging_lower_bound(F: Fence, P: Poset) -> int:
    """Guaranteed number of merging points implied by a fence of length ``l``."""
    F.check(P)
    return max(0, (F.length - 1) // 2)
