import heapq

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from ktoolbox import common
from ktoolbox.common import strict_dataclass

import dstSolver

from dstbase import CapExceeded
from dstbase import Infeasible
from dstSolver import Instance
from dstSolver import Solution


logger = common.ExtendedLogger("dstkit." + __name__)


DEFAULT_ORACLE_CAP = 12

BRUTE_FORCE_MAX_EDGES = 18


@dataclass(frozen=True, eq=False)
class DPTable:
    """f(S, v): the cheapest out-tree rooted at v reaching the terminal
    subset S, for every subset S (as a bitmask over terminals) and vertex v.

    Column index n is a virtual source with zero-cost arcs to every root,
    so f(all, n) is the optimum. Values are exact integers; unreachable
    entries hold the sentinel unreachable, which exceeds every finite
    value."""

    terminals: tuple[int, ...]
    vertices: tuple[int, ...]
    values: np.ndarray
    split: np.ndarray
    relay: np.ndarray
    arc_tail: np.ndarray
    arc_head: np.ndarray
    arc_eid: np.ndarray
    unreachable: int

    @property
    def source(self) -> int:
        return len(self.vertices)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.terminals)) - 1

    def index_of(self, v: int) -> int:
        return self.vertices.index(v)

    def value(self, mask: int, v: Optional[int] = None) -> int:
        col = self.source if v is None else self.index_of(v)
        return int(self.values[mask, col])

    def reachable(self, mask: int, v: Optional[int] = None) -> bool:
        return self.value(mask, v) < self.unreachable

    @property
    def optimum(self) -> Optional[int]:
        """None when some terminal cannot be reached from the roots."""
        opt = self.value(self.full_mask)
        return opt if opt < self.unreachable else None

    def reconstruct(self) -> set[int]:
        edges: set[int] = set()
        stack = [(self.full_mask, self.source)]
        while stack:
            mask, col = stack.pop()
            a = int(self.relay[mask, col])
            if a >= 0:
                eid = int(self.arc_eid[a])
                if eid >= 0:
                    edges.add(eid)
                stack.append((mask, int(self.arc_head[a])))
                continue
            s1 = int(self.split[mask, col])
            if s1 > 0:
                stack.append((s1, col))
                stack.append((mask ^ s1, col))
        return edges


def _relax(
    row: np.ndarray,
    relay_row: np.ndarray,
    in_arcs: list[list[tuple[int, int, int]]],
    unreachable: int,
) -> None:
    # Dijkstra on reversed arcs, seeded with the current row values.
    heap = [(int(row[i]), int(i)) for i in np.flatnonzero(row < unreachable)]
    heapq.heapify(heap)
    done = np.zeros(len(row), dtype=bool)
    while heap:
        val, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for a, v, cost in in_arcs[u]:
            cand = val + cost
            if not done[v] and cand < row[v]:
                row[v] = cand
                relay_row[v] = a
                heapq.heappush(heap, (cand, v))


def _table_dtype(total: int) -> tuple[int, type]:
    """The unreachable sentinel and the dtype of the value table.

    Finite entries never exceed the total edge cost, split candidates stay
    below twice the sentinel and relay candidates below three times the
    total, so int64 is used when that all fits. Larger costs fall back to
    Python integers."""
    unreachable = 4 * total + 1
    if 2 * unreachable < np.iinfo(np.int64).max:
        return unreachable, np.int64
    return unreachable, object


def steiner_dp(inst: Instance, *, cap: int = DEFAULT_ORACLE_CAP) -> DPTable:
    """Fill the terminal-subset table by splitting at a vertex and relaying
    along shortest dipaths, one subset at a time in increasing order."""
    k = inst.k
    if k > cap:
        raise CapExceeded(f"{k} terminals exceed the oracle cap of {cap}")

    g = inst.graph
    vertices = tuple(sorted(g.vertices))
    col = {v: i for i, v in enumerate(vertices)}
    n_cols = len(vertices) + 1
    source = len(vertices)

    tails: list[int] = []
    heads: list[int] = []
    eids: list[int] = []
    costs: list[int] = []
    for e in g.real_edges:
        tails.append(col[e.tail])
        heads.append(col[e.head])
        eids.append(e.eid)
        costs.append(e.cost)
    for r in inst.roots:
        tails.append(source)
        heads.append(col[r])
        eids.append(-1)
        costs.append(0)

    in_arcs: list[list[tuple[int, int, int]]] = [[] for _ in range(n_cols)]
    for a, (t, h, c) in enumerate(zip(tails, heads, costs)):
        in_arcs[h].append((a, t, c))

    terminals = tuple(sorted(inst.terminals))
    n_masks = 1 << k
    unreachable, dtype = _table_dtype(sum(costs))
    values = np.full((n_masks, n_cols), unreachable, dtype=dtype)
    split = np.full((n_masks, n_cols), -1, dtype=np.int64)
    relay = np.full((n_masks, n_cols), -1, dtype=np.int64)

    for i, t in enumerate(terminals):
        values[1 << i, col[t]] = 0

    for mask in range(1, n_masks):
        low = mask & -mask
        rest = mask ^ low
        if rest:
            row = values[mask]
            split_row = split[mask]
            # Splits keep the lowest terminal in the first part, so every
            # unordered pair of parts is tried once.
            sub = rest
            while True:
                s1 = sub | low
                if s1 != mask:
                    cand = values[s1] + values[mask ^ s1]
                    better = np.asarray(cand < row, dtype=bool)
                    if better.any():
                        row[better] = cand[better]
                        split_row[better] = s1
                if sub == 0:
                    break
                sub = (sub - 1) & rest
        _relax(values[mask], relay[mask], in_arcs, unreachable)

    logger.debug(
        f"oracle: table of {n_masks} subsets x {n_cols} columns, optimum {values[n_masks - 1, source] if k else 0} ({values.dtype})"
    )
    return DPTable(
        terminals=terminals,
        vertices=vertices,
        values=values,
        split=split,
        relay=relay,
        arc_tail=np.array(tails, dtype=np.int64),
        arc_head=np.array(heads, dtype=np.int64),
        arc_eid=np.array(eids, dtype=np.int64),
        unreachable=unreachable,
    )


def exact_dst(inst: Instance, *, cap: int = DEFAULT_ORACLE_CAP) -> Solution:
    if inst.k > cap:
        raise CapExceeded(f"{inst.k} terminals exceed the oracle cap of {cap}")
    if inst.k == 0:
        return Solution(edges=(), cost=0)
    table = steiner_dp(inst, cap=cap)
    opt = table.optimum
    if opt is None:
        raise Infeasible("some terminal is unreachable from the roots")
    solution = dstSolver.prune(inst, table.reconstruct())
    if solution.cost != opt:
        raise RuntimeError(
            f"reconstructed cost {solution.cost} differs from table optimum {opt}"
        )
    return solution


def brute_force_dst(
    inst: Instance,
    *,
    max_edges: int = BRUTE_FORCE_MAX_EDGES,
) -> Solution:
    """Cheapest feasible edge subset by include/exclude enumeration."""
    g = inst.graph
    if g.num_edges > max_edges:
        raise CapExceeded(
            f"{g.num_edges} edges exceed the enumeration limit of {max_edges}"
        )
    if inst.k == 0:
        return Solution(edges=(), cost=0)

    edges = g.real_edges
    roots = frozenset(inst.roots)

    def _feasible(chosen: list[int]) -> bool:
        reached = set(roots)
        changed = True
        while changed:
            changed = False
            for i in chosen:
                e = edges[i]
                if e.tail in reached and e.head not in reached:
                    reached.add(e.head)
                    changed = True
        return inst.terminals <= reached

    best_cost: Optional[int] = None
    best: list[int] = []

    def _search(i: int, chosen: list[int], cost: int) -> None:
        nonlocal best_cost, best
        if best_cost is not None and cost >= best_cost:
            return
        if _feasible(chosen):
            best_cost = cost
            best = list(chosen)
            return
        if i == len(edges):
            return
        if not _feasible(chosen + list(range(i, len(edges)))):
            return
        chosen.append(i)
        _search(i + 1, chosen, cost + edges[i].cost)
        chosen.pop()
        _search(i + 1, chosen, cost)

    _search(0, [], 0)
    if best_cost is None:
        raise Infeasible("some terminal is unreachable from the roots")
    return dstSolver.prune(inst, [edges[i].eid for i in best])


@strict_dataclass
@dataclass(frozen=True, kw_only=True)
class RatioRecord:
    k: int
    num_roots: int
    n: int
    opt: int
    approx_cost: int
    ratio: float
    bound: float
    bound_satisfied: bool


def ratio_report(
    inst: Instance,
    approx: Solution,
    *,
    epsilon: Fraction = dstSolver.DEFAULT_EPSILON,
    cap: int = DEFAULT_ORACLE_CAP,
    optimum: Optional[Solution] = None,
) -> RatioRecord:
    if optimum is None:
        optimum = exact_dst(inst, cap=cap)
    bound = dstSolver.approximation_bound(inst.k, len(inst.roots), epsilon)
    opt = optimum.cost
    if opt == 0:
        ratio = 1.0 if approx.cost == 0 else float("inf")
    else:
        ratio = approx.cost / opt
    return RatioRecord(
        k=inst.k,
        num_roots=len(inst.roots),
        n=inst.n,
        opt=opt,
        approx_cost=approx.cost,
        ratio=ratio,
        bound=float(bound),
        bound_satisfied=approx.cost <= bound * opt,
    )
