import collections
import functools
import hashlib
import math
import sys
import time

from collections.abc import Iterable
from collections.abc import Mapping
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field
from fractions import Fraction
from typing import NamedTuple
from typing import Optional

from ktoolbox import common
from ktoolbox.common import strict_dataclass

import planarGraph
import separator
import shortestPaths

from dstbase import Infeasible
from dstbase import InvalidEpsilon
from dstbase import NegativeCost
from dstbase import RoleConflict
from dstbase import UnknownVertex
from planarGraph import ContractionMap
from planarGraph import EmbeddedDigraph
from planarGraph import Subdivision
from separator import SeparatorResult
from separator import WeightAssignment


logger = common.ExtendedLogger("dstkit." + __name__)


DEFAULT_EPSILON = Fraction(1, 2)

# Nested recursion goes one separator level per halving of the terminal
# count, each level descending through all opt guesses.
_RECURSION_LIMIT = 20000


def parse_epsilon(value: str | int | float | Fraction) -> Fraction:
    """Parse "1/2", "0.25", 1 or a Fraction into a positive rational."""
    try:
        if isinstance(value, str):
            eps = Fraction(value.strip())
        else:
            eps = Fraction(value)
    except (ValueError, ZeroDivisionError) as e:
        raise InvalidEpsilon(f"invalid epsilon {repr(value)}: {e}")
    if eps <= 0:
        raise InvalidEpsilon(f"epsilon must be positive but is {eps}")
    return eps


def ceil_log2(x: int | Fraction) -> int:
    """Smallest o >= 0 with x <= 2**o."""
    if x <= 1:
        return 0
    return (math.ceil(x) - 1).bit_length()


def approximation_bound(k: int, num_roots: int, epsilon: Fraction) -> Fraction:
    ell = ceil_log2(k) if k > 0 else 0
    if num_roots <= 1:
        return (6 * ell + 1) * (1 + epsilon)
    return (8 * (num_roots + ell) + 1) * (1 + epsilon)


def call_budget(k: int, ell: int, o: int) -> int:
    return k * 2 ** (2 * ell + o)


@dataclass(frozen=True, eq=False)
class Instance:
    """A rooted Steiner problem on an embedded digraph.

    lineage maps this instance's edges back to the graph the user started
    from, so a solution found here can be reported in original edge ids."""

    graph: EmbeddedDigraph
    roots: tuple[int, ...]
    terminals: frozenset[int]
    lineage: ContractionMap
    name: str = ""

    def __post_init__(self) -> None:
        if not self.roots:
            raise RoleConflict("an instance needs at least one root")
        if len(set(self.roots)) != len(self.roots):
            raise RoleConflict(f"duplicate roots {list(self.roots)}")
        for v in (*self.roots, *self.terminals):
            if v not in self.graph.vertices:
                raise UnknownVertex(f"root or terminal {v} is not a vertex")
        both = self.terminals.intersection(self.roots)
        if both:
            raise RoleConflict(f"vertices {sorted(both)} are both root and terminal")

    @staticmethod
    def create(
        graph: EmbeddedDigraph,
        roots: Iterable[int],
        terminals: Iterable[int],
        *,
        name: str = "",
    ) -> "Instance":
        return Instance(
            graph=graph,
            roots=tuple(roots),
            terminals=frozenset(terminals),
            lineage=ContractionMap.identity(graph.edges),
            name=name,
        )

    @property
    def k(self) -> int:
        return len(self.terminals)

    @property
    def n(self) -> int:
        return self.graph.num_vertices

    @property
    def m(self) -> int:
        return self.graph.num_edges

    @functools.cached_property
    def fingerprint(self) -> str:
        data = (self.graph.fingerprint, self.roots, tuple(sorted(self.terminals)))
        return hashlib.blake2b(repr(data).encode(), digest_size=16).hexdigest()

    def derive(
        self,
        graph: EmbeddedDigraph,
        cmap: ContractionMap,
        *,
        roots: Optional[Iterable[int]] = None,
        terminals: Optional[Iterable[int]] = None,
    ) -> "Instance":
        return Instance(
            graph=graph,
            roots=self.roots if roots is None else tuple(roots),
            terminals=self.terminals if terminals is None else frozenset(terminals),
            lineage=self.lineage.compose(cmap),
            name=self.name,
        )


@strict_dataclass
@dataclass(frozen=True, kw_only=True)
class Solution:
    """Chosen edges, in the id space of the instance they were solved on.

    nodes lists weighted Steiner vertices paid for, for node-weighted
    problems only."""

    edges: tuple[int, ...]
    cost: int
    feasible: bool = True
    nodes: tuple[int, ...] = ()

    def _post_check(self) -> None:
        if list(self.edges) != sorted(set(self.edges)):
            raise ValueError("solution edges must be sorted and distinct")
        if self.cost < 0:
            raise ValueError("solution cost must be non-negative")


@strict_dataclass
@dataclass(frozen=True, kw_only=True)
class ScalingInfo:
    epsilon: str
    delta: int
    scaled_delta: int
    factor: str
    n: int
    k: int
    removed_vertices: int
    removed_edges: int
    zero_solution: Optional[tuple[int, ...]] = None


@dataclass(frozen=True)
class SeparatorAudit:
    """Checks on one separator computed during the recursion."""

    terminal_weight: int
    heaviest_component: int
    max_marked: int
    paths_shortest: bool

    @property
    def balanced(self) -> bool:
        return 2 * self.heaviest_component <= self.terminal_weight

    @property
    def ok(self) -> bool:
        return self.balanced and self.max_marked <= 4 and self.paths_shortest


@dataclass(frozen=True)
class MergeAudit:
    merged_cost: int
    purchased_cost: int
    sub_costs: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return self.merged_cost == self.purchased_cost + sum(self.sub_costs)


class _Bought(NamedTuple):
    edges: frozenset[int]
    cost: int


@dataclass
class RecursionContext:
    """State shared by every call of one top-level recursion."""

    k: int
    ell: int
    o: int
    audit: bool = False
    memoize: bool = True
    calls: int = 0
    memo_hits: int = 0
    memo: dict[tuple[str, Fraction], Optional[_Bought]] = field(default_factory=dict)
    separator_audits: list[SeparatorAudit] = field(default_factory=list)
    merge_audits: list[MergeAudit] = field(default_factory=list)

    @property
    def call_budget(self) -> int:
        return call_budget(self.k, self.ell, self.o)


@dataclass(frozen=True)
class RecursionBudget:
    opt_estimate: Fraction
    context: RecursionContext

    def halved(self) -> "RecursionBudget":
        return RecursionBudget(self.opt_estimate / 2, self.context)


@dataclass(frozen=True)
class Subinstance:
    instance: Instance
    to_parent: ContractionMap
    component: tuple[int, ...]


@dataclass(frozen=True)
class SolveReport:
    instance: Instance
    solution: Solution
    scaling: ScalingInfo
    epsilon: Fraction
    ell: int
    o: int
    opt_estimate: Fraction
    recursion_calls: int
    memo_hits: int
    wall_time: float
    separator_audits: tuple[SeparatorAudit, ...] = ()
    merge_audits: tuple[MergeAudit, ...] = ()

    @property
    def call_budget(self) -> int:
        return call_budget(self.instance.k, self.ell, self.o)

    @property
    def bound(self) -> Fraction:
        return approximation_bound(
            self.instance.k, len(self.instance.roots), self.epsilon
        )

    @property
    def separator_violations(self) -> int:
        return sum(1 for a in self.separator_audits if not a.ok) + sum(
            1 for a in self.merge_audits if not a.ok
        )


def scale_costs(
    inst: Instance,
    epsilon: str | int | float | Fraction = DEFAULT_EPSILON,
) -> tuple[Instance, ScalingInfo]:
    """Round edge costs so that optimal values become polynomially bounded.

    Vertices farther than k*delta from every root cannot be in an optimal
    solution and go away together with edges costing more than that.
    Remaining costs c become max(1, ceil(c*n/(eps*delta))). A zero delta
    means every terminal is reached for free; the union of those paths is
    returned in zero_solution instead."""
    eps = parse_epsilon(epsilon)
    g = inst.graph
    table = shortestPaths.dijkstra(g, inst.roots)
    unreached = sorted(t for t in inst.terminals if not table.reached(t))
    if unreached:
        raise Infeasible(f"terminals {unreached[:5]} are unreachable from the roots")

    delta = max((int(table.distance(t)) for t in inst.terminals), default=0)
    if delta == 0:
        zero: set[int] = set()
        for t in inst.terminals:
            zero.update(table.path_to(t))
        info = ScalingInfo(
            epsilon=str(eps),
            delta=0,
            scaled_delta=0,
            factor="0",
            n=g.num_vertices,
            k=inst.k,
            removed_vertices=0,
            removed_edges=0,
            zero_solution=tuple(sorted(zero)),
        )
        return inst, info

    limit = inst.k * delta
    protected = frozenset(inst.roots) | inst.terminals
    far = [
        v for v in g.vertices if v not in protected and table.distance(v) > limit
    ]
    g1, m1 = planarGraph.delete_vertices(g, far)
    expensive = [eid for eid, e in g1.edges.items() if e.cost > limit]
    g2, m2 = planarGraph.delete_edges(g1, expensive)

    factor = Fraction(g.num_vertices) / (eps * delta)
    edges = {
        eid: planarGraph.Edge(
            eid,
            e.tail,
            e.head,
            e.cost if e.aux else max(1, math.ceil(e.cost * factor)),
            e.aux,
        )
        for eid, e in g2.edges.items()
    }
    g3 = EmbeddedDigraph(vertices=g2.vertices, edges=edges, rotation=g2.rotation)
    scaled = inst.derive(g3, m1.compose(m2))

    scaled_table = shortestPaths.dijkstra(g3, inst.roots)
    scaled_delta = max(int(scaled_table.distance(t)) for t in inst.terminals)
    info = ScalingInfo(
        epsilon=str(eps),
        delta=delta,
        scaled_delta=scaled_delta,
        factor=str(factor),
        n=g.num_vertices,
        k=inst.k,
        removed_vertices=len(far),
        removed_edges=g.num_edges - g3.num_edges,
    )
    logger.debug(
        f"scale: delta={delta} factor={factor} scaled delta={scaled_delta} removed {info.removed_vertices} vertices and {info.removed_edges} edges"
    )
    return scaled, info


def preprocess_far(
    inst: Instance,
    bound: int | float | Fraction,
    *,
    table: Optional[shortestPaths.DistanceTable] = None,
) -> Instance:
    """Delete every vertex farther than bound from all roots."""
    if table is None:
        table = shortestPaths.dijkstra(inst.graph, inst.roots)
    far = [v for v in inst.graph.vertices if table.distance(v) > bound]
    if not far:
        return inst
    g2, cmap = planarGraph.delete_vertices(inst.graph, far)
    return inst.derive(g2, cmap, terminals=inst.terminals.difference(far))


def build_subinstances(inst: Instance, sep: SeparatorResult) -> list[Subinstance]:
    """One subinstance per weak component left by the separator that still
    holds terminals.

    The separator's vertices are contracted into its label, which becomes
    the first root of every subinstance; edges entering the label are of no
    use and are dropped. Roots inside a component stay roots."""
    label = sep.label
    if label is None:
        contracted = inst.graph
        cmap = ContractionMap.identity(inst.graph.edges)
    else:
        contracted, cmap = planarGraph.contract_connected(inst.graph, sep.vertices, label)

    subs: list[Subinstance] = []
    for comp in sep.components:
        comp_set = frozenset(comp)
        terms = inst.terminals & comp_set
        if not terms:
            continue
        comp_roots = [r for r in inst.roots if r in comp_set]
        if label is None:
            sub_g, smap = planarGraph.induced_subgraph(contracted, comp_set)
            roots = comp_roots
        else:
            sub_g, smap = planarGraph.induced_subgraph(
                contracted,
                comp_set | {label},
                drop_edge=lambda e: e.head == label,
            )
            roots = [label, *comp_roots]
        to_parent = cmap.compose(smap)
        sub_inst = Instance(
            graph=sub_g,
            roots=tuple(roots),
            terminals=terms,
            lineage=inst.lineage.compose(to_parent),
            name=inst.name,
        )
        subs.append(Subinstance(instance=sub_inst, to_parent=to_parent, component=comp))
    return subs


def merge_solutions(
    inst: Instance,
    sep: SeparatorResult,
    subs: Sequence[Subinstance],
    sub_edges: Sequence[Iterable[int]],
) -> tuple[frozenset[int], MergeAudit]:
    """Union of the purchased part of the separator and the lifted
    subinstance solutions, all in the id space of inst."""
    purchased = sep.purchased_edges
    edges = set(purchased)
    sub_costs: list[int] = []
    for sub, se in zip(subs, sub_edges, strict=True):
        se = list(se)
        sub_costs.append(sub.instance.graph.cost(se))
        edges.update(sub.to_parent.lift(se))
    audit = MergeAudit(
        merged_cost=inst.graph.cost(edges),
        purchased_cost=inst.graph.cost(purchased),
        sub_costs=tuple(sub_costs),
    )
    return frozenset(edges), audit


def audit_separator(
    inst: Instance,
    sep: SeparatorResult,
    table: shortestPaths.DistanceTable,
) -> SeparatorAudit:
    heaviest = max((len(inst.terminals.intersection(c)) for c in sep.components), default=0)
    return SeparatorAudit(
        terminal_weight=inst.k,
        heaviest_component=heaviest,
        max_marked=max((len(m) for m in sep.marked.values()), default=0),
        paths_shortest=all(
            inst.graph.cost(p.edges) == table.distance(p.target)
            for p in sep.purchased_paths
        ),
    )


def _recurse(inst: Instance, budget: RecursionBudget) -> Optional[_Bought]:
    ctx = budget.context
    ctx.calls += 1
    if not ctx.memoize:
        return _recurse_uncached(inst, budget)
    key = (inst.fingerprint, budget.opt_estimate)
    if key in ctx.memo:
        ctx.memo_hits += 1
        return ctx.memo[key]
    result = _recurse_uncached(inst, budget)
    ctx.memo[key] = result
    return result


def _recurse_uncached(inst: Instance, budget: RecursionBudget) -> Optional[_Bought]:
    ctx = budget.context
    opt = budget.opt_estimate
    if inst.k == 0:
        return _Bought(frozenset(), 0)
    if opt < 1:
        return None

    table = shortestPaths.dijkstra(inst.graph, inst.roots)
    if any(table.distance(t) > opt for t in inst.terminals):
        return None

    if inst.k == 1:
        (t,) = inst.terminals
        path = table.path_to(t)
        return _Bought(frozenset(path), inst.graph.cost(path))

    logger.debug(
        f"dst: call #{ctx.calls} k={inst.k} roots={len(inst.roots)} n={inst.n} opt~={opt}"
    )

    f1 = _recurse(inst, budget.halved())

    near = preprocess_far(inst, opt, table=table)
    w = WeightAssignment.for_terminals(near.terminals)
    if len(near.roots) == 1:
        sep = separator.directed_separator(near.graph, near.roots[0], w)
    else:
        sep = separator.multirooted_separator(near.graph, near.roots, w)
    if ctx.audit:
        ctx.separator_audits.append(audit_separator(near, sep, table))

    subs = build_subinstances(near, sep)
    sub_edges: list[frozenset[int]] = []
    f2: Optional[_Bought] = None
    for sub in subs:
        res = _recurse(sub.instance, budget)
        if res is None:
            break
        sub_edges.append(res.edges)
    else:
        merged, audit = merge_solutions(near, sep, subs, sub_edges)
        if ctx.audit:
            ctx.merge_audits.append(audit)
        if not audit.ok:
            raise RuntimeError(
                f"merged cost {audit.merged_cost} differs from purchased {audit.purchased_cost} plus parts {list(audit.sub_costs)}"
            )
        # near shares edge ids with inst
        f2 = _Bought(merged, audit.merged_cost)

    if f2 is not None and (f1 is None or f2.cost <= f1.cost):
        return f2
    return f1


def dst_recurse(
    inst: Instance,
    budget: RecursionBudget | int | Fraction,
) -> Solution:
    """Run the guess-halving recursion with the given estimate of the
    optimum. Raises Infeasible when the estimate is too small to certify a
    solution."""
    if not isinstance(budget, RecursionBudget):
        opt = Fraction(budget)
        budget = RecursionBudget(
            opt,
            RecursionContext(k=inst.k, ell=ceil_log2(inst.k), o=ceil_log2(opt)),
        )
    res = _recurse(inst, budget)
    if res is None:
        raise Infeasible(
            f"no solution of cost at most {budget.opt_estimate} was certified"
        )
    return Solution(edges=tuple(sorted(res.edges)), cost=res.cost)


def _feasible_with(
    adj: Mapping[int, Sequence[tuple[int, int]]],
    removed: set[int],
    roots: Iterable[int],
    terminals: frozenset[int],
) -> bool:
    seen = set(roots)
    queue = collections.deque(seen)
    while queue:
        x = queue.popleft()
        for eid, y in adj.get(x, ()):
            if eid not in removed and y not in seen:
                seen.add(y)
                queue.append(y)
    return terminals <= seen


def prune(inst: Instance, edges: Iterable[int]) -> Solution:
    """Drop edges whose removal keeps every terminal reachable, most
    expensive first."""
    chosen = sorted(set(edges))
    g = inst.graph
    adj: dict[int, list[tuple[int, int]]] = collections.defaultdict(list)
    for eid in chosen:
        e = g.edges[eid]
        adj[e.tail].append((eid, e.head))
    removed: set[int] = set()
    if not _feasible_with(adj, removed, inst.roots, inst.terminals):
        raise Infeasible("cannot prune an infeasible edge set")
    for eid in sorted(chosen, key=lambda x: (-g.edges[x].cost, x)):
        removed.add(eid)
        if not _feasible_with(adj, removed, inst.roots, inst.terminals):
            removed.remove(eid)
    kept = [eid for eid in chosen if eid not in removed]
    return Solution(edges=tuple(kept), cost=g.cost(kept))


def solve(
    inst: Instance,
    epsilon: str | int | float | Fraction = DEFAULT_EPSILON,
    *,
    prune_result: bool = False,
    audit: bool = False,
    memoize: bool = True,
) -> SolveReport:
    """Approximate a minimum-cost subgraph connecting the roots to every
    terminal.

    The returned solution uses the edge ids and costs of inst."""
    eps = parse_epsilon(epsilon)
    start = time.monotonic()
    if sys.getrecursionlimit() < _RECURSION_LIMIT:
        sys.setrecursionlimit(_RECURSION_LIMIT)

    scaled, info = scale_costs(inst, eps)
    ell = ceil_log2(inst.k) if inst.k > 0 else 0

    if info.zero_solution is not None:
        edges: Iterable[int] = info.zero_solution
        opt = Fraction(0)
        ctx = RecursionContext(k=inst.k, ell=ell, o=0)
    else:
        opt = Fraction(inst.k * info.scaled_delta)
        ctx = RecursionContext(
            k=inst.k, ell=ell, o=ceil_log2(opt), audit=audit, memoize=memoize
        )
        bought = _recurse(scaled, RecursionBudget(opt, ctx))
        if bought is None:
            raise RuntimeError(
                f"recursion found no solution with estimate {opt} on a feasible instance"
            )
        # scaled shares edge ids with inst
        edges = bought.edges

    if prune_result:
        solution = prune(inst, edges)
    else:
        lst = sorted(edges)
        solution = Solution(edges=tuple(lst), cost=inst.graph.cost(lst))

    report = SolveReport(
        instance=inst,
        solution=solution,
        scaling=info,
        epsilon=eps,
        ell=ell,
        o=ctx.o,
        opt_estimate=opt,
        recursion_calls=ctx.calls,
        memo_hits=ctx.memo_hits,
        wall_time=time.monotonic() - start,
        separator_audits=tuple(ctx.separator_audits),
        merge_audits=tuple(ctx.merge_audits),
    )
    logger.info(
        f"solve {repr(inst.name)}: cost {solution.cost} with {len(solution.edges)} edges, {ctx.calls} calls (budget {report.call_budget}) in {common.format_duration(report.wall_time)}"
    )
    return report


@dataclass(frozen=True)
class NodeWeightedReduction:
    """An edge-weighted instance equivalent to a problem that also charges
    for Steiner vertices.

    Each in-edge of a weighted vertex v is split; the half entering v
    carries the cost of v."""

    instance: Instance
    original: EmbeddedDigraph
    node_costs: Mapping[int, int]
    edge_origin: ContractionMap

    def lift(self, edges: Iterable[int]) -> Solution:
        orig = sorted({self.edge_origin.backward[eid] for eid in edges})
        touched: set[int] = set()
        for eid in orig:
            e = self.original.edges[eid]
            touched.add(e.tail)
            touched.add(e.head)
        nodes = sorted(v for v in touched if self.node_costs.get(v, 0) > 0)
        cost = self.original.cost(orig) + sum(self.node_costs[v] for v in nodes)
        return Solution(edges=tuple(orig), cost=cost, nodes=tuple(nodes))


def node_weighted_reduction(
    graph: EmbeddedDigraph,
    node_costs: Mapping[int, int],
    roots: Iterable[int],
    terminals: Iterable[int],
    *,
    name: str = "",
) -> NodeWeightedReduction:
    roots = tuple(roots)
    terminals = frozenset(terminals)
    protected = frozenset(roots) | terminals
    for v, c in node_costs.items():
        if v not in graph.vertices:
            raise UnknownVertex(f"node cost given for unknown vertex {v}")
        if c < 0:
            raise NegativeCost(f"vertex {v} has negative cost {c}")
        if c > 0 and v in protected:
            raise RoleConflict(f"root or terminal {v} cannot carry a node cost")

    next_v = graph.next_vertex_id()
    next_e = graph.next_edge_id()
    subdivisions: list[Subdivision] = []
    for v in sorted(node_costs):
        c = node_costs[v]
        if c == 0:
            continue
        for e in graph.in_edges[v]:
            subdivisions.append(
                Subdivision(eid=e.eid, vertex=next_v, new_eid=next_e, second_cost=c)
            )
            next_v += 1
            next_e += 1

    g2, cmap = planarGraph.subdivide_edges(graph, subdivisions)
    logger.debug(
        f"node-weighted reduction: {len(subdivisions)} edges subdivided for {sum(1 for c in node_costs.values() if c > 0)} weighted vertices"
    )
    return NodeWeightedReduction(
        instance=Instance.create(g2, roots, terminals, name=name),
        original=graph,
        node_costs=dict(node_costs),
        edge_origin=cmap,
    )
