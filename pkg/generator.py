import math

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ktoolbox import common

import planarGraph

from dstbase import GeneratorStyle
from dstbase import InvalidParams
from instanceFile import InstanceFile


logger = common.ExtendedLogger("dstkit." + __name__)


DEFAULT_COST_RANGE = (1, 20)

# Chance that a non-skeleton grid edge gets arcs in both directions.
BIDIRECTED_PROBABILITY = 0.25


def parse_cost_range(s: str) -> tuple[int, int]:
    """Parse "LO-HI" (or a single "C") into an inclusive integer range."""
    lo_s, sep, hi_s = s.strip().partition("-")
    try:
        lo = int(lo_s)
        hi = int(hi_s) if sep else lo
    except ValueError:
        raise InvalidParams(f"invalid cost range {repr(s)}, expected LO-HI")
    check_cost_range((lo, hi))
    return lo, hi


def check_cost_range(cost_range: tuple[int, int]) -> None:
    lo, hi = cost_range
    if lo < 0 or hi < lo:
        raise InvalidParams(
            f"cost range {lo}-{hi} must be non-negative with LO <= HI"
        )


@dataclass(frozen=True)
class GridLayout:
    n: int
    cols: int

    @property
    def rows(self) -> int:
        return -(-self.n // self.cols)

    def position(self, v: int) -> tuple[int, int]:
        return (v % self.cols, v // self.cols)

    def vertex_at(self, x: int, y: int) -> Optional[int]:
        if x < 0 or x >= self.cols or y < 0:
            return None
        v = y * self.cols + x
        return v if v < self.n else None

    def grid_edges(self) -> list[tuple[int, int]]:
        edges: list[tuple[int, int]] = []
        for v in range(self.n):
            x, y = self.position(v)
            for dx, dy in ((1, 0), (0, 1)):
                w = self.vertex_at(x + dx, y + dy)
                if w is not None:
                    edges.append((v, w))
        return edges

    def cells(self) -> list[tuple[int, int, int, int]]:
        """Complete unit cells as (lower left, lower right, upper left,
        upper right) corners."""
        cells: list[tuple[int, int, int, int]] = []
        for y in range(self.rows - 1):
            for x in range(self.cols - 1):
                a = self.vertex_at(x, y)
                b = self.vertex_at(x + 1, y)
                c = self.vertex_at(x, y + 1)
                d = self.vertex_at(x + 1, y + 1)
                if a is None or b is None or c is None or d is None:
                    continue
                cells.append((a, b, c, d))
        return cells


def _grow_forest(
    rng: np.random.Generator,
    n: int,
    roots: list[int],
    undirected: list[tuple[int, int]],
) -> list[tuple[int, int]]:
    """Random spanning forest grown from the roots. Each returned pair is
    oriented away from the root of its tree."""
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in undirected:
        adj[u].append(v)
        adj[v].append(u)
    visited = [False] * n
    frontier: list[tuple[int, int]] = []
    for r in roots:
        visited[r] = True
    for r in roots:
        frontier.extend((r, w) for w in adj[r])
    arcs: list[tuple[int, int]] = []
    while frontier:
        i = int(rng.integers(len(frontier)))
        frontier[i], frontier[-1] = frontier[-1], frontier[i]
        u, v = frontier.pop()
        if visited[v]:
            continue
        visited[v] = True
        arcs.append((u, v))
        frontier.extend((v, w) for w in adj[v] if not visited[w])
    return arcs


def generate(
    seed: int,
    n: int,
    k: int,
    num_roots: int = 1,
    cost_range: tuple[int, int] = DEFAULT_COST_RANGE,
    style: GeneratorStyle = GeneratorStyle.GRID,
    *,
    name: Optional[str] = None,
) -> InstanceFile:
    """A random instance on a grid of about sqrt(n) rows, vertices placed
    row by row.

    A random forest grown from the roots is always part of the arc set, so
    every terminal is reachable. Other grid edges are oriented at random.
    The result depends on the arguments only."""
    if num_roots < 1:
        raise InvalidParams(f"need at least one root, got {num_roots}")
    if k < 0:
        raise InvalidParams(f"terminal count {k} is negative")
    if n < num_roots + k:
        raise InvalidParams(
            f"n={n} is smaller than roots plus terminals ({num_roots} + {k})"
        )
    check_cost_range(cost_range)

    rng = np.random.default_rng(seed)
    rows = max(1, math.isqrt(n))
    layout = GridLayout(n=n, cols=-(-n // rows))

    undirected = layout.grid_edges()
    if style == GeneratorStyle.GRID_DIAGONALS:
        for a, b, c, d in layout.cells():
            if rng.random() < 0.5:
                undirected.append((a, d))
            else:
                undirected.append((b, c))

    perm = [int(v) for v in rng.permutation(n)]
    roots = sorted(perm[:num_roots])
    terminals = sorted(perm[num_roots : num_roots + k])

    skeleton = _grow_forest(rng, n, roots, undirected)
    forced = {frozenset(p): p for p in skeleton}

    lo, hi = cost_range
    pairs: list[tuple[int, int]] = list(skeleton)
    for u, v in undirected:
        arc = forced.get(frozenset((u, v)))
        if arc is not None:
            if rng.random() < BIDIRECTED_PROBABILITY:
                pairs.append((arc[1], arc[0]))
            continue
        if rng.random() < 0.5:
            u, v = v, u
        pairs.append((u, v))
        if rng.random() < BIDIRECTED_PROBABILITY:
            pairs.append((v, u))

    costs = rng.integers(lo, hi + 1, size=len(pairs))
    arcs = [
        (eid, tail, head, int(costs[eid]))
        for eid, (tail, head) in enumerate(pairs)
    ]
    positions = {v: layout.position(v) for v in range(n)}
    g = planarGraph.build_from_coordinates(
        {v: (float(x), float(y)) for v, (x, y) in positions.items()},
        arcs,
    )
    if name is None:
        name = f"{style.name.lower().replace('_', '-')}-n{n}-k{k}-r{num_roots}-s{seed}"
    logger.debug(
        f"generated {name}: {g.num_vertices} vertices, {g.num_edges} arcs ({len(skeleton)} forced)"
    )
    return InstanceFile.from_graph(
        g,
        roots,
        terminals,
        name=name,
        seed=seed,
        positions=positions,
    )
