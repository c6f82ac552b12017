import heapq
import math

from collections.abc import Mapping
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional

from ktoolbox import common

from dstbase import Unreachable
from dstbase import UnknownVertex
from planarGraph import EmbeddedDigraph


logger = common.ExtendedLogger("dstkit." + __name__)


# Distance of vertices no source reaches.
INFINITY = math.inf


@dataclass(frozen=True)
class DistanceTable:
    """Result of a (multi-source) Dijkstra run.

    Only reached vertices have entries; everything else is at INFINITY.
    owner holds the index into sources of the nearest source."""

    sources: tuple[int, ...]
    dist: Mapping[int, int]
    parent_edge: Mapping[int, Optional[int]]
    parent_vertex: Mapping[int, Optional[int]]
    owner: Mapping[int, int]

    def distance(self, v: int) -> int | float:
        return self.dist.get(v, INFINITY)

    def reached(self, v: int) -> bool:
        return v in self.dist

    def path_to(self, v: int) -> list[int]:
        if v not in self.dist:
            raise Unreachable(f"vertex {v} is not reachable from {list(self.sources)}")
        path: list[int] = []
        x: Optional[int] = v
        while x is not None:
            eid = self.parent_edge[x]
            if eid is None:
                break
            path.append(eid)
            x = self.parent_vertex[x]
        path.reverse()
        return path


@dataclass(frozen=True)
class ArborescenceSet:
    roots: tuple[int, ...]
    trees: tuple[frozenset[int], ...]
    owner: Mapping[int, int]
    table: DistanceTable

    def root_of(self, v: int) -> int:
        return self.roots[self.owner[v]]


def dijkstra(g: EmbeddedDigraph, sources: Sequence[int]) -> DistanceTable:
    """Shortest dipaths from the nearest of several sources.

    The queue is seeded with every source. A vertex takes the smallest
    (distance, source index, parent edge id) among the edges offered by
    vertices settled before it. Sources always own themselves and auxiliary
    edges are never used."""
    sources = tuple(sources)
    if not sources:
        raise ValueError("dijkstra needs at least one source")
    if len(set(sources)) != len(sources):
        raise ValueError(f"sources must be distinct: {list(sources)}")
    for s in sources:
        if s not in g.vertices:
            raise UnknownVertex(f"unknown source vertex {s}")

    source_set = frozenset(sources)
    dist: dict[int, int] = {}
    parent_edge: dict[int, Optional[int]] = {}
    parent_vertex: dict[int, Optional[int]] = {}
    owner: dict[int, int] = {}

    heap: list[tuple[int, int, int, int, int]] = [
        (0, idx, -1, s, -1) for idx, s in enumerate(sources)
    ]
    heapq.heapify(heap)
    out_edges = g.out_edges
    while heap:
        d, own, peid, v, pv = heapq.heappop(heap)
        if v in dist:
            continue
        dist[v] = d
        owner[v] = own
        parent_edge[v] = None if peid < 0 else peid
        parent_vertex[v] = None if peid < 0 else pv
        for e in out_edges[v]:
            w = e.head
            if w in dist or w in source_set:
                continue
            heapq.heappush(heap, (d + e.cost, own, e.eid, w, v))

    return DistanceTable(
        sources=sources,
        dist=dist,
        parent_edge=parent_edge,
        parent_vertex=parent_vertex,
        owner=owner,
    )


def bfs_arborescences(g: EmbeddedDigraph, roots: Sequence[int]) -> ArborescenceSet:
    table = dijkstra(g, roots)
    trees: list[set[int]] = [set() for _ in table.sources]
    for v, eid in table.parent_edge.items():
        if eid is not None:
            trees[table.owner[v]].add(eid)
    return ArborescenceSet(
        roots=table.sources,
        trees=tuple(frozenset(t) for t in trees),
        owner=table.owner,
        table=table,
    )


def shortest_dipath(g: EmbeddedDigraph, u: int, v: int) -> list[int]:
    if v not in g.vertices:
        raise UnknownVertex(f"unknown target vertex {v}")
    return dijkstra(g, [u]).path_to(v)
