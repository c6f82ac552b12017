import collections
import functools
import hashlib
import math
import typing

from collections.abc import Iterable
from collections.abc import Mapping
from dataclasses import dataclass
from typing import NamedTuple
from typing import Optional

from ktoolbox import common

import dstbase

from dstbase import LabelCollision
from dstbase import MalformedRotation
from dstbase import NegativeCost
from dstbase import NotConnectedSubset
from dstbase import NotPlanarEmbedding
from dstbase import UnknownVertex


logger = common.ExtendedLogger("dstkit." + __name__)


TAIL = 0
HEAD = 1

COST_MAX = 2**63 - 1


class Dart(NamedTuple):
    edge: int
    side: int

    @property
    def reverse(self) -> "Dart":
        return Dart(self.edge, 1 - self.side)

    def __str__(self) -> str:
        return f"{self.edge}:{'t' if self.side == TAIL else 'h'}"


@dataclass(frozen=True, slots=True)
class Edge:
    eid: int
    tail: int
    head: int
    cost: int
    aux: bool = False

    def endpoint(self, side: int) -> int:
        return self.tail if side == TAIL else self.head

    def other(self, v: int) -> int:
        return self.head if v == self.tail else self.tail


@dataclass(frozen=True)
class ContractionMap:
    """Edge lineage between a parent graph and a graph derived from it.

    forward only lists parent edges that survive; a missing key means the
    edge was deleted or absorbed. Edge ids survive derivation unchanged
    unless an operation creates new edges, so most maps are partial
    identities."""

    forward: Mapping[int, int]
    backward: Mapping[int, int]

    @staticmethod
    def identity(eids: Iterable[int]) -> "ContractionMap":
        d = {e: e for e in eids}
        return ContractionMap(forward=d, backward=d)

    def compose(self, child: "ContractionMap") -> "ContractionMap":
        # self: A -> B, child: B -> C; result: A -> C
        backward = {c: self.backward[b] for c, b in child.backward.items()}
        forward = {a: c for c, a in sorted(backward.items(), reverse=True)}
        return ContractionMap(forward=forward, backward=backward)

    def lift(self, eids: Iterable[int]) -> list[int]:
        return [self.backward[e] for e in eids]


@dataclass(frozen=True, eq=False)
class EmbeddedDigraph:
    """A directed multigraph together with a rotation system.

    The rotation of a vertex is the cyclic sequence of darts (edge ends)
    around it. Values are immutable; all operations in this module return
    new graphs."""

    vertices: frozenset[int]
    edges: Mapping[int, Edge]
    rotation: Mapping[int, tuple[Dart, ...]]

    def __post_init__(self) -> None:
        rotation = {v: tuple(self.rotation.get(v, ())) for v in self.vertices}
        for v in self.rotation:
            if v not in self.vertices:
                raise UnknownVertex(f"rotation given for unknown vertex {v}")
        for eid, e in self.edges.items():
            if eid != e.eid:
                raise MalformedRotation(f"edge keyed as {eid} has id {e.eid}")
            if e.tail not in self.vertices or e.head not in self.vertices:
                raise UnknownVertex(
                    f"edge {eid} ({e.tail}->{e.head}) has an unknown endpoint"
                )
            if e.tail == e.head:
                raise MalformedRotation(f"edge {eid} is a self-loop at {e.tail}")
            if not isinstance(e.cost, int) or e.cost < 0:
                raise NegativeCost(f"edge {eid} has invalid cost {repr(e.cost)}")
            if e.cost > COST_MAX:
                raise ValueError(f"edge {eid} cost {e.cost} exceeds 64 bits")
        seen: set[Dart] = set()
        for v, darts in rotation.items():
            for d in darts:
                e2 = self.edges.get(d.edge)
                if e2 is None:
                    raise MalformedRotation(
                        f"rotation of {v} references unknown edge {d.edge}"
                    )
                if d.side not in (TAIL, HEAD) or e2.endpoint(d.side) != v:
                    raise MalformedRotation(f"dart {d} is not incident to {v}")
                if d in seen:
                    raise MalformedRotation(f"dart {d} appears twice")
                seen.add(d)
        if len(seen) != 2 * len(self.edges):
            missing = [
                str(Dart(eid, side))
                for eid in sorted(self.edges)
                for side in (TAIL, HEAD)
                if Dart(eid, side) not in seen
            ]
            raise MalformedRotation(f"darts missing from rotation: {missing[:5]}")
        object.__setattr__(self, "rotation", rotation)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def dart_vertex(self, d: Dart) -> int:
        return self.edges[d.edge].endpoint(d.side)

    @functools.cached_property
    def dart_position(self) -> dict[Dart, int]:
        return {d: i for darts in self.rotation.values() for i, d in enumerate(darts)}

    def succ(self, d: Dart) -> Dart:
        darts = self.rotation[self.dart_vertex(d)]
        return darts[(self.dart_position[d] + 1) % len(darts)]

    @functools.cached_property
    def out_edges(self) -> dict[int, tuple[Edge, ...]]:
        out: dict[int, list[Edge]] = {v: [] for v in self.vertices}
        for eid in sorted(self.edges):
            e = self.edges[eid]
            if not e.aux:
                out[e.tail].append(e)
        return {v: tuple(lst) for v, lst in out.items()}

    @functools.cached_property
    def in_edges(self) -> dict[int, tuple[Edge, ...]]:
        inc: dict[int, list[Edge]] = {v: [] for v in self.vertices}
        for eid in sorted(self.edges):
            e = self.edges[eid]
            if not e.aux:
                inc[e.head].append(e)
        return {v: tuple(lst) for v, lst in inc.items()}

    @functools.cached_property
    def neighbors(self) -> dict[int, tuple[int, ...]]:
        return {
            v: tuple(self.edges[d.edge].other(v) for d in darts)
            for v, darts in self.rotation.items()
        }

    @property
    def real_edges(self) -> list[Edge]:
        return [self.edges[eid] for eid in sorted(self.edges) if not self.edges[eid].aux]

    def cost(self, eids: Iterable[int]) -> int:
        total = 0
        for eid in eids:
            e = self.edges[eid]
            if not e.aux:
                total += e.cost
        return total

    def next_vertex_id(self) -> int:
        return max(self.vertices) + 1 if self.vertices else 0

    def next_edge_id(self) -> int:
        return max(self.edges) + 1 if self.edges else 0

    @functools.cached_property
    def fingerprint(self) -> str:
        data = (
            tuple(
                (e.eid, e.tail, e.head, e.cost, e.aux)
                for e in (self.edges[eid] for eid in sorted(self.edges))
            ),
            tuple((v, self.rotation[v]) for v in sorted(self.vertices)),
        )
        return hashlib.blake2b(repr(data).encode(), digest_size=16).hexdigest()


def _maybe_check(g: EmbeddedDigraph) -> EmbeddedDigraph:
    if dstbase.get_dstkit_check_embedding():
        validate_embedding(g)
    return g


def trace_faces(g: EmbeddedDigraph) -> list[tuple[Dart, ...]]:
    """Faces as dart walks. The dart following d on its face is the
    rotation successor of the reverse of d."""
    done: set[Dart] = set()
    faces: list[tuple[Dart, ...]] = []
    for v in sorted(g.vertices):
        for d in g.rotation[v]:
            if d in done:
                continue
            walk: list[Dart] = []
            x = d
            while x not in done:
                done.add(x)
                walk.append(x)
                x = g.succ(x.reverse)
            faces.append(tuple(walk))
    return faces


def weak_components(
    g: EmbeddedDigraph,
    *,
    exclude: Optional[Iterable[int]] = None,
) -> list[tuple[int, ...]]:
    excluded = frozenset(exclude) if exclude is not None else frozenset()
    seen: set[int] = set(excluded)
    components: list[tuple[int, ...]] = []
    neighbors = g.neighbors
    for v in sorted(g.vertices):
        if v in seen:
            continue
        seen.add(v)
        comp = [v]
        queue = collections.deque([v])
        while queue:
            x = queue.popleft()
            for y in neighbors[x]:
                if y not in seen:
                    seen.add(y)
                    comp.append(y)
                    queue.append(y)
        components.append(tuple(sorted(comp)))
    return components


def validate_embedding(g: EmbeddedDigraph) -> int:
    faces = trace_faces(g)
    num_components = len(weak_components(g))
    isolated = sum(1 for v in g.vertices if not g.rotation[v])
    # Each component, counted with its own outer face, has Euler characteristic 2.
    orbits = len(faces) + isolated
    if g.num_vertices - g.num_edges + orbits != 2 * num_components:
        raise NotPlanarEmbedding(
            f"rotation system is not planar: V={g.num_vertices} E={g.num_edges} F={orbits - num_components + 1} C={num_components}"
        )
    return orbits - num_components + 1


def induced_subgraph(
    g: EmbeddedDigraph,
    keep: Iterable[int],
    *,
    drop_edge: Optional[typing.Callable[[Edge], bool]] = None,
) -> tuple[EmbeddedDigraph, ContractionMap]:
    keep = frozenset(keep)
    unknown = keep - g.vertices
    if unknown:
        raise UnknownVertex(f"unknown vertices {sorted(unknown)[:5]}")
    edges: dict[int, Edge] = {}
    for eid, e in g.edges.items():
        if e.tail in keep and e.head in keep:
            if drop_edge is None or not drop_edge(e):
                edges[eid] = e
    rotation = {
        v: tuple(d for d in g.rotation[v] if d.edge in edges) for v in keep
    }
    g2 = EmbeddedDigraph(vertices=keep, edges=edges, rotation=rotation)
    return _maybe_check(g2), ContractionMap.identity(edges)


def delete_vertices(
    g: EmbeddedDigraph,
    s: Iterable[int],
) -> tuple[EmbeddedDigraph, ContractionMap]:
    s = frozenset(s)
    unknown = s - g.vertices
    if unknown:
        raise UnknownVertex(f"cannot delete unknown vertices {sorted(unknown)[:5]}")
    return induced_subgraph(g, g.vertices - s)


def delete_edges(
    g: EmbeddedDigraph,
    eids: Iterable[int],
) -> tuple[EmbeddedDigraph, ContractionMap]:
    eids = frozenset(eids)
    unknown = eids - frozenset(g.edges)
    if unknown:
        raise ValueError(f"cannot delete unknown edges {sorted(unknown)[:5]}")
    return induced_subgraph(g, g.vertices, drop_edge=lambda e: e.eid in eids)


def _spanning_tree_of(g: EmbeddedDigraph, t: frozenset[int]) -> set[int]:
    start = min(t)
    tree: set[int] = set()
    seen = {start}
    queue = collections.deque([start])
    while queue:
        x = queue.popleft()
        for d in g.rotation[x]:
            e = g.edges[d.edge]
            y = e.other(x)
            if y in t and y not in seen:
                seen.add(y)
                tree.add(e.eid)
                queue.append(y)
    if len(seen) != len(t):
        raise NotConnectedSubset(
            f"vertex set of size {len(t)} is not weakly connected ({len(seen)} reachable from {start})"
        )
    return tree


def contract_connected(
    g: EmbeddedDigraph,
    t: Iterable[int],
    label: int,
) -> tuple[EmbeddedDigraph, ContractionMap]:
    """Contract the weakly connected vertex set t into the single vertex label.

    The merged rotation is what repeated single-edge splicing along a
    spanning tree of t yields: the non-tree darts met while walking around
    that tree."""
    t = frozenset(t)
    if not t:
        raise NotConnectedSubset("cannot contract an empty vertex set")
    unknown = t - g.vertices
    if unknown:
        raise UnknownVertex(f"cannot contract unknown vertices {sorted(unknown)[:5]}")
    if label in g.vertices and label not in t:
        raise LabelCollision(f"label {label} is already used outside the contracted set")

    tree = _spanning_tree_of(g, t)

    internal = {
        eid for eid, e in g.edges.items() if e.tail in t and e.head in t
    }

    merged: list[Dart] = []
    start_v = min(t)
    if g.rotation[start_v]:
        pos = g.dart_position
        v, i = start_v, 0
        while True:
            darts = g.rotation[v]
            d = darts[i]
            if d.edge in tree:
                rd = d.reverse
                v = g.dart_vertex(rd)
                i = (pos[rd] + 1) % len(g.rotation[v])
            else:
                if d.edge not in internal:
                    merged.append(d)
                i = (i + 1) % len(darts)
            if v == start_v and i == 0:
                break

    edges: dict[int, Edge] = {}
    for eid, e in g.edges.items():
        if eid in internal:
            continue
        tail = label if e.tail in t else e.tail
        head = label if e.head in t else e.head
        if tail != e.tail or head != e.head:
            e = Edge(eid, tail, head, e.cost, e.aux)
        edges[eid] = e

    vertices = (g.vertices - t) | {label}
    rotation = {v: g.rotation[v] for v in g.vertices - t}
    rotation[label] = tuple(merged)

    g2 = EmbeddedDigraph(vertices=vertices, edges=edges, rotation=rotation)
    return _maybe_check(g2), ContractionMap.identity(edges)


def _insert_after(
    darts: list[Dart], after: Optional[Dart], new: Dart, *, vertex: int
) -> None:
    if after is None:
        if darts:
            raise MalformedRotation(
                f"an insertion position is required at vertex {vertex} with non-empty rotation"
            )
        darts.append(new)
        return
    try:
        idx = darts.index(after)
    except ValueError:
        raise MalformedRotation(f"dart {after} is not in the rotation of {vertex}")
    darts.insert(idx + 1, new)


def add_auxiliary_edge(
    g: EmbeddedDigraph,
    u: int,
    v: int,
    after_u: Optional[Dart],
    after_v: Optional[Dart],
) -> tuple[EmbeddedDigraph, int]:
    """Insert a cost-0 auxiliary edge u-v, its ends placed right after the
    given darts in the rotations of u and v."""
    for x in (u, v):
        if x not in g.vertices:
            raise UnknownVertex(f"unknown vertex {x}")
    if u == v:
        raise MalformedRotation(f"auxiliary edge would be a self-loop at {u}")

    eid = g.next_edge_id()
    edges = dict(g.edges)
    edges[eid] = Edge(eid, u, v, 0, aux=True)
    rotation = dict(g.rotation)
    rot_u = list(rotation[u])
    _insert_after(rot_u, after_u, Dart(eid, TAIL), vertex=u)
    rot_v = list(rotation[v])
    _insert_after(rot_v, after_v, Dart(eid, HEAD), vertex=v)
    rotation[u] = tuple(rot_u)
    rotation[v] = tuple(rot_v)

    g2 = EmbeddedDigraph(vertices=g.vertices, edges=edges, rotation=rotation)
    validate_embedding(g2)
    return g2, eid


def triangulate_faces(
    g: EmbeddedDigraph,
    faces: Optional[Iterable[tuple[Dart, ...]]] = None,
) -> tuple[EmbeddedDigraph, list[int]]:
    """Cut ears off every face walk longer than 3 with auxiliary chords.

    Walk positions, not vertex sets, are triangulated, so faces visiting a
    vertex twice are handled and chords may be parallel to existing edges.
    """
    if faces is None:
        faces = trace_faces(g)

    nxt: dict[Dart, Dart] = {}
    prv: dict[Dart, Dart] = {}
    first: dict[int, Dart] = {}
    for v, darts in g.rotation.items():
        if darts:
            first[v] = darts[0]
        for i, d in enumerate(darts):
            d2 = darts[(i + 1) % len(darts)]
            nxt[d] = d2
            prv[d2] = d

    def _link_after(x: Dart, new: Dart) -> None:
        y = nxt[x]
        nxt[x] = new
        prv[new] = x
        nxt[new] = y
        prv[y] = new

    edges = dict(g.edges)
    next_eid = g.next_edge_id()
    aux: list[int] = []

    for face in faces:
        walk = collections.deque(face)
        ws = collections.deque(edges[d.edge].endpoint(d.side) for d in face)
        stall = 0
        while len(walk) > 3:
            if ws[0] == ws[2]:
                walk.rotate(-1)
                ws.rotate(-1)
                stall += 1
                if stall > len(walk):
                    raise NotPlanarEmbedding(
                        f"face walk {[str(d) for d in face][:8]} cannot be triangulated"
                    )
                continue
            stall = 0
            d_prev = walk[0]
            d_cur = walk[1]
            a = ws[0]
            b = ws[2]
            eid = next_eid
            next_eid += 1
            edges[eid] = Edge(eid, a, b, 0, aux=True)
            aux.append(eid)
            ca = Dart(eid, TAIL)
            cb = Dart(eid, HEAD)
            # ca goes right before d_prev at a, cb right after reverse(d_cur) at b
            _link_after(prv[d_prev], ca)
            _link_after(d_cur.reverse, cb)
            walk.popleft()
            walk.popleft()
            walk.appendleft(ca)
            ws.popleft()
            ws.popleft()
            ws.appendleft(a)

    rotation: dict[int, tuple[Dart, ...]] = {}
    for v in g.vertices:
        d0 = first.get(v)
        if d0 is None:
            rotation[v] = ()
            continue
        lst = [d0]
        x = nxt[d0]
        while x != d0:
            lst.append(x)
            x = nxt[x]
        rotation[v] = tuple(lst)

    g2 = EmbeddedDigraph(vertices=g.vertices, edges=edges, rotation=rotation)
    validate_embedding(g2)
    return g2, aux


@dataclass(frozen=True)
class Subdivision:
    eid: int
    vertex: int
    new_eid: int
    second_cost: int


def subdivide_edges(
    g: EmbeddedDigraph,
    subdivisions: Iterable[Subdivision],
) -> tuple[EmbeddedDigraph, ContractionMap]:
    """Split each edge (x, y) into (x, s) keeping its id and cost, and a new
    edge (s, y) with the given cost. The new vertex s sits on the old edge,
    so the embedding stays planar."""
    edges = dict(g.edges)
    rotation = {v: list(darts) for v, darts in g.rotation.items()}
    vertices = set(g.vertices)
    backward = {eid: eid for eid in g.edges}
    for sub in subdivisions:
        e = edges.get(sub.eid)
        if e is None:
            raise ValueError(f"cannot subdivide unknown edge {sub.eid}")
        if sub.vertex in vertices:
            raise LabelCollision(f"subdivision vertex {sub.vertex} already exists")
        if sub.new_eid in edges:
            raise ValueError(f"subdivision edge id {sub.new_eid} already exists")
        if sub.second_cost < 0:
            raise NegativeCost(f"subdivision cost {sub.second_cost} is negative")
        vertices.add(sub.vertex)
        edges[e.eid] = Edge(e.eid, e.tail, sub.vertex, e.cost, e.aux)
        edges[sub.new_eid] = Edge(sub.new_eid, sub.vertex, e.head, sub.second_cost, e.aux)
        rot_head = rotation[e.head]
        rot_head[rot_head.index(Dart(e.eid, HEAD))] = Dart(sub.new_eid, HEAD)
        rotation[sub.vertex] = [Dart(e.eid, HEAD), Dart(sub.new_eid, TAIL)]
        backward[sub.new_eid] = sub.eid
    g2 = EmbeddedDigraph(
        vertices=frozenset(vertices),
        edges=edges,
        rotation={v: tuple(darts) for v, darts in rotation.items()},
    )
    forward = {eid: eid for eid in g.edges}
    return _maybe_check(g2), ContractionMap(forward=forward, backward=backward)


def build_from_coordinates(
    positions: Mapping[int, tuple[float, float]],
    arcs: Iterable[tuple[int, int, int, int]],
) -> EmbeddedDigraph:
    """Build a graph from (eid, tail, head, cost) arcs drawn as straight
    segments; each rotation lists darts counterclockwise.

    Parallel edges share an angle; they are ordered by id at the smaller
    endpoint and mirrored at the larger one."""
    edges: dict[int, Edge] = {}
    ends: dict[int, list[tuple[float, int, Dart]]] = {v: [] for v in positions}
    for eid, tail, head, cost in arcs:
        if eid in edges:
            raise MalformedRotation(f"duplicate edge id {eid}")
        for x in (tail, head):
            if x not in positions:
                raise UnknownVertex(f"edge {eid} has unknown endpoint {x}")
        edges[eid] = Edge(eid, tail, head, cost)
        for x, y, side in ((tail, head, TAIL), (head, tail, HEAD)):
            (x0, y0) = positions[x]
            (x1, y1) = positions[y]
            angle = math.atan2(y1 - y0, x1 - x0)
            ends[x].append((angle, eid if x < y else -eid, Dart(eid, side)))
    rotation = {
        v: tuple(d for _, _, d in sorted(lst)) for v, lst in ends.items()
    }
    g = EmbeddedDigraph(vertices=frozenset(positions), edges=edges, rotation=rotation)
    return _maybe_check(g)
