import collections

from collections.abc import Iterable
from collections.abc import Mapping
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field
from typing import Optional

from ktoolbox import common

import planarGraph
import shortestPaths

from dstbase import NotConnected
from dstbase import NotSpanningTree
from dstbase import UnknownVertex
from dstbase import UnreachableVertex
from planarGraph import Dart
from planarGraph import EmbeddedDigraph
from planarGraph import HEAD
from planarGraph import TAIL


logger = common.ExtendedLogger("dstkit." + __name__)


@dataclass(frozen=True)
class WeightAssignment:
    weights: Mapping[int, int]

    def __post_init__(self) -> None:
        for v, wt in self.weights.items():
            if wt < 0:
                raise ValueError(f"weight of vertex {v} is negative ({wt})")

    @staticmethod
    def for_terminals(terminals: Iterable[int]) -> "WeightAssignment":
        return WeightAssignment(weights={t: 1 for t in terminals})

    def weight(self, v: int) -> int:
        return self.weights.get(v, 0)

    def weight_of(self, vertices: Iterable[int]) -> int:
        return sum(self.weights.get(v, 0) for v in vertices)


@dataclass(frozen=True)
class TreePath:
    target: int
    vertices: tuple[int, ...]
    edges: tuple[int, ...]


@dataclass(frozen=True)
class ThreePathSeparator:
    root: int
    paths: tuple[TreePath, ...]
    vertices: frozenset[int]
    centroid_face: Optional[int] = None

    @property
    def targets(self) -> tuple[int, ...]:
        return tuple(p.target for p in self.paths)


@dataclass(frozen=True)
class PurchasedPath:
    root: int
    target: int
    edges: tuple[int, ...]


@dataclass(frozen=True)
class SeparatorResult:
    """A purchased (multi-rooted) partial arborescence T and what remains.

    tree_edges is all of T; connector_edges (F) are the edges of T between
    different arborescences, which are not bought. label is the root T is
    contracted into, None when T is empty."""

    targets: tuple[int, ...]
    vertices: frozenset[int]
    tree_edges: frozenset[int]
    connector_edges: frozenset[int]
    subtrees: Mapping[int, frozenset[int]]
    marked: Mapping[int, tuple[int, ...]]
    purchased_paths: tuple[PurchasedPath, ...]
    components: tuple[tuple[int, ...], ...]
    label: Optional[int]
    weight_total: int = field(default=0)

    @property
    def purchased_edges(self) -> frozenset[int]:
        return self.tree_edges - self.connector_edges


def _tree_parents(
    g: EmbeddedDigraph,
    tree: frozenset[int],
    root: int,
) -> dict[int, tuple[Optional[int], Optional[int]]]:
    adj: dict[int, list[tuple[int, int]]] = collections.defaultdict(list)
    for eid in tree:
        e = g.edges.get(eid)
        if e is None or e.aux:
            raise NotSpanningTree(f"tree edge {eid} is not a real edge of the graph")
        adj[e.tail].append((eid, e.head))
        adj[e.head].append((eid, e.tail))
    parents: dict[int, tuple[Optional[int], Optional[int]]] = {root: (None, None)}
    queue = collections.deque([root])
    while queue:
        x = queue.popleft()
        for eid, y in adj[x]:
            if y not in parents:
                parents[y] = (eid, x)
                queue.append(y)
    if len(tree) != g.num_vertices - 1 or len(parents) != g.num_vertices:
        raise NotSpanningTree(
            f"{len(tree)} edges reaching {len(parents)} of {g.num_vertices} vertices do not form a spanning tree"
        )
    return parents


def _tree_path(
    parents: Mapping[int, tuple[Optional[int], Optional[int]]],
    target: int,
) -> TreePath:
    vertices = [target]
    edges: list[int] = []
    x = target
    while True:
        eid, px = parents[x]
        if eid is None or px is None:
            break
        edges.append(eid)
        vertices.append(px)
        x = px
    vertices.reverse()
    edges.reverse()
    return TreePath(target=target, vertices=tuple(vertices), edges=tuple(edges))


def _centroid_face(
    tri: EmbeddedDigraph,
    faces: Sequence[tuple[Dart, ...]],
    tree: frozenset[int],
    w: WeightAssignment,
    total: int,
) -> int:
    face_of: dict[Dart, int] = {}
    for fid, walk in enumerate(faces):
        for d in walk:
            face_of[d] = fid

    adj: list[list[int]] = [[] for _ in faces]
    num_dual_edges = 0
    for eid in tri.edges:
        if eid in tree:
            continue
        f0 = face_of[Dart(eid, TAIL)]
        f1 = face_of[Dart(eid, HEAD)]
        if f0 == f1:
            raise NotSpanningTree(f"non-tree edge {eid} has the same face on both sides")
        adj[f0].append(f1)
        adj[f1].append(f0)
        num_dual_edges += 1

    # Each vertex counts once, at the first face of the walk order touching it.
    face_weight = [0] * len(faces)
    assigned: set[int] = set()
    for fid, walk in enumerate(faces):
        for d in walk:
            v = tri.dart_vertex(d)
            if v not in assigned:
                assigned.add(v)
                face_weight[fid] += w.weight(v)

    parent = [-1] * len(faces)
    order = [0]
    seen = [False] * len(faces)
    seen[0] = True
    for f in order:
        for f2 in adj[f]:
            if not seen[f2]:
                seen[f2] = True
                parent[f2] = f
                order.append(f2)
    if len(order) != len(faces) or num_dual_edges != len(faces) - 1:
        raise NotSpanningTree("non-tree edges do not form a spanning tree of the dual")

    sub = list(face_weight)
    for f in reversed(order[1:]):
        sub[parent[f]] += sub[f]

    for f in range(len(faces)):
        heaviest = total - sub[f] if f != 0 else 0
        for f2 in adj[f]:
            if f2 != parent[f]:
                heaviest = max(heaviest, sub[f2])
        if 2 * heaviest <= total:
            return f
    raise RuntimeError("dual tree has no weighted centroid")


def three_path_separator(
    g: EmbeddedDigraph,
    spanning_tree: Iterable[int],
    root: int,
    w: WeightAssignment,
) -> ThreePathSeparator:
    """At most three tree paths from root whose vertices separate g into
    weak components of weight at most half the total each."""
    if root not in g.vertices:
        raise UnknownVertex(f"unknown root {root}")
    if len(planarGraph.weak_components(g)) > 1:
        raise NotConnected("three-path separator needs a weakly connected graph")

    tree = frozenset(spanning_tree)
    parents = _tree_parents(g, tree, root)

    total = w.weight_of(g.vertices)
    if total == 0 or g.num_vertices == 1:
        return ThreePathSeparator(root=root, paths=(), vertices=frozenset())

    tri, aux = planarGraph.triangulate_faces(g)
    faces = planarGraph.trace_faces(tri)
    centroid = _centroid_face(tri, faces, tree, w, total)

    corners: list[int] = []
    for d in faces[centroid]:
        v = tri.dart_vertex(d)
        if v not in corners:
            corners.append(v)

    paths = [_tree_path(parents, v) for v in corners]
    on_path = [frozenset(p.vertices) for p in paths]
    kept = [
        p
        for i, p in enumerate(paths)
        if not any(p.target in on_path[j] for j in range(len(paths)) if j != i)
    ]
    vertices = frozenset(v for p in kept for v in p.vertices)

    logger.debug(
        f"three-path separator: {len(aux)} auxiliary edges, centroid face {centroid}, targets {[p.target for p in kept]}"
    )
    return ThreePathSeparator(
        root=root,
        paths=tuple(kept),
        vertices=vertices,
        centroid_face=centroid,
    )


def _check_reachable(g: EmbeddedDigraph, table: shortestPaths.DistanceTable) -> None:
    if len(table.dist) != g.num_vertices:
        missing = sorted(v for v in g.vertices if not table.reached(v))
        raise UnreachableVertex(
            f"vertices {missing[:5]} are not reachable from {list(table.sources)}"
        )


def _empty_result(
    components: Iterable[tuple[int, ...]],
    total: int,
) -> SeparatorResult:
    return SeparatorResult(
        targets=(),
        vertices=frozenset(),
        tree_edges=frozenset(),
        connector_edges=frozenset(),
        subtrees={},
        marked={},
        purchased_paths=(),
        components=tuple(components),
        label=None,
        weight_total=total,
    )


def directed_separator(
    g: EmbeddedDigraph,
    root: int,
    w: WeightAssignment,
) -> SeparatorResult:
    arb = shortestPaths.bfs_arborescences(g, [root])
    _check_reachable(g, arb.table)

    tps = three_path_separator(g, arb.trees[0], root, w)
    total = w.weight_of(g.vertices)
    if not tps.paths:
        return _empty_result(planarGraph.weak_components(g), total)

    tree_edges = frozenset(eid for p in tps.paths for eid in p.edges)
    return SeparatorResult(
        targets=tps.targets,
        vertices=tps.vertices,
        tree_edges=tree_edges,
        connector_edges=frozenset(),
        subtrees={root: tree_edges},
        marked={root: tps.targets},
        purchased_paths=tuple(
            PurchasedPath(root=root, target=p.target, edges=p.edges) for p in tps.paths
        ),
        components=tuple(planarGraph.weak_components(g, exclude=tps.vertices)),
        label=root,
        weight_total=total,
    )


def _multirooted_connected(
    g: EmbeddedDigraph,
    roots: Sequence[int],
    w: WeightAssignment,
) -> SeparatorResult:
    arb = shortestPaths.bfs_arborescences(g, roots)
    _check_reachable(g, arb.table)
    owner = arb.owner

    uf = list(range(len(roots)))

    def _find(i: int) -> int:
        while uf[i] != i:
            uf[i] = uf[uf[i]]
            i = uf[i]
        return i

    connectors: list[int] = []
    for e in g.real_edges:
        a = _find(owner[e.tail])
        b = _find(owner[e.head])
        if a != b:
            uf[b] = a
            connectors.append(e.eid)

    spanning = frozenset(connectors).union(*arb.trees)
    tps = three_path_separator(g, spanning, roots[0], w)
    total = w.weight_of(g.vertices)
    if not tps.paths:
        return _empty_result(planarGraph.weak_components(g), total)

    marked: dict[int, list[int]] = {}
    for p in tps.paths:
        first: dict[int, int] = {}
        last: dict[int, int] = {}
        for v in p.vertices:
            i = owner[v]
            first.setdefault(i, v)
            last[i] = v
        for i in first:
            lst = marked.setdefault(i, [])
            for v in (first[i], last[i]):
                if v not in lst:
                    lst.append(v)

    connector_edges: set[int] = set()
    for p in tps.paths:
        for eid in p.edges:
            e = g.edges[eid]
            if owner[e.tail] != owner[e.head]:
                connector_edges.add(eid)

    subtrees: dict[int, frozenset[int]] = {}
    purchased: list[PurchasedPath] = []
    vertices: set[int] = set()
    for i in sorted(marked):
        r = roots[i]
        if len(marked[i]) > 4:
            raise RuntimeError(
                f"arborescence of root {r} has {len(marked[i])} marked vertices, expected at most 4"
            )
        edges_i: set[int] = set()
        vertices.add(r)
        for v in marked[i]:
            path = arb.table.path_to(v)
            purchased.append(PurchasedPath(root=r, target=v, edges=tuple(path)))
            edges_i.update(path)
            for eid in path:
                vertices.add(g.edges[eid].head)
        subtrees[r] = frozenset(edges_i)

    tree_edges = frozenset(connector_edges).union(*subtrees.values())
    label = next(roots[i] for i in range(len(roots)) if i in marked)
    return SeparatorResult(
        targets=tps.targets,
        vertices=frozenset(vertices),
        tree_edges=tree_edges,
        connector_edges=frozenset(connector_edges),
        subtrees=subtrees,
        marked={roots[i]: tuple(marked[i]) for i in sorted(marked)},
        purchased_paths=tuple(purchased),
        components=tuple(planarGraph.weak_components(g, exclude=vertices)),
        label=label,
        weight_total=total,
    )


def multirooted_separator(
    g: EmbeddedDigraph,
    roots: Sequence[int],
    w: WeightAssignment,
) -> SeparatorResult:
    """Separator made of vertex-disjoint shortest-path subtrees, one per
    root, each the union of at most four dipaths from its root.

    A graph with several weak components is separated only inside the
    component carrying more than half the weight, if there is one."""
    roots = tuple(roots)
    for r in roots:
        if r not in g.vertices:
            raise UnknownVertex(f"unknown root {r}")

    comps = planarGraph.weak_components(g)
    if len(comps) == 1:
        return _multirooted_connected(g, roots, w)

    total = w.weight_of(g.vertices)
    root_set = frozenset(roots)
    heavy: Optional[tuple[int, ...]] = None
    for comp in comps:
        if not root_set.intersection(comp):
            raise NotConnected(
                f"weak component containing {comp[0]} holds no root"
            )
        if 2 * w.weight_of(comp) > total:
            heavy = comp
    if heavy is None:
        return _empty_result(comps, total)

    sub_g, _ = planarGraph.induced_subgraph(g, heavy)
    heavy_set = frozenset(heavy)
    sub_roots = [r for r in roots if r in heavy_set]
    if len(sub_roots) == 1:
        result = directed_separator(sub_g, sub_roots[0], w)
    else:
        result = _multirooted_connected(sub_g, sub_roots, w)
    others = [c for c in comps if c is not heavy]
    components = sorted([*result.components, *others], key=lambda c: c[0])
    return SeparatorResult(
        targets=result.targets,
        vertices=result.vertices,
        tree_edges=result.tree_edges,
        connector_edges=result.connector_edges,
        subtrees=result.subtrees,
        marked=result.marked,
        purchased_paths=result.purchased_paths,
        components=tuple(components),
        label=result.label,
        weight_total=total,
    )
