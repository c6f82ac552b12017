import collections
import networkx as nx
import os
import pytest
import sys

from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import generator  # noqa: E402
import planarGraph  # noqa: E402

from dstbase import GeneratorStyle  # noqa: E402
from dstbase import LabelCollision  # noqa: E402
from dstbase import MalformedRotation  # noqa: E402
from dstbase import NegativeCost  # noqa: E402
from dstbase import NotConnectedSubset  # noqa: E402
from dstbase import NotPlanarEmbedding  # noqa: E402
from dstbase import UnknownVertex  # noqa: E402
from planarGraph import ContractionMap  # noqa: E402
from planarGraph import Dart  # noqa: E402
from planarGraph import Edge  # noqa: E402
from planarGraph import EmbeddedDigraph  # noqa: E402
from planarGraph import HEAD  # noqa: E402
from planarGraph import Subdivision  # noqa: E402
from planarGraph import TAIL  # noqa: E402


SQUARE = {0: (0.0, 0.0), 1: (1.0, 0.0), 2: (1.0, 1.0), 3: (0.0, 1.0)}


def _square(*, diagonal: bool = False) -> EmbeddedDigraph:
    arcs = [(0, 0, 1, 1), (1, 1, 2, 2), (2, 2, 3, 3), (3, 3, 0, 4)]
    if diagonal:
        arcs.append((4, 0, 2, 5))
    return planarGraph.build_from_coordinates(SQUARE, arcs)


def _nx_multidigraph(g: EmbeddedDigraph) -> "nx.MultiDiGraph[int]":
    G: "nx.MultiDiGraph[int]" = nx.MultiDiGraph()
    G.add_nodes_from(g.vertices)
    for e in g.real_edges:
        G.add_edge(e.tail, e.head)
    return G


def _ball(g: EmbeddedDigraph, start: int, size: int) -> set[int]:
    seen = {start}
    queue = collections.deque([start])
    while queue and len(seen) < size:
        x = queue.popleft()
        for y in g.neighbors[x]:
            if y not in seen and len(seen) < size:
                seen.add(y)
                queue.append(y)
    return seen


def test_dart() -> None:
    d = Dart(3, TAIL)
    assert d.reverse == Dart(3, HEAD)
    assert d.reverse.reverse == d
    assert str(d) == "3:t"
    assert str(d.reverse) == "3:h"


def test_single_edge() -> None:
    g = planarGraph.build_from_coordinates({0: (0, 0), 1: (1, 0)}, [(0, 0, 1, 7)])
    assert planarGraph.validate_embedding(g) == 1
    assert g.out_edges[0] == (Edge(0, 0, 1, 7),)
    assert g.in_edges[1] == (Edge(0, 0, 1, 7),)
    assert g.cost([0]) == 7


def test_square_faces() -> None:
    g = _square()
    assert planarGraph.validate_embedding(g) == 2
    faces = planarGraph.trace_faces(g)
    assert sorted(len(f) for f in faces) == [4, 4]

    g = _square(diagonal=True)
    assert planarGraph.validate_embedding(g) == 3
    faces = planarGraph.trace_faces(g)
    assert sorted(len(f) for f in faces) == [3, 3, 4]


def test_isolated_vertices() -> None:
    g = EmbeddedDigraph(vertices=frozenset({0, 1}), edges={}, rotation={})
    assert planarGraph.validate_embedding(g) == 1
    assert planarGraph.weak_components(g) == [(0,), (1,)]


def test_malformed_rotation() -> None:
    edges = {0: Edge(0, 0, 1, 1)}
    with pytest.raises(MalformedRotation):
        EmbeddedDigraph(
            vertices=frozenset({0, 1}),
            edges=edges,
            rotation={0: (Dart(0, TAIL), Dart(0, TAIL)), 1: (Dart(0, HEAD),)},
        )
    with pytest.raises(MalformedRotation):
        EmbeddedDigraph(
            vertices=frozenset({0, 1}),
            edges=edges,
            rotation={0: (Dart(0, TAIL),), 1: ()},
        )
    with pytest.raises(MalformedRotation):
        EmbeddedDigraph(
            vertices=frozenset({0, 1}),
            edges=edges,
            rotation={0: (Dart(0, HEAD),), 1: (Dart(0, TAIL),)},
        )
    with pytest.raises(UnknownVertex):
        EmbeddedDigraph(
            vertices=frozenset({0}),
            edges=edges,
            rotation={0: (Dart(0, TAIL),)},
        )
    with pytest.raises(NegativeCost):
        planarGraph.build_from_coordinates({0: (0, 0), 1: (1, 0)}, [(0, 0, 1, -1)])


def test_not_planar() -> None:
    positions = {i: (float(i % 3), float(i // 3)) for i in range(6)}
    arcs = []
    for a in range(3):
        for b in range(3, 6):
            arcs.append((len(arcs), a, b, 1))
    # K3,3 has no planar rotation system, whatever the drawing.
    with pytest.raises(NotPlanarEmbedding):
        g = planarGraph.build_from_coordinates(positions, arcs)
        planarGraph.validate_embedding(g)


def test_weak_components_exclude() -> None:
    g = planarGraph.build_from_coordinates(
        {0: (0, 0), 1: (1, 0), 2: (2, 0)},
        [(0, 0, 1, 1), (1, 2, 1, 1)],
    )
    assert planarGraph.weak_components(g) == [(0, 1, 2)]
    assert planarGraph.weak_components(g, exclude=[1]) == [(0,), (2,)]


def test_induced_subgraph() -> None:
    g = _square(diagonal=True)
    g2, cmap = planarGraph.induced_subgraph(g, {0, 1, 2})
    assert sorted(g2.edges) == [0, 1, 4]
    assert planarGraph.validate_embedding(g2) == 2
    assert cmap.forward[0] == 0
    assert 2 not in cmap.forward
    assert cmap.lift([4, 1]) == [4, 1]

    g3, _ = planarGraph.induced_subgraph(g, {0, 1, 2}, drop_edge=lambda e: e.head == 2)
    assert sorted(g3.edges) == [0]

    g4, _ = planarGraph.delete_vertices(g, [2])
    assert sorted(g4.vertices) == [0, 1, 3]
    assert sorted(g4.edges) == [0, 3]

    g5, cmap5 = planarGraph.delete_edges(g, [4])
    assert sorted(g5.edges) == [0, 1, 2, 3]
    assert planarGraph.validate_embedding(g5) == 2
    assert 4 not in cmap5.forward

    with pytest.raises(UnknownVertex):
        planarGraph.delete_vertices(g, [9])


def test_contract() -> None:
    g = _square(diagonal=True)
    g2, cmap = planarGraph.contract_connected(g, {0, 1}, 0)
    assert sorted(g2.vertices) == [0, 2, 3]
    assert sorted(g2.edges) == [1, 2, 3, 4]
    assert g2.edges[1] == Edge(1, 0, 2, 2)
    assert g2.edges[4] == Edge(4, 0, 2, 5)
    assert planarGraph.validate_embedding(g2) == 3
    assert 0 not in cmap.forward
    assert cmap.backward[3] == 3

    # Contracting into a fresh label is fine too.
    g3, _ = planarGraph.contract_connected(g, {0, 1}, 10)
    assert 10 in g3.vertices
    assert planarGraph.validate_embedding(g3) == 3

    with pytest.raises(LabelCollision):
        planarGraph.contract_connected(g, {0, 1}, 2)
    with pytest.raises(NotConnectedSubset):
        planarGraph.contract_connected(_square(), {1, 3}, 1)
    with pytest.raises(NotConnectedSubset):
        planarGraph.contract_connected(g, set(), 0)


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=10_000),
    size=st.integers(min_value=1, max_value=8),
    diagonals=st.booleans(),
)
def test_contract_matches_networkx(seed: int, size: int, diagonals: bool) -> None:
    style = (
        GeneratorStyle.GRID_DIAGONALS
        if diagonals
        else GeneratorStyle.GRID
    )
    g = generator.generate(seed, 20, 2, 1, style=style).graph
    t = _ball(g, seed % 20, size)
    label = min(t)

    g2, cmap = planarGraph.contract_connected(g, t, label)
    planarGraph.validate_embedding(g2)

    G = _nx_multidigraph(g)
    for v in sorted(t - {label}):
        G = nx.contracted_nodes(G, label, v, self_loops=False)
    assert sorted(G.edges()) == sorted((e.tail, e.head) for e in g2.real_edges)

    internal = [e.eid for e in g.real_edges if e.tail in t and e.head in t]
    assert g2.num_edges == g.num_edges - len(internal)
    for eid in g2.edges:
        assert cmap.backward[eid] == eid
    for eid in internal:
        assert eid not in cmap.forward


def test_contraction_map_compose() -> None:
    a = ContractionMap.identity([1, 2, 3])
    b = ContractionMap(forward={1: 1, 3: 3}, backward={1: 1, 3: 3})
    c = ContractionMap(forward={3: 3}, backward={3: 3, 7: 3})
    ab = a.compose(b)
    assert 2 not in ab.forward
    abc = ab.compose(c)
    assert abc.backward == {3: 3, 7: 3}
    assert abc.forward[3] == 3
    assert 1 not in abc.forward


def test_triangulate() -> None:
    g = _square()
    tri, aux = planarGraph.triangulate_faces(g)
    assert len(aux) == 2
    assert all(len(f) == 3 for f in planarGraph.trace_faces(tri))
    for eid in aux:
        assert tri.edges[eid].aux
        assert tri.cost([eid]) == 0
    # Auxiliary edges are invisible to the directed structure.
    assert tri.out_edges == g.out_edges

    # A path has a single face that visits the middle vertex twice.
    path = planarGraph.build_from_coordinates(
        {0: (0, 0), 1: (1, 0), 2: (2, 0)},
        [(0, 0, 1, 1), (1, 1, 2, 1)],
    )
    tri, aux = planarGraph.triangulate_faces(path)
    assert all(len(f) == 3 for f in planarGraph.trace_faces(tri))
    assert planarGraph.validate_embedding(tri) == len(planarGraph.trace_faces(tri))


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_triangulate_generated(seed: int) -> None:
    g = generator.generate(seed, 30, 3, 2).graph
    tri, aux = planarGraph.triangulate_faces(g)
    assert all(len(f) == 3 for f in planarGraph.trace_faces(tri))
    assert tri.num_edges == g.num_edges + len(aux)


def test_add_auxiliary_edge() -> None:
    g = planarGraph.build_from_coordinates({0: (0, 0), 1: (1, 0)}, [(0, 0, 1, 1)])
    g = EmbeddedDigraph(
        vertices=g.vertices | {2},
        edges=g.edges,
        rotation={**g.rotation, 2: ()},
    )
    g2, eid = planarGraph.add_auxiliary_edge(g, 1, 2, Dart(0, HEAD), None)
    assert g2.edges[eid].aux
    assert planarGraph.weak_components(g2) == [(0, 1, 2)]
    assert g2.out_edges[1] == ()
    with pytest.raises(MalformedRotation):
        planarGraph.add_auxiliary_edge(g, 0, 1, None, Dart(0, HEAD))


def test_auxiliary_chord_splits_face() -> None:
    g = _square()
    assert planarGraph.validate_embedding(g) == 2

    g2, eid = planarGraph.add_auxiliary_edge(g, 0, 2, Dart(0, TAIL), Dart(2, TAIL))
    assert eid == 4
    assert g2.edges[eid] == Edge(4, 0, 2, 0, aux=True)
    assert planarGraph.validate_embedding(g2) == 3
    assert sorted(len(f) for f in planarGraph.trace_faces(g2)) == [3, 3, 4]
    assert g2.rotation == _square(diagonal=True).rotation


def test_auxiliary_chord_across_faces() -> None:
    g = _square()
    # The two chord ends sit in different faces.
    with pytest.raises(NotPlanarEmbedding):
        planarGraph.add_auxiliary_edge(g, 0, 2, Dart(0, TAIL), Dart(1, HEAD))
    with pytest.raises(MalformedRotation):
        planarGraph.add_auxiliary_edge(g, 0, 2, Dart(0, TAIL), Dart(3, TAIL))


def test_subdivide() -> None:
    g = _square(diagonal=True)
    g2, cmap = planarGraph.subdivide_edges(
        g, [Subdivision(eid=4, vertex=10, new_eid=10, second_cost=7)]
    )
    assert planarGraph.validate_embedding(g2) == 3
    assert g2.edges[4] == Edge(4, 0, 10, 5)
    assert g2.edges[10] == Edge(10, 10, 2, 7)
    assert cmap.backward[10] == 4
    assert cmap.backward[4] == 4
    with pytest.raises(LabelCollision):
        planarGraph.subdivide_edges(
            g, [Subdivision(eid=4, vertex=2, new_eid=10, second_cost=7)]
        )


def test_fingerprint() -> None:
    assert _square().fingerprint == _square().fingerprint
    assert _square().fingerprint != _square(diagonal=True).fingerprint
