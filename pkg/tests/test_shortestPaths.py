import networkx as nx
import os
import pytest
import sys

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import generator  # noqa: E402
import planarGraph  # noqa: E402
import shortestPaths  # noqa: E402

from dstbase import GeneratorStyle  # noqa: E402
from dstbase import UnknownVertex  # noqa: E402
from dstbase import Unreachable  # noqa: E402
from planarGraph import EmbeddedDigraph  # noqa: E402


def _diamond() -> EmbeddedDigraph:
    #     1
    #   /   \
    # 0       3 -> 4
    #   \   /
    #     2
    return planarGraph.build_from_coordinates(
        {0: (0, 0), 1: (1, 1), 2: (1, -1), 3: (2, 0), 4: (3, 0)},
        [
            (0, 0, 1, 2),
            (1, 0, 2, 1),
            (2, 1, 3, 1),
            (3, 2, 3, 2),
            (4, 3, 4, 5),
        ],
    )


def _nx_digraph(g: EmbeddedDigraph) -> "nx.MultiDiGraph[int]":
    G: "nx.MultiDiGraph[int]" = nx.MultiDiGraph()
    G.add_nodes_from(g.vertices)
    for e in g.real_edges:
        G.add_edge(e.tail, e.head, weight=e.cost)
    return G


def test_dijkstra_ties() -> None:
    g = _diamond()
    table = shortestPaths.dijkstra(g, [0])
    assert table.distance(3) == 3
    assert table.distance(4) == 8
    # Both dipaths to 3 cost 3; the smaller parent edge id wins.
    assert table.path_to(3) == [0, 2]
    assert table.path_to(4) == [0, 2, 4]
    assert table.path_to(0) == []
    assert g.cost(table.path_to(4)) == table.distance(4)


def test_dijkstra_owner() -> None:
    g = planarGraph.build_from_coordinates(
        {0: (0, 0), 1: (2, 0), 2: (1, 1)},
        [(0, 0, 2, 1), (1, 1, 2, 1)],
    )
    table = shortestPaths.dijkstra(g, [1, 0])
    assert table.owner[2] == 0
    assert table.path_to(2) == [1]
    assert table.owner[0] == 1

    table = shortestPaths.dijkstra(g, [0, 1])
    assert table.owner[2] == 0
    assert table.path_to(2) == [0]


def test_dijkstra_unreachable() -> None:
    g = _diamond()
    table = shortestPaths.dijkstra(g, [3])
    assert table.reached(4)
    assert not table.reached(0)
    assert table.distance(0) == shortestPaths.INFINITY
    with pytest.raises(Unreachable):
        table.path_to(1)
    with pytest.raises(Unreachable):
        shortestPaths.shortest_dipath(g, 4, 0)


def test_dijkstra_errors() -> None:
    g = _diamond()
    with pytest.raises(UnknownVertex):
        shortestPaths.dijkstra(g, [7])
    with pytest.raises(ValueError):
        shortestPaths.dijkstra(g, [])
    with pytest.raises(ValueError):
        shortestPaths.dijkstra(g, [0, 0])
    with pytest.raises(UnknownVertex):
        shortestPaths.shortest_dipath(g, 0, 7)


def test_auxiliary_edges_unused() -> None:
    g = _diamond()
    tri, aux = planarGraph.triangulate_faces(g)
    assert aux
    assert shortestPaths.dijkstra(tri, [0]).dist == shortestPaths.dijkstra(g, [0]).dist


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("num_roots", [1, 3])
def test_dijkstra_matches_networkx(seed: int, num_roots: int) -> None:
    inst_file = generator.generate(
        seed, 40, 4, num_roots, style=GeneratorStyle.GRID_DIAGONALS
    )
    g = inst_file.graph
    roots = inst_file.roots

    table = shortestPaths.dijkstra(g, roots)
    expected = nx.multi_source_dijkstra_path_length(_nx_digraph(g), set(roots))
    assert dict(table.dist) == dict(expected)

    for v in table.dist:
        path = table.path_to(v)
        assert g.cost(path) == table.distance(v)
        if path:
            assert g.edges[path[0]].tail == roots[table.owner[v]]
            assert g.edges[path[-1]].head == v


@pytest.mark.parametrize("seed", range(4))
def test_bfs_arborescences(seed: int) -> None:
    inst_file = generator.generate(seed, 30, 3, 3)
    g = inst_file.graph
    arbs = shortestPaths.bfs_arborescences(g, inst_file.roots)

    assert arbs.roots == tuple(inst_file.roots)
    for i, tree in enumerate(arbs.trees):
        owned = [v for v, o in arbs.owner.items() if o == i]
        assert len(tree) == len(owned) - 1
        for eid in tree:
            e = g.edges[eid]
            assert arbs.owner[e.tail] == i
            assert arbs.owner[e.head] == i
    # The generator guarantees every vertex is reachable from a root.
    assert sum(len(t) for t in arbs.trees) == g.num_vertices - len(inst_file.roots)
    for r in inst_file.roots:
        assert arbs.root_of(r) == r


def test_shortest_dipath() -> None:
    g = _diamond()
    assert shortestPaths.shortest_dipath(g, 0, 4) == [0, 2, 4]
    assert shortestPaths.shortest_dipath(g, 2, 4) == [3, 4]
