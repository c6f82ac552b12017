import os
import pytest
import sys

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import generator  # noqa: E402
import planarGraph  # noqa: E402
import shortestPaths  # noqa: E402

from dstbase import GeneratorStyle  # noqa: E402
from dstbase import InvalidParams  # noqa: E402
from generator import GridLayout  # noqa: E402


def test_parse_cost_range() -> None:
    assert generator.parse_cost_range("1-20") == (1, 20)
    assert generator.parse_cost_range(" 3-3 ") == (3, 3)
    assert generator.parse_cost_range("7") == (7, 7)
    assert generator.parse_cost_range("0-1") == (0, 1)
    for bad in ("", "a-b", "5-1", "1-", "-3"):
        with pytest.raises(InvalidParams):
            generator.parse_cost_range(bad)


def test_grid_layout() -> None:
    layout = GridLayout(n=7, cols=3)
    assert layout.rows == 3
    assert layout.position(4) == (1, 1)
    assert layout.vertex_at(0, 2) == 6
    assert layout.vertex_at(1, 2) is None
    assert layout.vertex_at(3, 0) is None
    assert len(layout.grid_edges()) == 8
    assert layout.cells() == [(0, 1, 3, 4), (1, 2, 4, 5)]


def test_deterministic() -> None:
    a = generator.generate(42, 50, 5, 2, style=GeneratorStyle.GRID_DIAGONALS)
    b = generator.generate(42, 50, 5, 2, style=GeneratorStyle.GRID_DIAGONALS)
    assert a.emit() == b.emit()
    assert a.name == "grid-diagonals-n50-k5-r2-s42"
    assert a.seed == 42
    c = generator.generate(43, 50, 5, 2, style=GeneratorStyle.GRID_DIAGONALS)
    assert a.emit() != c.emit()


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("n", [1, 2, 10, 37, 64])
@pytest.mark.parametrize("style", [GeneratorStyle.GRID, GeneratorStyle.GRID_DIAGONALS])
def test_generated_instances(seed: int, n: int, style: GeneratorStyle) -> None:
    k = min(4, n - 1)
    num_roots = 1 if n < 10 else 2
    inst_file = generator.generate(seed, n, k, num_roots, (2, 9), style)
    g = inst_file.graph

    assert g.num_vertices == n
    assert len(inst_file.roots) == num_roots
    assert len(inst_file.terminals) == k
    assert not inst_file.terminals.intersection(inst_file.roots)
    assert inst_file.positions is not None
    planarGraph.validate_embedding(g)
    for e in g.real_edges:
        assert 2 <= e.cost <= 9

    table = shortestPaths.dijkstra(g, inst_file.roots)
    assert len(table.dist) == n


def test_no_terminals() -> None:
    inst_file = generator.generate(3, 9, 0)
    assert inst_file.terminals == frozenset()
    assert inst_file.name == "grid-n9-k0-r1-s3"


def test_invalid_params() -> None:
    with pytest.raises(InvalidParams):
        generator.generate(0, 4, 4, 1)
    with pytest.raises(InvalidParams):
        generator.generate(0, 10, 2, 0)
    with pytest.raises(InvalidParams):
        generator.generate(0, 10, -1, 1)
    with pytest.raises(InvalidParams):
        generator.generate(0, 10, 2, 1, (5, 2))
