import os
import sys

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import instanceFile  # noqa: E402
import svgDraw  # noqa: E402


TWO_WAY = """dstkit-instance 1
name two-way
vertex 0 root
vertex 1 terminal
edge 0 0 1 3
edge 1 1 0 4
rotation 0 0:t 1:h
rotation 1 0:h 1:t
"""


def test_circular_layout() -> None:
    layout = svgDraw.circular_layout([3, 1, 2])
    assert list(layout) == [1, 2, 3]
    assert layout[1] == (1.0, 0.0)
    assert svgDraw.circular_layout([]) == {}


def test_template_args() -> None:
    inst_file = instanceFile.parse_instance(TWO_WAY)
    assert inst_file.positions is None

    args = svgDraw.template_args(inst_file, [1], labels=False)
    assert args["title"] == "two-way"
    assert not args["labels"]
    assert [v["role"] for v in args["vertices"]] == ["root", "terminal"]

    e0, e1 = args["edges"]
    assert not e0["highlighted"]
    assert e1["highlighted"]
    # Antiparallel arcs are drawn apart.
    assert (e0["x1"], e0["y1"]) != (e1["x2"], e1["y2"])

    for v in args["vertices"]:
        assert 0 <= v["x"] <= args["width"]
        assert 0 <= v["y"] <= args["height"]


def test_render_svg() -> None:
    inst_file = instanceFile.parse_instance(TWO_WAY)
    svg = svgDraw.render_svg(inst_file, [0])
    assert svg.startswith("<svg")
    assert "<title>two-way</title>" in svg
    assert svg.count('class="solution"') == 1
    assert "edge 1: 1 -&gt; 0, cost 4" in svg
