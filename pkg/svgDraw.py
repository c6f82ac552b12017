import collections
import math

from collections.abc import Iterable
from collections.abc import Mapping
from typing import Any

from ktoolbox import common
from ktoolbox import kjinja2

import dstbase

from instanceFile import InstanceFile


logger = common.ExtendedLogger("dstkit." + __name__)


TEMPLATE = "embedding.svg.j2"

SCALE = 48.0
MARGIN = 24.0
RADIUS = 5.0
PARALLEL_GAP = 5.0


def circular_layout(vertices: Iterable[int]) -> dict[int, tuple[float, float]]:
    vs = sorted(vertices)
    r = max(1.0, len(vs) / (2 * math.pi))
    step = 2 * math.pi / max(1, len(vs))
    return {v: (r * math.cos(i * step), r * math.sin(i * step)) for i, v in enumerate(vs)}


def _to_canvas(
    positions: Mapping[int, tuple[float, float]],
) -> tuple[dict[int, tuple[float, float]], float, float]:
    xs = [p[0] for p in positions.values()] or [0.0]
    ys = [p[1] for p in positions.values()] or [0.0]
    min_x, max_x = min(xs), max(xs)
    min_y, max_y = min(ys), max(ys)
    canvas = {
        v: (MARGIN + (x - min_x) * SCALE, MARGIN + (max_y - y) * SCALE)
        for v, (x, y) in positions.items()
    }
    width = 2 * MARGIN + (max_x - min_x) * SCALE
    height = 2 * MARGIN + (max_y - min_y) * SCALE
    return canvas, width, height


def template_args(
    inst_file: InstanceFile,
    solution_edges: Iterable[int] = (),
    *,
    labels: bool = True,
) -> dict[str, Any]:
    positions = inst_file.positions
    if positions is None:
        positions = circular_layout(v.vid for v in inst_file.vertices)
    canvas, width, height = _to_canvas(positions)
    highlighted = frozenset(solution_edges)

    # Arcs between the same two vertices are fanned out side by side.
    bundles: dict[frozenset[int], list[int]] = collections.defaultdict(list)
    for e in inst_file.edges:
        bundles[frozenset((e.tail, e.head))].append(e.eid)

    edges: list[dict[str, Any]] = []
    for e in inst_file.edges:
        (x1, y1) = canvas[e.tail]
        (x2, y2) = canvas[e.head]
        dx, dy = x2 - x1, y2 - y1
        length = math.hypot(dx, dy) or 1.0
        ux, uy = dx / length, dy / length
        bundle = bundles[frozenset((e.tail, e.head))]
        offset = (bundle.index(e.eid) - (len(bundle) - 1) / 2) * PARALLEL_GAP
        # Offsets are measured against the orientation from the smaller id.
        if e.tail > e.head:
            offset = -offset
        ox, oy = -uy * offset, ux * offset
        edges.append(
            {
                "eid": e.eid,
                "tail": e.tail,
                "head": e.head,
                "cost": e.cost,
                "highlighted": e.eid in highlighted,
                "x1": round(x1 + ux * RADIUS + ox, 2),
                "y1": round(y1 + uy * RADIUS + oy, 2),
                "x2": round(x2 - ux * RADIUS + ox, 2),
                "y2": round(y2 - uy * RADIUS + oy, 2),
            }
        )

    vertices = [
        {
            "vid": v.vid,
            "role": v.role.name.lower(),
            "cost": v.cost,
            "x": round(canvas[v.vid][0], 2),
            "y": round(canvas[v.vid][1], 2),
        }
        for v in inst_file.vertices
    ]

    return {
        "title": inst_file.name or "instance",
        "width": round(width, 2),
        "height": round(height, 2),
        "radius": RADIUS,
        "font_size": 9,
        "labels": labels,
        "edges": edges,
        "vertices": vertices,
    }


def render_svg(
    inst_file: InstanceFile,
    solution_edges: Iterable[int] = (),
    *,
    labels: bool = True,
) -> str:
    in_file_template = dstbase.get_template(TEMPLATE)
    args = template_args(inst_file, solution_edges, labels=labels)
    logger.debug(
        f'Render "{in_file_template}" for {repr(inst_file.name)} ({len(args["edges"])} edges)'
    )
    return kjinja2.render_file(in_file_template, args)
