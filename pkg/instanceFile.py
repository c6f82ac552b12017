import functools
import os

from collections.abc import Iterable
from collections.abc import Mapping
from dataclasses import dataclass
from decimal import Decimal
from decimal import InvalidOperation
from pathlib import Path
from typing import Optional

from ktoolbox import common

import dstSolver
import planarGraph

from dstbase import InstanceSyntaxError
from dstbase import Role
from dstbase import RoleConflict
from dstSolver import Instance
from dstSolver import NodeWeightedReduction
from dstSolver import Solution
from planarGraph import Dart
from planarGraph import Edge
from planarGraph import EmbeddedDigraph
from planarGraph import HEAD
from planarGraph import TAIL


logger = common.ExtendedLogger("dstkit." + __name__)


INSTANCE_HEADER = "dstkit-instance 1"
SOLUTION_HEADER = "dstkit-solution 1"

INSTANCE_SUFFIX = ".dst"
SOLUTION_SUFFIX = ".sol"


@dataclass(frozen=True)
class VertexRecord:
    vid: int
    role: Role
    x: Optional[Decimal] = None
    y: Optional[Decimal] = None
    cost: int = 0

    def emit(self) -> str:
        parts = ["vertex", str(self.vid), self.role.name.lower()]
        if self.x is not None and self.y is not None:
            parts.append(str(self.x))
            parts.append(str(self.y))
        if self.cost:
            parts.append(f"cost={self.cost}")
        return " ".join(parts)


@dataclass(frozen=True, eq=False)
class InstanceFile:
    """A parsed instance file: the embedded graph plus roles, optional
    coordinates and optional Steiner vertex costs."""

    name: str
    seed: Optional[int]
    vertices: tuple[VertexRecord, ...]
    edges: tuple[Edge, ...]
    rotation: Mapping[int, tuple[Dart, ...]]

    @functools.cached_property
    def graph(self) -> EmbeddedDigraph:
        return EmbeddedDigraph(
            vertices=frozenset(v.vid for v in self.vertices),
            edges={e.eid: e for e in self.edges},
            rotation=self.rotation,
        )

    @property
    def roots(self) -> tuple[int, ...]:
        return tuple(v.vid for v in self.vertices if v.role == Role.ROOT)

    @property
    def terminals(self) -> frozenset[int]:
        return frozenset(v.vid for v in self.vertices if v.role == Role.TERMINAL)

    @property
    def node_costs(self) -> dict[int, int]:
        return {v.vid: v.cost for v in self.vertices if v.cost}

    @property
    def has_node_costs(self) -> bool:
        return any(v.cost for v in self.vertices)

    @property
    def positions(self) -> Optional[dict[int, tuple[float, float]]]:
        pos: dict[int, tuple[float, float]] = {}
        for v in self.vertices:
            if v.x is None or v.y is None:
                return None
            pos[v.vid] = (float(v.x), float(v.y))
        return pos

    def to_instance(self) -> Instance:
        """The edge-weighted instance; node costs are ignored."""
        return Instance.create(self.graph, self.roots, self.terminals, name=self.name)

    def node_weighted_reduction(self) -> NodeWeightedReduction:
        return dstSolver.node_weighted_reduction(
            self.graph,
            self.node_costs,
            self.roots,
            self.terminals,
            name=self.name,
        )

    def solution_cost(self, edges: Iterable[int]) -> int:
        """Edge costs plus the cost of every weighted vertex the edges touch."""
        edges = list(edges)
        touched: set[int] = set()
        for eid in edges:
            e = self.graph.edges[eid]
            touched.update((e.tail, e.head))
        costs = self.node_costs
        return self.graph.cost(edges) + sum(costs.get(v, 0) for v in touched)

    @staticmethod
    def from_graph(
        g: EmbeddedDigraph,
        roots: Iterable[int],
        terminals: Iterable[int],
        *,
        name: str,
        seed: Optional[int] = None,
        positions: Optional[Mapping[int, tuple[int | Decimal, int | Decimal]]] = None,
        node_costs: Optional[Mapping[int, int]] = None,
    ) -> "InstanceFile":
        roots = frozenset(roots)
        terminals = frozenset(terminals)
        both = roots & terminals
        if both:
            raise RoleConflict(f"vertices {sorted(both)} are both root and terminal")
        vertices: list[VertexRecord] = []
        for vid in sorted(g.vertices):
            role = Role.ROOT if vid in roots else Role.TERMINAL if vid in terminals else Role.STEINER
            x: Optional[Decimal] = None
            y: Optional[Decimal] = None
            if positions is not None:
                x = Decimal(positions[vid][0])
                y = Decimal(positions[vid][1])
            cost = node_costs.get(vid, 0) if node_costs is not None else 0
            vertices.append(VertexRecord(vid=vid, role=role, x=x, y=y, cost=cost))
        return InstanceFile(
            name=name,
            seed=seed,
            vertices=tuple(vertices),
            edges=tuple(g.edges[eid] for eid in sorted(g.edges) if not g.edges[eid].aux),
            rotation={v: g.rotation[v] for v in sorted(g.vertices)},
        )

    def emit(self) -> str:
        lines = [INSTANCE_HEADER]
        if self.name:
            lines.append(f"name {self.name}")
        if self.seed is not None:
            lines.append(f"seed {self.seed}")
        for v in sorted(self.vertices, key=lambda v: v.vid):
            lines.append(v.emit())
        for e in sorted(self.edges, key=lambda e: e.eid):
            lines.append(f"edge {e.eid} {e.tail} {e.head} {e.cost}")
        for vid in sorted(self.rotation):
            darts = self.rotation[vid]
            if darts:
                lines.append(f"rotation {vid} " + " ".join(str(d) for d in darts))
        return "\n".join(lines) + "\n"

    def write(self, filename: str | Path) -> None:
        with open(filename, "w", encoding="utf-8") as f:
            f.write(self.emit())


def _parse_int(lineno: int, what: str, s: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise InstanceSyntaxError(lineno, f"invalid {what} {repr(s)}")


def _parse_cost(lineno: int, s: str, fixed_point: Optional[int]) -> int:
    try:
        val = Decimal(s)
    except InvalidOperation:
        raise InstanceSyntaxError(lineno, f"invalid cost {repr(s)}")
    if not val.is_finite():
        raise InstanceSyntaxError(lineno, f"invalid cost {repr(s)}")
    if fixed_point is not None:
        val = val.scaleb(fixed_point)
    if val != val.to_integral_value():
        if fixed_point is None:
            raise InstanceSyntaxError(
                lineno, f"cost {s} is not an integer (use a fixed-point scale)"
            )
        raise InstanceSyntaxError(
            lineno, f"cost {s} is not integral at fixed-point scale {fixed_point}"
        )
    cost = int(val)
    if cost < 0:
        raise InstanceSyntaxError(lineno, f"cost {s} is negative")
    return cost


def _parse_coordinate(lineno: int, s: str) -> Decimal:
    try:
        val = Decimal(s)
    except InvalidOperation:
        raise InstanceSyntaxError(lineno, f"invalid coordinate {repr(s)}")
    if not val.is_finite():
        raise InstanceSyntaxError(lineno, f"invalid coordinate {repr(s)}")
    return val


def _parse_dart(lineno: int, s: str) -> Dart:
    eid_s, sep, side_s = s.partition(":")
    if not sep or side_s not in ("t", "h"):
        raise InstanceSyntaxError(lineno, f"invalid dart {repr(s)}, expected <eid>:<t|h>")
    return Dart(_parse_int(lineno, "edge id", eid_s), TAIL if side_s == "t" else HEAD)


def parse_instance(
    text: str,
    *,
    fixed_point: Optional[int] = None,
    filename: Optional[str | Path] = None,
    check_embedding: bool = True,
) -> InstanceFile:
    lines = text.splitlines()
    if not lines or lines[0].strip() != INSTANCE_HEADER:
        raise InstanceSyntaxError(1, f'expected header "{INSTANCE_HEADER}"')

    name: Optional[str] = None
    seed: Optional[int] = None
    vertices: dict[int, VertexRecord] = {}
    edges: dict[int, Edge] = {}
    rotation: dict[int, tuple[Dart, ...]] = {}

    for lineno, line in enumerate(lines[1:], start=2):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        args = rest.split()
        if keyword == "name":
            if name is not None:
                raise InstanceSyntaxError(lineno, "duplicate name")
            name = rest.strip()
        elif keyword == "seed":
            if len(args) != 1:
                raise InstanceSyntaxError(lineno, "expected: seed <int>")
            seed = _parse_int(lineno, "seed", args[0])
        elif keyword == "vertex":
            cost = 0
            if args and args[-1].startswith("cost="):
                cost = _parse_cost(lineno, args[-1][len("cost=") :], fixed_point)
                args = args[:-1]
            if len(args) not in (2, 4):
                raise InstanceSyntaxError(
                    lineno, "expected: vertex <id> <role> [<x> <y>] [cost=<c>]"
                )
            vid = _parse_int(lineno, "vertex id", args[0])
            try:
                role = common.enum_convert(Role, args[1])
            except ValueError:
                raise InstanceSyntaxError(lineno, f"invalid role {repr(args[1])}")
            x = y = None
            if len(args) == 4:
                x = _parse_coordinate(lineno, args[2])
                y = _parse_coordinate(lineno, args[3])
            if vid in vertices:
                if vertices[vid].role != role:
                    raise RoleConflict(
                        f"line {lineno}: vertex {vid} declared as {vertices[vid].role.name.lower()} and {role.name.lower()}"
                    )
                raise InstanceSyntaxError(lineno, f"duplicate vertex {vid}")
            if cost and role != Role.STEINER:
                raise RoleConflict(
                    f"line {lineno}: {role.name.lower()} {vid} cannot carry a node cost"
                )
            vertices[vid] = VertexRecord(vid=vid, role=role, x=x, y=y, cost=cost)
        elif keyword == "edge":
            if len(args) != 4:
                raise InstanceSyntaxError(lineno, "expected: edge <id> <tail> <head> <cost>")
            eid = _parse_int(lineno, "edge id", args[0])
            if eid in edges:
                raise InstanceSyntaxError(lineno, f"duplicate edge {eid}")
            edges[eid] = Edge(
                eid,
                _parse_int(lineno, "tail", args[1]),
                _parse_int(lineno, "head", args[2]),
                _parse_cost(lineno, args[3], fixed_point),
            )
        elif keyword == "rotation":
            if not args:
                raise InstanceSyntaxError(lineno, "expected: rotation <vertex> <eid>:<t|h> ...")
            vid = _parse_int(lineno, "vertex id", args[0])
            if vid in rotation:
                raise InstanceSyntaxError(lineno, f"duplicate rotation for vertex {vid}")
            rotation[vid] = tuple(_parse_dart(lineno, s) for s in args[1:])
        else:
            raise InstanceSyntaxError(lineno, f"unknown record {repr(keyword)}")

    if name is None:
        name = Path(filename).stem if filename is not None else ""

    inst_file = InstanceFile(
        name=name,
        seed=seed,
        vertices=tuple(vertices[vid] for vid in sorted(vertices)),
        edges=tuple(edges[eid] for eid in sorted(edges)),
        rotation=rotation,
    )
    if not inst_file.roots:
        raise RoleConflict("instance has no root")
    g = inst_file.graph
    if check_embedding:
        planarGraph.validate_embedding(g)
    return inst_file


def parse_instance_file(
    filename: str | Path,
    *,
    fixed_point: Optional[int] = None,
) -> InstanceFile:
    with open(filename, "r", encoding="utf-8") as f:
        text = f.read()
    inst_file = parse_instance(text, fixed_point=fixed_point, filename=filename)
    logger.debug(
        f"instance {repr(inst_file.name)} from {repr(str(filename))}: n={len(inst_file.vertices)} m={len(inst_file.edges)} k={len(inst_file.terminals)}"
    )
    return inst_file


def list_corpus(directory: str | Path) -> list[str]:
    return sorted(
        os.path.join(directory, f)
        for f in os.listdir(directory)
        if f.endswith(INSTANCE_SUFFIX)
    )


@dataclass(frozen=True)
class SolutionFile:
    instance: str
    edges: tuple[int, ...]
    cost: int

    @staticmethod
    def from_solution(name: str, solution: Solution) -> "SolutionFile":
        return SolutionFile(instance=name, edges=solution.edges, cost=solution.cost)

    def emit(self) -> str:
        lines = [SOLUTION_HEADER, f"instance {self.instance}"]
        lines.extend(str(eid) for eid in self.edges)
        lines.append(f"cost {self.cost}")
        return "\n".join(lines) + "\n"


def parse_solution(text: str) -> SolutionFile:
    lines = text.splitlines()
    if not lines or lines[0].strip() != SOLUTION_HEADER:
        raise InstanceSyntaxError(1, f'expected header "{SOLUTION_HEADER}"')
    instance = ""
    edges: list[int] = []
    cost: Optional[int] = None
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if cost is not None:
            raise InstanceSyntaxError(lineno, "content after the cost line")
        if line.startswith("instance"):
            instance = line[len("instance") :].strip()
        elif line.startswith("cost "):
            cost = _parse_int(lineno, "cost", line[len("cost ") :].strip())
        else:
            edges.append(_parse_int(lineno, "edge id", line))
    if cost is None:
        raise InstanceSyntaxError(len(lines), "missing cost line")
    return SolutionFile(instance=instance, edges=tuple(edges), cost=cost)


def parse_solution_file(filename: str | Path) -> SolutionFile:
    with open(filename, "r", encoding="utf-8") as f:
        return parse_solution(f.read())
