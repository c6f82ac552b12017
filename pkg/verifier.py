import collections

from collections.abc import Iterable
from dataclasses import dataclass
from typing import Optional

from ktoolbox import common

from dstbase import Role
from instanceFile import InstanceFile


logger = common.ExtendedLogger("dstkit." + __name__)


@dataclass(frozen=True)
class VerifyResult:
    cost: int
    claimed_cost: Optional[int]
    unreached: tuple[int, ...]
    unknown_edges: tuple[int, ...]
    duplicate_edges: tuple[int, ...]

    @property
    def feasible(self) -> bool:
        return not self.unreached and not self.unknown_edges

    @property
    def cost_matches(self) -> bool:
        return self.claimed_cost is None or self.claimed_cost == self.cost

    @property
    def ok(self) -> bool:
        return self.feasible and self.cost_matches and not self.duplicate_edges

    def messages(self) -> list[str]:
        msgs: list[str] = []
        if self.unknown_edges:
            msgs.append(f"unknown edges {list(self.unknown_edges)}")
        if self.duplicate_edges:
            msgs.append(f"duplicate edges {list(self.duplicate_edges)}")
        for t in self.unreached:
            msgs.append(f"terminal {t} is not reached from any root")
        if not self.cost_matches:
            msgs.append(f"claimed cost {self.claimed_cost} but edges cost {self.cost}")
        return msgs


def verify_solution(
    inst_file: InstanceFile,
    edges: Iterable[int],
    *,
    claimed_cost: Optional[int] = None,
) -> VerifyResult:
    """Check that every terminal has a dipath from some root inside the
    given edges, and recompute their cost including the cost of every
    weighted vertex they touch."""
    by_id = {e.eid: e for e in inst_file.edges}
    edges = list(edges)
    seen: set[int] = set()
    duplicates: list[int] = []
    unknown: list[int] = []
    chosen: list[int] = []
    for eid in edges:
        if eid in seen:
            duplicates.append(eid)
            continue
        seen.add(eid)
        if eid not in by_id:
            unknown.append(eid)
            continue
        chosen.append(eid)

    out: dict[int, list[int]] = collections.defaultdict(list)
    for eid in chosen:
        out[by_id[eid].tail].append(by_id[eid].head)

    reached = {v.vid for v in inst_file.vertices if v.role == Role.ROOT}
    queue = collections.deque(reached)
    while queue:
        x = queue.popleft()
        for y in out[x]:
            if y not in reached:
                reached.add(y)
                queue.append(y)

    unreached = sorted(
        v.vid
        for v in inst_file.vertices
        if v.role == Role.TERMINAL and v.vid not in reached
    )

    cost = inst_file.solution_cost(chosen)

    result = VerifyResult(
        cost=cost,
        claimed_cost=claimed_cost,
        unreached=tuple(unreached),
        unknown_edges=tuple(unknown),
        duplicate_edges=tuple(duplicates),
    )
    logger.debug(
        f"verify {repr(inst_file.name)}: {len(chosen)} edges, cost {cost}, ok={result.ok}"
    )
    return result
