import csv
import functools
import json
import os
import shlex
import typing

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any
from typing import Optional

from ktoolbox import common
from ktoolbox.common import strict_dataclass


logger = common.ExtendedLogger("dstkit." + __name__)


ENV_DSTKIT_THREADS = "DSTKIT_THREADS"
ENV_DSTKIT_CHECK_EMBEDDING = "DSTKIT_CHECK_EMBEDDING"


def get_environ(name: str) -> Optional[str]:
    # Some environment variables are honored as configuration.
    # Which ones? Run `git grep -w get_environ`!
    return os.environ.get(name, None)


@functools.cache
def get_dstkit_threads() -> int:
    n: Optional[int] = None
    s_env = get_environ(ENV_DSTKIT_THREADS)
    if s_env is not None and s_env.strip():
        try:
            n = int(s_env.strip())
        except ValueError:
            n = None
        if n is None or n < 1:
            logger.error(
                f"env: invalid environment variable in {ENV_DSTKIT_THREADS}={shlex.quote(s_env)}. Set to a positive integer"
            )
            n = None
    if n is None:
        n = os.cpu_count() or 1
    logger.info(f"env: {ENV_DSTKIT_THREADS}={n}")
    return n


@functools.cache
def get_dstkit_check_embedding() -> bool:
    s = get_environ(ENV_DSTKIT_CHECK_EMBEDDING)
    val = s is not None and s.strip().lower() in ("1", "y", "yes", "true", "on")
    logger.debug(f"env: {ENV_DSTKIT_CHECK_EMBEDDING}={common.bool_to_str(val)}")
    return val


cwd = os.getcwd()

basedir = common.path_norm(os.path.dirname(__file__), cwd=cwd)


def dstfile(*components: str) -> str:
    f = basedir + "/" + "/".join(components)
    return common.path_norm(f)


@functools.cache
def get_template(filename: str) -> str:
    assert ".." not in filename.split("/")
    f = dstfile("templates", filename)
    if os.path.exists(f):
        return f
    raise ValueError(f"Could not find template file {repr(filename)} at {repr(f)}.")


class DstError(Exception):
    code: typing.ClassVar[str] = "error"


class MalformedRotation(DstError, ValueError):
    code = "malformed-rotation"


class NotPlanarEmbedding(DstError, ValueError):
    code = "not-planar"


class UnknownVertex(DstError, ValueError):
    code = "unknown-vertex"


class NotConnectedSubset(DstError, ValueError):
    code = "not-connected-subset"


class LabelCollision(DstError, ValueError):
    code = "label-collision"


class NotConnected(DstError, ValueError):
    code = "not-connected"


class NotSpanningTree(DstError, ValueError):
    code = "not-spanning-tree"


class UnreachableVertex(DstError, ValueError):
    code = "unreachable-vertex"


class Unreachable(DstError, ValueError):
    code = "unreachable"


class Infeasible(DstError, ValueError):
    code = "infeasible"


class InvalidEpsilon(DstError, ValueError):
    code = "invalid-epsilon"


class NegativeCost(DstError, ValueError):
    code = "negative-cost"


class CapExceeded(DstError, ValueError):
    code = "cap-exceeded"


class InvalidParams(DstError, ValueError):
    code = "invalid-params"


class RoleConflict(DstError, ValueError):
    code = "role-conflict"


class InstanceSyntaxError(DstError, ValueError):
    code = "syntax"

    def __init__(self, lineno: int, msg: str) -> None:
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class Role(Enum):
    ROOT = 1
    TERMINAL = 2
    STEINER = 3


class GeneratorStyle(Enum):
    GRID = 1
    GRID_DIAGONALS = 2


class OutputFormat(Enum):
    CSV = 1
    JSON = 2


@strict_dataclass
@dataclass(frozen=True, kw_only=True)
class RunRecord:
    """The outcome of solving one instance, optionally compared against the
    exact optimum.

    The field order is the column order of the CSV export."""

    instance: str
    seed: Optional[int]
    epsilon: str
    k: int
    num_roots: int
    n: int
    m: int
    approx_cost: int
    oracle_cost: Optional[int]
    ratio: Optional[float]
    recursion_calls: int
    ell: int
    o: int
    wall_time: float
    bound: float
    bound_satisfied: Optional[bool]
    separator_violations: int = 0

    @property
    def call_budget(self) -> int:
        return self.k * 2 ** (2 * self.ell + self.o)

    @property
    def calls_within_budget(self) -> bool:
        return self.recursion_calls <= self.call_budget

    @property
    def eval_success(self) -> bool:
        return (
            self.bound_satisfied is not False
            and self.calls_within_budget
            and self.separator_violations == 0
        )

    @property
    def eval_msg(self) -> str:
        msgs: list[str] = []
        if self.bound_satisfied is False:
            msgs.append(f"ratio {self.ratio} exceeds the bound {self.bound:.2f}")
        if not self.calls_within_budget:
            msgs.append(
                f"{self.recursion_calls} recursion calls exceed the budget {self.call_budget}"
            )
        if self.separator_violations:
            msgs.append(f"{self.separator_violations} separator checks failed")
        return "; ".join(msgs)

    @staticmethod
    def csv_header() -> list[str]:
        return [f.name for f in RunRecord.__dataclass_fields__.values()]

    def csv_row(self) -> list[str]:
        row: list[str] = []
        for name in RunRecord.csv_header():
            val = getattr(self, name)
            if val is None:
                row.append("")
            elif isinstance(val, bool):
                row.append(common.bool_to_str(val))
            elif isinstance(val, float):
                row.append(f"{val:.6f}")
            else:
                row.append(str(val))
        return row


@strict_dataclass
@dataclass(frozen=True, kw_only=True)
class BenchResults:
    lst: tuple[RunRecord, ...]
    filename: Optional[str] = None

    DSTKIT_RUNS: typing.ClassVar[str] = "dstkit-runs"

    def __iter__(self) -> typing.Iterator[RunRecord]:
        return iter(self.lst)

    def __len__(self) -> int:
        return len(self.lst)

    @property
    def log_detail(self) -> str:
        if self.filename is None:
            return ""
        return f" in {repr(self.filename)}"

    def serialize(self) -> dict[str, Any]:
        return {
            BenchResults.DSTKIT_RUNS: [common.dataclass_to_dict(o) for o in self],
        }

    def serialize_to_file(
        self,
        file: str | Path | typing.IO[str],
    ) -> None:
        common.json_dump(self.serialize(), file)

    def serialize_to_csv(self, file: typing.IO[str]) -> None:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(RunRecord.csv_header())
        for record in self:
            writer.writerow(record.csv_row())

    @staticmethod
    def parse(
        data: Any,
        *,
        filename: Optional[str | Path] = None,
    ) -> "BenchResults":

        err = "data"
        if filename is not None:
            # The filename is only used for the error message.
            err = f"file {repr(str(filename))}"

        if not isinstance(data, dict):
            raise RuntimeError(f"{err} needs to contain a dictionary")

        if BenchResults.DSTKIT_RUNS not in data:
            raise RuntimeError(
                f'{err} needs a top level key "{BenchResults.DSTKIT_RUNS}"'
            )

        k = list(data)
        k.remove(BenchResults.DSTKIT_RUNS)
        if k:
            raise RuntimeError(f'{err} has unknown top level key "{k[0]}"')

        data_runs = data[BenchResults.DSTKIT_RUNS]

        if not isinstance(data_runs, list):
            raise RuntimeError(
                f'{err} needs a list at top level key "{BenchResults.DSTKIT_RUNS}" but has {type(data_runs)}'
            )

        lst: list[RunRecord] = []
        for data_run in data_runs:
            try:
                record = common.dataclass_from_dict(RunRecord, data_run)
            except Exception as e:
                raise RuntimeError(f"{err} has invalid data: {e}")
            lst.append(record)

        return BenchResults(
            lst=tuple(lst),
            filename=(str(filename) if filename is not None else None),
        )

    @staticmethod
    def parse_from_file(filename: str | Path) -> "BenchResults":
        try:
            f = open(filename, "r")
        except Exception as e:
            raise RuntimeError(f"cannot load file {filename}: {e}")
        try:
            data = json.load(f)
        except Exception:
            raise RuntimeError(f"File {filename} does not contain valid JSON")
        finally:
            f.close()

        return BenchResults.parse(data, filename=filename)

    def group_by_success(self) -> tuple["BenchResults", "BenchResults"]:
        group_success = [o for o in self if o.eval_success]
        group_fail = [o for o in self if not o.eval_success]
        return (
            BenchResults(lst=tuple(group_success), filename=self.filename),
            BenchResults(lst=tuple(group_fail), filename=self.filename),
        )

    def get_summary(self) -> "BenchSummary":
        ratios = [r.ratio for r in self if r.ratio is not None]
        return BenchSummary(
            result=all(r.eval_success for r in self),
            count=len(self),
            num_with_oracle=len(ratios),
            max_ratio=max(ratios) if ratios else None,
            mean_ratio=(sum(ratios) / len(ratios)) if ratios else None,
            bound_violations=sum(1 for r in self if r.bound_satisfied is False),
            call_budget_violations=sum(1 for r in self if not r.calls_within_budget),
            separator_violations=sum(r.separator_violations for r in self),
        )


@strict_dataclass
@dataclass(frozen=True, kw_only=True)
class BenchSummary:
    """Aggregate over a list of run records.

    Attributes:
        result: True if no record violates its bound, its call budget or
            a separator check.
        max_ratio, mean_ratio: over the records that have an oracle value."""

    result: bool
    count: int
    num_with_oracle: int
    max_ratio: Optional[float]
    mean_ratio: Optional[float]
    bound_violations: int
    call_budget_violations: int
    separator_violations: int

    def lines(self) -> list[str]:
        def _fmt(v: Optional[float]) -> str:
            return "n/a" if v is None else f"{v:.4f}"

        return [
            f"instances: {self.count} ({self.num_with_oracle} with oracle)",
            f"max ratio: {_fmt(self.max_ratio)}",
            f"mean ratio: {_fmt(self.mean_ratio)}",
            f"bound violations: {self.bound_violations}",
            f"call budget violations: {self.call_budget_violations}",
            f"separator violations: {self.separator_violations}",
        ]

    def log(
        self,
    ) -> None:
        logger.info(f"RESULT: Success = {self.result}.")
        for line in self.lines():
            logger.info(f"  {line}")
