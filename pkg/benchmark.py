import time

from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from multiprocessing import Pool
from typing import Optional

from ktoolbox import common

import dstbase
import dstSolver
import exactOracle
import instanceFile

from benchConfig import InstanceSpec
from dstbase import BenchResults
from dstbase import RunRecord
from dstSolver import Solution
from instanceFile import InstanceFile


logger = common.ExtendedLogger("dstkit." + __name__)


@dataclass(frozen=True, kw_only=True)
class BenchOptions:
    epsilon: str = str(dstSolver.DEFAULT_EPSILON)
    oracle: bool = True
    oracle_cap: int = exactOracle.DEFAULT_ORACLE_CAP
    prune: bool = False
    fixed_point: Optional[int] = None


@dataclass(frozen=True)
class BenchJob:
    """One instance to run, either a corpus file or generator parameters."""

    path: Optional[str] = None
    spec: Optional[InstanceSpec] = None

    def load(self, options: BenchOptions) -> InstanceFile:
        if self.path is not None:
            return instanceFile.parse_instance_file(
                self.path, fixed_point=options.fixed_point
            )
        return common.unwrap(self.spec).generate()


def solve_instance(
    inst_file: InstanceFile,
    *,
    epsilon: str | Fraction,
    prune: bool = False,
    audit: bool = False,
) -> tuple[Solution, dstSolver.SolveReport]:
    """Solve a file instance, going through the node-weighted reduction
    when it has vertex costs. The solution is in the file's edge ids."""
    if not inst_file.has_node_costs:
        report = dstSolver.solve(
            inst_file.to_instance(), epsilon, prune_result=prune, audit=audit
        )
        return report.solution, report
    reduction = inst_file.node_weighted_reduction()
    # Pruning first makes every used weighted vertex paid once.
    report = dstSolver.solve(reduction.instance, epsilon, prune_result=True, audit=audit)
    return reduction.lift(report.solution.edges), report


def exact_instance(inst_file: InstanceFile, *, cap: int) -> Solution:
    if not inst_file.has_node_costs:
        return exactOracle.exact_dst(inst_file.to_instance(), cap=cap)
    reduction = inst_file.node_weighted_reduction()
    return reduction.lift(exactOracle.exact_dst(reduction.instance, cap=cap).edges)


def run_instance(inst_file: InstanceFile, options: BenchOptions) -> RunRecord:
    start = time.monotonic()
    solution, report = solve_instance(
        inst_file, epsilon=options.epsilon, prune=options.prune, audit=True
    )
    k = len(inst_file.terminals)

    oracle_cost: Optional[int] = None
    ratio: Optional[float] = None
    bound_satisfied: Optional[bool] = None
    if options.oracle and k <= options.oracle_cap:
        optimum = exact_instance(inst_file, cap=options.oracle_cap)
        inst = inst_file.to_instance()
        record = exactOracle.ratio_report(
            inst,
            solution,
            epsilon=report.epsilon,
            cap=options.oracle_cap,
            optimum=optimum,
        )
        oracle_cost = record.opt
        ratio = record.ratio
        bound_satisfied = record.bound_satisfied

    wall_time = time.monotonic() - start
    run = RunRecord(
        instance=inst_file.name,
        seed=inst_file.seed,
        epsilon=str(report.epsilon),
        k=k,
        num_roots=len(inst_file.roots),
        n=len(inst_file.vertices),
        m=len(inst_file.edges),
        approx_cost=solution.cost,
        oracle_cost=oracle_cost,
        ratio=ratio,
        recursion_calls=report.recursion_calls,
        ell=report.ell,
        o=report.o,
        wall_time=wall_time,
        bound=float(report.bound),
        bound_satisfied=bound_satisfied,
        separator_violations=report.separator_violations,
    )
    logger.info(
        f"bench {repr(run.instance)}: k={k} cost {run.approx_cost} opt {oracle_cost if oracle_cost is not None else 'n/a'} calls {run.recursion_calls}/{run.call_budget} in {common.format_duration(wall_time)}"
    )
    return run


def _run_job(args: tuple[BenchJob, BenchOptions]) -> RunRecord:
    job, options = args
    return run_instance(job.load(options), options)


def run_benchmark(
    jobs: Sequence[BenchJob],
    options: BenchOptions,
    *,
    threads: Optional[int] = None,
) -> BenchResults:
    """Run every job, in a worker pool unless a single thread is asked
    for. Records come back in job order."""
    if threads is None:
        threads = dstbase.get_dstkit_threads()
    threads = max(1, min(threads, len(jobs)))
    work = [(job, options) for job in jobs]
    logger.info(f"bench: {len(jobs)} instances on {threads} workers")
    if threads == 1:
        records = [_run_job(w) for w in work]
    else:
        with Pool(threads) as pool:
            records = pool.map(_run_job, work)
    return BenchResults(lst=tuple(records))
