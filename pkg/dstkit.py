#!/usr/bin/env python3

import argparse
import os
import sys
import time
import typing

from typing import Optional

from ktoolbox import common

import benchmark
import dstSolver
import exactOracle
import generator
import instanceFile
import print_results
import svgDraw
import verifier

from benchConfig import BenchConfig
from benchConfig import is_bench_config_file
from dstbase import BenchResults
from dstbase import CapExceeded
from dstbase import DstError
from dstbase import GeneratorStyle
from dstbase import Infeasible
from dstbase import OutputFormat
from dstbase import RunRecord
from dstbase import Unreachable
from instanceFile import InstanceFile
from instanceFile import SolutionFile


logger = common.ExtendedLogger("dstkit." + __name__)


EXIT_CODE_VALIDATION = print_results.EXIT_CODE_VALIDATION
EXIT_CODE_INPUT = 2
EXIT_CODE_INFEASIBLE = 3
EXIT_CODE_CAP = 4
EXIT_CODE_INTERNAL = common.EX_SOFTWARE


def _error(code: str, msg: str) -> None:
    print(f"dstkit: error[{code}]: {msg}", file=sys.stderr)


def _exit_code_for(e: DstError) -> int:
    if isinstance(e, (Infeasible, Unreachable)):
        return EXIT_CODE_INFEASIBLE
    if isinstance(e, CapExceeded):
        return EXIT_CODE_CAP
    return EXIT_CODE_INPUT


def _open_out(out: Optional[str]) -> typing.TextIO:
    if out is None or out == "-":
        return sys.stdout
    return open(out, "w", encoding="utf-8")


def _write_text(out: Optional[str], text: str) -> None:
    f = _open_out(out)
    try:
        f.write(text)
    finally:
        if f is not sys.stdout:
            f.close()


def _write_results(
    results: BenchResults,
    fmt: OutputFormat,
    out: Optional[str],
) -> None:
    f = _open_out(out)
    try:
        if fmt == OutputFormat.CSV:
            results.serialize_to_csv(f)
        else:
            results.serialize_to_file(f)
    finally:
        if f is not sys.stdout:
            f.close()


def _load_instance(args: argparse.Namespace) -> InstanceFile:
    return instanceFile.parse_instance_file(args.instance, fixed_point=args.fixed_point)


def _add_argument_instance(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "instance",
        type=str,
        help='Instance file (see "dstkit-instance 1" format in the README).',
    )
    parser.add_argument(
        "--fixed-point",
        type=int,
        default=None,
        metavar="P",
        help="Accept decimal costs, multiplied by 10^P. Costs must be integral after scaling.",
    )


def _add_argument_out(parser: argparse.ArgumentParser, what: str) -> None:
    parser.add_argument(
        "-o",
        "--out",
        type=str,
        default=None,
        help=f"Write the {what} to this file instead of stdout.",
    )


def cmd_solve(args: argparse.Namespace) -> int:
    inst_file = _load_instance(args)
    time_start = time.monotonic()
    solution, report = benchmark.solve_instance(
        inst_file, epsilon=args.epsilon, prune=args.prune, audit=args.audit
    )
    wall_time = time.monotonic() - time_start
    _write_text(args.out, SolutionFile.from_solution(inst_file.name, solution).emit())

    record = RunRecord(
        instance=inst_file.name,
        seed=args.seed if args.seed is not None else inst_file.seed,
        epsilon=str(report.epsilon),
        k=len(inst_file.terminals),
        num_roots=len(inst_file.roots),
        n=len(inst_file.vertices),
        m=len(inst_file.edges),
        approx_cost=solution.cost,
        oracle_cost=None,
        ratio=None,
        recursion_calls=report.recursion_calls,
        ell=report.ell,
        o=report.o,
        wall_time=wall_time,
        bound=float(report.bound),
        bound_satisfied=None,
        separator_violations=report.separator_violations,
    )
    if args.record is not None:
        _write_results(
            BenchResults(lst=(record,)),
            common.enum_convert(OutputFormat, args.format),
            args.record,
        )
    if not record.eval_success:
        _error("validation", f"{inst_file.name}: {record.eval_msg}")
        return EXIT_CODE_VALIDATION
    return 0


def cmd_exact(args: argparse.Namespace) -> int:
    inst_file = _load_instance(args)
    if args.brute_force:
        if inst_file.has_node_costs:
            reduction = inst_file.node_weighted_reduction()
            sol = exactOracle.brute_force_dst(reduction.instance)
            solution = reduction.lift(sol.edges)
        else:
            solution = exactOracle.brute_force_dst(inst_file.to_instance())
    else:
        solution = benchmark.exact_instance(inst_file, cap=args.oracle_cap)
    _write_text(args.out, SolutionFile.from_solution(inst_file.name, solution).emit())
    logger.info(f"exact {repr(inst_file.name)}: optimum {solution.cost}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    inst_file = _load_instance(args)
    sol_file = instanceFile.parse_solution_file(args.solution)
    if sol_file.instance and inst_file.name and sol_file.instance != inst_file.name:
        logger.warning(
            f"solution is for instance {repr(sol_file.instance)} but checked against {repr(inst_file.name)}"
        )
    result = verifier.verify_solution(
        inst_file, sol_file.edges, claimed_cost=sol_file.cost
    )
    if not result.ok:
        for msg in result.messages():
            _error("verify", msg)
        return EXIT_CODE_VALIDATION
    logger.info(f"verify {repr(inst_file.name)}: feasible with cost {result.cost}")
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    if args.config is not None:
        bc = BenchConfig(config_path=args.config)
        bc.log_config()
        out_dir = args.out_dir if args.out_dir is not None else "."
        os.makedirs(out_dir, exist_ok=True)
        specs = bc.instances()
        for spec in specs:
            inst_file = spec.generate()
            name = inst_file.name + instanceFile.INSTANCE_SUFFIX
            inst_file.write(os.path.join(out_dir, name))
        logger.info(f"gen: wrote {len(specs)} instances to {repr(out_dir)}")
        return 0

    inst_file = generator.generate(
        args.seed if args.seed is not None else 0,
        args.n,
        args.k,
        args.roots,
        generator.parse_cost_range(args.cost_range),
        common.enum_convert(GeneratorStyle, args.style),
        name=args.name,
    )
    _write_text(args.out, inst_file.emit())
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    epsilon = args.epsilon
    oracle_cap = args.oracle_cap
    prune = args.prune
    oracle = args.oracle
    if is_bench_config_file(args.corpus):
        bc = BenchConfig(config_path=args.corpus)
        bc.log_config()
        jobs = [benchmark.BenchJob(spec=s) for s in bc.instances()]
        # Command line flags take precedence over the configuration.
        if epsilon is None:
            epsilon = bc.config.epsilon
        if oracle_cap is None:
            oracle_cap = bc.config.oracle_cap
        if prune is None:
            prune = bc.config.prune
        if oracle is None:
            oracle = bc.config.oracle
    else:
        jobs = [
            benchmark.BenchJob(path=p) for p in instanceFile.list_corpus(args.corpus)
        ]

    if epsilon is None:
        epsilon = str(dstSolver.DEFAULT_EPSILON)
    if oracle_cap is None:
        oracle_cap = exactOracle.DEFAULT_ORACLE_CAP

    options = benchmark.BenchOptions(
        epsilon=str(dstSolver.parse_epsilon(epsilon)),
        oracle=oracle if oracle is not None else True,
        oracle_cap=oracle_cap,
        prune=bool(prune),
        fixed_point=args.fixed_point,
    )

    results = benchmark.run_benchmark(jobs, options)
    _write_results(results, common.enum_convert(OutputFormat, args.format), args.out)

    summary = results.get_summary()
    summary.log()
    for line in summary.lines():
        print(line, file=sys.stderr)
    if not summary.result:
        _, group_fail = results.group_by_success()
        for record in group_fail:
            _error("validation", f"{record.instance}: {record.eval_msg}")
        return EXIT_CODE_VALIDATION
    return 0


def cmd_draw(args: argparse.Namespace) -> int:
    inst_file = _load_instance(args)
    edges: tuple[int, ...] = ()
    if args.solution is not None:
        edges = instanceFile.parse_solution_file(args.solution).edges
    svg = svgDraw.render_svg(inst_file, edges, labels=args.labels)
    _write_text(args.out, svg)
    return 0


def parse_args() -> argparse.Namespace:

    parser = argparse.ArgumentParser(
        description="Approximate and exact directed Steiner trees on embedded planar graphs."
    )
    common.log_argparse_add_argument_verbosity(parser)
    subparsers = parser.add_subparsers(dest="command", required=True)

    p = subparsers.add_parser("solve", help="Approximate an instance.")
    _add_argument_instance(p)
    p.add_argument(
        "--epsilon",
        type=str,
        default=str(dstSolver.DEFAULT_EPSILON),
        help='Cost scaling precision, as a rational like "1/2" (default) or "0.25".',
    )
    p.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Seed recorded in the run record (default: the seed in the instance file).",
    )
    p.add_argument(
        "--prune",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="Drop solution edges not needed to reach a terminal.",
    )
    p.add_argument(
        "--audit",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="Check every separator and merge during the recursion.",
    )
    p.add_argument(
        "--record",
        type=str,
        default=None,
        help="Also write the run record to this file.",
    )
    p.add_argument(
        "--format",
        choices=["csv", "json"],
        default="json",
        help="Format of the run record file.",
    )
    _add_argument_out(p, "solution file")
    p.set_defaults(func=cmd_solve)

    p = subparsers.add_parser("exact", help="Solve an instance to optimality.")
    _add_argument_instance(p)
    p.add_argument(
        "--oracle-cap",
        type=int,
        default=exactOracle.DEFAULT_ORACLE_CAP,
        help="Refuse instances with more terminals than this (default 12).",
    )
    p.add_argument(
        "--brute-force",
        action="store_true",
        help="Enumerate edge subsets instead of running the subset dynamic program.",
    )
    _add_argument_out(p, "solution file")
    p.set_defaults(func=cmd_exact)

    p = subparsers.add_parser("verify", help="Check a solution file against an instance.")
    _add_argument_instance(p)
    p.add_argument("solution", type=str, help="Solution file.")
    p.set_defaults(func=cmd_verify)

    p = subparsers.add_parser("gen", help="Generate random grid instances.")
    p.add_argument("--seed", type=int, default=None, help="Generator seed (default 0).")
    p.add_argument("-n", type=int, default=100, help="Number of vertices.")
    p.add_argument("-k", type=int, default=4, help="Number of terminals.")
    p.add_argument("-R", "--roots", type=int, default=1, help="Number of roots.")
    p.add_argument(
        "--cost-range",
        type=str,
        default="1-20",
        help='Inclusive integer edge cost range "LO-HI".',
    )
    p.add_argument(
        "--style",
        choices=["grid", "grid-diagonals"],
        default="grid",
        help="Grid only, or one random diagonal per cell.",
    )
    p.add_argument("--name", type=str, default=None, help="Instance name.")
    p.add_argument(
        "--config",
        type=str,
        default=None,
        help='Generate every instance of a YAML bench configuration (see "bench-config.yaml").',
    )
    p.add_argument(
        "--out-dir",
        type=str,
        default=None,
        help="Directory for instances generated from --config.",
    )
    _add_argument_out(p, "instance file")
    p.set_defaults(func=cmd_gen)

    p = subparsers.add_parser("bench", help="Solve a corpus and compare against the oracle.")
    p.add_argument(
        "corpus",
        type=str,
        help='Directory of "*.dst" instance files, or a YAML bench configuration.',
    )
    p.add_argument("--epsilon", type=str, default=None, help='Default "1/2".')
    p.add_argument("--oracle-cap", type=int, default=None, help="Default 12.")
    p.add_argument(
        "--oracle",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Compare against the exact optimum where the terminal count allows.",
    )
    p.add_argument(
        "--prune",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Prune solutions before recording their cost.",
    )
    p.add_argument(
        "--fixed-point",
        type=int,
        default=None,
        metavar="P",
        help="Decimal cost scale for corpus files.",
    )
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    _add_argument_out(p, "run records")
    p.set_defaults(func=cmd_bench)

    p = subparsers.add_parser("draw", help="Render an instance as SVG.")
    _add_argument_instance(p)
    p.add_argument(
        "solution",
        nargs="?",
        type=str,
        default=None,
        help="Solution file whose edges are highlighted.",
    )
    p.add_argument(
        "--labels",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="Print vertex ids.",
    )
    _add_argument_out(p, "SVG")
    p.set_defaults(func=cmd_draw)

    args = parser.parse_args()

    common.log_config_logger(args.verbosity, "dstkit", "ktoolbox")

    return args


def main() -> int:
    args = parse_args()
    try:
        return typing.cast(int, args.func(args))
    except DstError as e:
        _error(e.code, str(e))
        return _exit_code_for(e)
    except (OSError, ValueError) as e:
        # Unreadable files and invalid YAML configurations.
        _error("input", str(e))
        return EXIT_CODE_INPUT
    except Exception as e:
        logger.debug("internal error", exc_info=True)
        _error("internal", f"{type(e).__name__}: {e}")
        return EXIT_CODE_INTERNAL


if __name__ == "__main__":
    common.run_main(main)
