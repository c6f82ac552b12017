#!/usr/bin/env python3

import argparse
import typing

from collections.abc import Iterable

from ktoolbox import common

import dstbase


EXIT_CODE_VALIDATION = 1


def print_run_record(
    record: dstbase.RunRecord,
    *,
    log: typing.Callable[[str], None] = print,
) -> None:
    if not record.eval_success:
        msg = f"failed: {record.eval_msg}"
    else:
        msg = "succeeded"
    opt = "n/a" if record.oracle_cost is None else str(record.oracle_cost)
    ratio = "n/a" if record.ratio is None else f"{record.ratio:.4f}"
    log(
        f"Instance: {record.instance}, "
        f"k={record.k}, R={record.num_roots}, n={record.n}, "
        f"Cost: {record.approx_cost}, "
        f"Optimum: {opt}, "
        f"Ratio: {ratio} (bound {record.bound:.2f}), "
        f"Calls: {record.recursion_calls}/{record.call_budget}, "
        f"{msg}"
    )


def print_run_records(
    records: Iterable[dstbase.RunRecord],
    *,
    log: typing.Callable[[str], None] = print,
) -> None:
    for record in records:
        print_run_record(record, log=log)


def process_results(
    bench_results: dstbase.BenchResults,
    *,
    log: typing.Callable[[str], None] = print,
) -> bool:

    group_success, group_fail = bench_results.group_by_success()

    log(
        f"There are {len(group_success)} passing runs{bench_results.log_detail}.{' Details:' if group_success else ''}"
    )
    print_run_records(group_success, log=log)

    log(
        f"There are {len(group_fail)} failing runs{bench_results.log_detail}.{' Details:' if group_fail else ''}"
    )
    print_run_records(group_fail, log=log)

    for line in bench_results.get_summary().lines():
        log(line)

    log("")
    return not group_fail


def process_results_all(
    bench_results_lst: Iterable[dstbase.BenchResults],
    *,
    log: typing.Callable[[str], None] = print,
) -> bool:
    failed_files: list[str] = []

    for bench_results in common.iter_eval_now(bench_results_lst):
        if not process_results(bench_results, log=log):
            failed_files.append(bench_results.filename or "<unnamed>")

    log("")
    if failed_files:
        log(f"Failures detected in {repr(failed_files)}")
        return False

    log("No failures detected in results")
    return True


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description="Tool to prettify dstkit benchmark results"
    )
    parser.add_argument(
        "result",
        nargs="+",
        help="The JSON result file(s) written by `dstkit.py bench --format json`.",
    )
    common.log_argparse_add_argument_verbose(parser)

    args = parser.parse_args()

    common.log_config_logger(args.verbose, "dstkit", "ktoolbox")

    return args


def main() -> int:
    args = parse_args()
    success = process_results_all(
        dstbase.BenchResults.parse_from_file(file) for file in args.result
    )
    return 0 if success else EXIT_CODE_VALIDATION


if __name__ == "__main__":
    common.run_main(main)
