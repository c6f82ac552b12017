import os
import sys

from pathlib import Path

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import benchmark  # noqa: E402
import generator  # noqa: E402
import planarGraph  # noqa: E402

from benchConfig import InstanceSpec  # noqa: E402
from benchmark import BenchJob  # noqa: E402
from benchmark import BenchOptions  # noqa: E402
from dstbase import GeneratorStyle  # noqa: E402
from instanceFile import InstanceFile  # noqa: E402


def _hub() -> InstanceFile:
    # The hub 1 costs 9 and fans out to both terminals; direct arcs cost 20.
    g = planarGraph.build_from_coordinates(
        {0: (0, 0), 1: (0, 1), 2: (-1, 2), 3: (1, 2)},
        [
            (0, 0, 1, 1),
            (1, 1, 2, 1),
            (2, 1, 3, 1),
            (3, 0, 2, 20),
            (4, 0, 3, 20),
        ],
    )
    return InstanceFile.from_graph(g, [0], [2, 3], name="hub", node_costs={1: 9})


def _spec(seed: int) -> InstanceSpec:
    return InstanceSpec(
        suite="unit",
        seed=seed,
        n=20,
        k=3,
        num_roots=1,
        cost_range=generator.DEFAULT_COST_RANGE,
        style=GeneratorStyle.GRID,
    )


def test_run_instance() -> None:
    inst_file = _spec(1).generate()
    run = benchmark.run_instance(inst_file, BenchOptions())
    assert run.instance == "unit-1"
    assert run.seed == 1
    assert run.k == 3
    assert run.n == 20
    assert run.oracle_cost is not None
    assert run.approx_cost >= run.oracle_cost
    assert run.bound_satisfied
    assert run.eval_success

    run = benchmark.run_instance(inst_file, BenchOptions(oracle=False))
    assert run.oracle_cost is None
    assert run.ratio is None

    run = benchmark.run_instance(inst_file, BenchOptions(oracle_cap=2))
    assert run.oracle_cost is None


def test_node_costs() -> None:
    inst_file = _hub()
    assert inst_file.has_node_costs

    optimum = benchmark.exact_instance(inst_file, cap=12)
    assert optimum.cost == 12
    assert optimum.nodes == (1,)

    solution, _ = benchmark.solve_instance(inst_file, epsilon="1/2")
    assert solution.cost == inst_file.solution_cost(solution.edges)
    assert solution.cost >= 12

    run = benchmark.run_instance(inst_file, BenchOptions())
    assert run.oracle_cost == 12


def test_run_benchmark(tmp_path: Path) -> None:
    inst_file = _spec(3).generate()
    inst_file.write(tmp_path / "unit-3.dst")
    jobs = [BenchJob(spec=_spec(2)), BenchJob(path=str(tmp_path / "unit-3.dst"))]

    results = benchmark.run_benchmark(jobs, BenchOptions(), threads=1)
    assert [r.instance for r in results] == ["unit-2", "unit-3"]
    assert results.get_summary().result

    assert len(benchmark.run_benchmark([], BenchOptions(), threads=4)) == 0
