import io
import os
import pytest
import sys

from pathlib import Path
from typing import Any

from ktoolbox import common

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import dstbase  # noqa: E402

from dstbase import BenchResults  # noqa: E402
from dstbase import RunRecord  # noqa: E402


def _record(**kwargs: Any) -> RunRecord:
    args: dict[str, Any] = {
        "instance": "grid-n36-k4-r1-s0",
        "seed": 0,
        "epsilon": "1/2",
        "k": 4,
        "num_roots": 1,
        "n": 36,
        "m": 70,
        "approx_cost": 30,
        "oracle_cost": 20,
        "ratio": 1.5,
        "recursion_calls": 40,
        "ell": 2,
        "o": 3,
        "wall_time": 0.25,
        "bound": 19.5,
        "bound_satisfied": True,
    }
    args.update(kwargs)
    return RunRecord(**args)


def test_run_record() -> None:
    r = _record()
    assert r.call_budget == 512
    assert r.calls_within_budget
    assert r.eval_success
    assert r.eval_msg == ""

    r = _record(recursion_calls=600)
    assert not r.calls_within_budget
    assert not r.eval_success
    assert r.eval_msg == "600 recursion calls exceed the budget 512"

    r = _record(ratio=25.0, bound_satisfied=False, separator_violations=2)
    assert not r.eval_success
    assert r.eval_msg == (
        "ratio 25.0 exceeds the bound 19.50; 2 separator checks failed"
    )

    r = _record(oracle_cost=None, ratio=None, bound_satisfied=None)
    assert r.eval_success


def test_csv_row() -> None:
    header = RunRecord.csv_header()
    assert header[:3] == ["instance", "seed", "epsilon"]
    assert header[-1] == "separator_violations"
    assert "bound_satisfied" in header

    row = _record(oracle_cost=None, ratio=None, bound_satisfied=None).csv_row()
    assert len(row) == len(header)
    values = dict(zip(header, row))
    assert values["instance"] == "grid-n36-k4-r1-s0"
    assert values["oracle_cost"] == ""
    assert values["ratio"] == ""
    assert values["wall_time"] == "0.250000"
    assert values["bound"] == "19.500000"
    assert values["separator_violations"] == "0"

    values = dict(zip(header, _record().csv_row()))
    assert values["bound_satisfied"] == common.bool_to_str(True)
    assert values["ratio"] == "1.500000"


def test_bench_results_json(tmp_path: Path) -> None:
    results = BenchResults(lst=(_record(), _record(instance="b", seed=None)))
    data = results.serialize()
    assert list(data) == ["dstkit-runs"]
    assert BenchResults.parse(data).lst == results.lst

    path = tmp_path / "runs.json"
    results.serialize_to_file(str(path))
    parsed = BenchResults.parse_from_file(path)
    assert parsed.lst == results.lst
    assert parsed.filename == str(path)
    assert len(parsed) == 2


@pytest.mark.parametrize(
    "data",
    [
        None,
        [],
        {},
        {"dstkit-runs": {}},
        {"dstkit-runs": [], "extra": 1},
        {"dstkit-runs": [{"instance": "x"}]},
    ],
)
def test_bench_results_invalid(data: Any) -> None:
    with pytest.raises(RuntimeError):
        BenchResults.parse(data)


def test_bench_results_invalid_file(tmp_path: Path) -> None:
    with pytest.raises(RuntimeError):
        BenchResults.parse_from_file(tmp_path / "missing.json")
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(RuntimeError):
        BenchResults.parse_from_file(path)


def test_bench_results_csv() -> None:
    results = BenchResults(lst=(_record(), _record(instance="b")))
    f = io.StringIO()
    results.serialize_to_csv(f)
    lines = f.getvalue().splitlines()
    assert len(lines) == 3
    assert lines[0] == ",".join(RunRecord.csv_header())
    assert lines[1].startswith("grid-n36-k4-r1-s0,0,1/2,4,1,36,70,30,20,")
    assert lines[2].startswith("b,")


def test_summary() -> None:
    results = BenchResults(
        lst=(
            _record(),
            _record(ratio=1.0),
            _record(oracle_cost=None, ratio=None, bound_satisfied=None),
            _record(recursion_calls=1000),
        )
    )
    good, bad = results.group_by_success()
    assert len(good) == 3
    assert len(bad) == 1

    summary = results.get_summary()
    assert not summary.result
    assert summary.count == 4
    assert summary.num_with_oracle == 3
    assert summary.max_ratio == 1.5
    assert summary.call_budget_violations == 1
    assert summary.lines() == [
        "instances: 4 (3 with oracle)",
        "max ratio: 1.5000",
        "mean ratio: 1.3333",
        "bound violations: 0",
        "call budget violations: 1",
        "separator violations: 0",
    ]

    summary = BenchResults(lst=()).get_summary()
    assert summary.result
    assert summary.lines()[1] == "max ratio: n/a"


def test_get_dstkit_threads(monkeypatch: pytest.MonkeyPatch) -> None:
    try:
        monkeypatch.setenv(dstbase.ENV_DSTKIT_THREADS, "3")
        dstbase.get_dstkit_threads.cache_clear()
        assert dstbase.get_dstkit_threads() == 3

        monkeypatch.setenv(dstbase.ENV_DSTKIT_THREADS, "zero")
        dstbase.get_dstkit_threads.cache_clear()
        assert dstbase.get_dstkit_threads() == (os.cpu_count() or 1)

        monkeypatch.delenv(dstbase.ENV_DSTKIT_THREADS)
        dstbase.get_dstkit_threads.cache_clear()
        assert dstbase.get_dstkit_threads() >= 1
    finally:
        dstbase.get_dstkit_threads.cache_clear()


def test_get_dstkit_check_embedding(monkeypatch: pytest.MonkeyPatch) -> None:
    try:
        monkeypatch.setenv(dstbase.ENV_DSTKIT_CHECK_EMBEDDING, "Yes")
        dstbase.get_dstkit_check_embedding.cache_clear()
        assert dstbase.get_dstkit_check_embedding()

        monkeypatch.setenv(dstbase.ENV_DSTKIT_CHECK_EMBEDDING, "0")
        dstbase.get_dstkit_check_embedding.cache_clear()
        assert not dstbase.get_dstkit_check_embedding()
    finally:
        dstbase.get_dstkit_check_embedding.cache_clear()


def test_template() -> None:
    assert dstbase.get_template("embedding.svg.j2").endswith(
        "/templates/embedding.svg.j2"
    )
    with pytest.raises(ValueError):
        dstbase.get_template("missing.j2")
