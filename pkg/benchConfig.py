import json
import logging
import os
import shlex
import yaml

from collections.abc import Callable
from collections.abc import Iterator
from dataclasses import dataclass
from typing import Any
from typing import Optional

from ktoolbox import common
from ktoolbox.common import StructParseBase
from ktoolbox.common import StructParseBaseNamed
from ktoolbox.common import StructParseParseContext
from ktoolbox.common import strict_dataclass

import dstSolver
import exactOracle
import generator

from dstbase import DstError
from dstbase import GeneratorStyle
from instanceFile import InstanceFile


logger = common.ExtendedLogger("dstkit." + __name__)


def _construct_int_list(
    *,
    check: Callable[[int], bool],
    description: str,
    default: Optional[tuple[int, ...]] = None,
) -> Callable[[StructParseParseContext], tuple[int, ...]]:
    def _construct(pctx2: StructParseParseContext) -> tuple[int, ...]:
        arg = pctx2.arg
        if arg is None:
            if default is None:
                raise pctx2.value_error(f"mandatory parameter expects {description}")
            return default
        if isinstance(arg, bool):
            raise pctx2.value_error(f"expects {description} but got {repr(arg)}")
        if isinstance(arg, int):
            lst = [arg]
        elif isinstance(arg, list) and arg:
            lst = arg
        else:
            raise pctx2.value_error(
                f"expects {description} or a non-empty list of them but got {repr(arg)}"
            )
        for val in lst:
            if isinstance(val, bool) or not isinstance(val, int) or not check(val):
                raise pctx2.value_error(f"expects {description} but got {repr(val)}")
        return tuple(lst)

    return _construct


@strict_dataclass
@dataclass(frozen=True, kw_only=True)
class InstanceSpec:
    """Parameters of one generated benchmark instance."""

    suite: str
    seed: int
    n: int
    k: int
    num_roots: int
    cost_range: tuple[int, int]
    style: GeneratorStyle

    def generate(self) -> InstanceFile:
        return generator.generate(
            self.seed,
            self.n,
            self.k,
            self.num_roots,
            self.cost_range,
            self.style,
            name=f"{self.suite}-{self.seed}",
        )


@strict_dataclass
@dataclass(frozen=True, kw_only=True)
class ConfSuite(StructParseBaseNamed):
    count: int
    seed: int
    n: tuple[int, ...]
    k: tuple[int, ...]
    roots: tuple[int, ...]
    cost_range: tuple[int, int]
    style: GeneratorStyle

    @property
    def config(self) -> "ConfBench":
        return self._owner_reference.get(ConfBench)

    def serialize(self) -> dict[str, Any]:
        return {
            **super().serialize(),
            "count": self.count,
            "seed": self.seed,
            "n": list(self.n),
            "k": list(self.k),
            "roots": list(self.roots),
            "cost_range": f"{self.cost_range[0]}-{self.cost_range[1]}",
            "style": self.style.name,
        }

    def instances(self) -> Iterator[InstanceSpec]:
        # List-valued parameters are cycled independently.
        for i in range(self.count):
            yield InstanceSpec(
                suite=self.name,
                seed=self.seed + i,
                n=self.n[i % len(self.n)],
                k=self.k[i % len(self.k)],
                num_roots=self.roots[i % len(self.roots)],
                cost_range=self.cost_range,
                style=self.style,
            )

    @staticmethod
    def parse(pctx: StructParseParseContext) -> "ConfSuite":
        with pctx.with_strdict() as varg:

            name = common.structparse_pop_str_name(
                varg.for_name(),
                default=f"suite-{pctx.yamlidx+1}",
            )

            count = common.structparse_pop_int(
                varg.for_key("count"),
                default=1,
                check=lambda val: val > 0,
                description="a positive number of instances",
            )

            seed = common.structparse_pop_int(
                varg.for_key("seed"),
                default=0,
                check=lambda val: val >= 0,
            )

            n = common.structparse_pop_obj(
                varg.for_key("n"),
                construct=_construct_int_list(
                    check=lambda val: val > 0,
                    description="a positive vertex count",
                ),
                construct_default=True,
            )

            k = common.structparse_pop_obj(
                varg.for_key("k"),
                construct=_construct_int_list(
                    check=lambda val: val >= 0,
                    description="a terminal count",
                ),
                construct_default=True,
            )

            roots = common.structparse_pop_obj(
                varg.for_key("roots"),
                construct=_construct_int_list(
                    check=lambda val: val > 0,
                    description="a positive root count",
                    default=(1,),
                ),
                construct_default=True,
            )

            def _construct_cost_range(pctx2: StructParseParseContext) -> tuple[int, int]:
                arg = pctx2.arg
                if arg is None:
                    return generator.DEFAULT_COST_RANGE
                try:
                    return generator.parse_cost_range(str(arg))
                except DstError as e:
                    raise pctx2.value_error(str(e)) from None

            cost_range = common.structparse_pop_obj(
                varg.for_key("cost_range"),
                construct=_construct_cost_range,
                construct_default=True,
            )

            style = common.structparse_pop_enum(
                varg.for_key("style"),
                enum_type=GeneratorStyle,
                default=GeneratorStyle.GRID,
            )

        for i in range(count):
            nn = n[i % len(n)]
            kk = k[i % len(k)]
            rr = roots[i % len(roots)]
            if nn < kk + rr:
                raise pctx.value_error(
                    f"instance {i} has n={nn} smaller than k={kk} plus roots={rr}",
                    key="n",
                )

        return ConfSuite(
            yamlidx=pctx.yamlidx,
            yamlpath=pctx.yamlpath,
            name=name,
            count=count,
            seed=seed,
            n=n,
            k=k,
            roots=roots,
            cost_range=cost_range,
            style=style,
        )


@strict_dataclass
@dataclass(frozen=True, kw_only=True)
class ConfBench(StructParseBase):
    bench: tuple[ConfSuite, ...]
    epsilon: str
    oracle_cap: int
    oracle: bool
    prune: bool

    def __post_init__(self) -> None:
        for s in self.bench:
            s._owner_reference.init(self)

    @property
    def bench_config(self) -> "BenchConfig":
        return self._owner_reference.get(BenchConfig)

    def serialize(self) -> dict[str, Any]:
        return {
            "bench": [s.serialize() for s in self.bench],
            "epsilon": self.epsilon,
            "oracle_cap": self.oracle_cap,
            "oracle": self.oracle,
            "prune": self.prune,
        }

    def instances(self) -> Iterator[InstanceSpec]:
        for s in self.bench:
            yield from s.instances()

    @staticmethod
    def parse(full_config: Any) -> "ConfBench":
        pctx = StructParseParseContext(full_config)
        with pctx.with_strdict() as varg:

            bench = common.structparse_pop_objlist(
                varg.for_key("bench"),
                construct=ConfSuite.parse,
                allow_empty=False,
            )

            epsilon = common.structparse_pop_str(
                varg.for_key("epsilon"),
                default=str(dstSolver.DEFAULT_EPSILON),
            )

            oracle_cap = common.structparse_pop_int(
                varg.for_key("oracle_cap"),
                default=exactOracle.DEFAULT_ORACLE_CAP,
                check=lambda val: val >= 0,
            )

            oracle = common.structparse_pop_bool(
                varg.for_key("oracle"),
                default=True,
            )

            prune = common.structparse_pop_bool(
                varg.for_key("prune"),
                default=False,
            )

        try:
            eps = dstSolver.parse_epsilon(epsilon)
        except DstError as e:
            raise pctx.value_error(str(e), key="epsilon") from None

        names = [s.name for s in bench]
        for name in names:
            if names.count(name) > 1:
                raise pctx.value_error(f"duplicate suite name {repr(name)}", key="bench")

        return ConfBench(
            yamlidx=pctx.yamlidx,
            yamlpath=pctx.yamlpath,
            bench=bench,
            epsilon=str(eps),
            oracle_cap=oracle_cap,
            oracle=oracle,
            prune=prune,
        )


class BenchConfig:
    full_config: dict[str, Any]
    config: ConfBench
    configpath: Optional[str]

    def __init__(
        self,
        *,
        full_config: Optional[dict[str, Any]] = None,
        config_path: Optional[str] = None,
    ) -> None:
        config_path = common.path_norm(config_path, cwd=os.getcwd())

        if config_path is not None:
            if full_config is not None:
                raise ValueError(
                    "Must either specify a full_config or a config_path argument"
                )
            try:
                with open(config_path, "r") as f:
                    full_config = yaml.safe_load(f)
            except Exception as e:
                raise ValueError(
                    f"Failure to read YAML configuration {repr(config_path)}: {e}"
                )

        if not isinstance(full_config, dict):
            raise ValueError(
                f"invalid config is not a dictionary but {type(full_config)}"
            )

        try:
            config = ConfBench.parse(full_config)
        except Exception as e:
            p = (f" {repr(config_path)}") if config_path else ""
            raise ValueError(f"invalid configuration{p}: {e}")

        config._owner_reference.init(self)

        self.full_config = full_config
        self.config = config
        self.configpath = config_path

    def instances(self) -> list[InstanceSpec]:
        return list(self.config.instances())

    def log_config(self, *, logger: logging.Logger = logger) -> None:
        if self.configpath is not None:
            logger.info(f"config: BENCH_CONFIG={shlex.quote(self.configpath)}")
        s = json.dumps(self.full_config["bench"])
        logger.info(f"config: {s}")
        logger.debug(f"config-full: {self.config.serialize_json()}")


def is_bench_config_file(filename: str) -> bool:
    return filename.endswith((".yaml", ".yml"))
