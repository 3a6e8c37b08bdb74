"""Throughput benchmarks for the hot kernels."""

from __future__ import annotations

import time
from collections.abc import Callable

from ...utils.exceptions import ConfigurationError
from ...utils.logging import get_logger
from ..dynamics import ergodic_sum, make_rotation
from ..engine import RunContext
from ..maps import get_map
from ..models import BenchReport
from ..partition import build_partition
from ..probes import weyl_probe
from .handlers import command

logger = get_logger(__name__)


def _ergodic_sum(size: int, seed: int) -> int:
    ergodic_sum(get_map("psi", 1), make_rotation("golden"), (0.1,), size)
    return size


def _arrangement(size: int, seed: int) -> int:
    return build_partition(make_rotation("sqrt(2), e"), size).card


def _weyl(size: int, seed: int) -> int:
    alpha = make_rotation("sqrt(2)-1, sqrt(3)-1")
    weyl_probe(get_map("delta0"), alpha, ["sqrt(5)-2"], [((1, 0), (1,))], size, seed=seed)
    return size


KERNELS: dict[str, Callable[[int, int], int]] = {
    "ergodic-sum": _ergodic_sum,
    "arrangement": _arrangement,
    "weyl": _weyl,
}


def run_bench(kernel: str, size: int, seed: int = 0) -> BenchReport:
    """Time one kernel at one size; size 0 gives an empty report.

    Raises:
        ConfigurationError: If the kernel is unknown
    """
    if kernel not in KERNELS:
        raise ConfigurationError(
            f"Unknown kernel {kernel!r}; available: {', '.join(sorted(KERNELS))}"
        )
    if size < 0:
        raise ValueError("Size must be non-negative")
    if size == 0:
        return BenchReport(kernel=kernel, size=0, wall_seconds=0.0, operations=0)
    start = time.perf_counter()
    operations = KERNELS[kernel](size, seed)
    elapsed = time.perf_counter() - start
    logger.info(f"bench {kernel} size={size}: {elapsed:.3f} s")
    return BenchReport(kernel=kernel, size=size, wall_seconds=elapsed, operations=operations)


@command("bench")
def run_bench_command(ctx: RunContext) -> None:
    kernel = ctx.require("kernel")
    report = run_bench(kernel, int(ctx.param("size", 0)), ctx.seed)
    ctx.writer.add_json(f"bench_{kernel}.json", report.to_dict())
    ctx.summary.update(report.to_dict())


__all__ = ["KERNELS", "run_bench"]
