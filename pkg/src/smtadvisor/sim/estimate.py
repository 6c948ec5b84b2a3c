"""Sequential vs. two-thread (SMT / SMP) cycle estimates for an annotated region."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..errors import EmptyRegion, InvalidParam
from ..trace_model import ProgramTable, RegionTrace, TaskInstance
from .config import MachineConfig
from .engine import (
    SimResult,
    UopStream,
    expand_uops,
    simulate_corun_smp,
    simulate_corun_smt,
    simulate_solo,
    smp_caches,
    smt_caches,
)

DEFAULT_O_SMT = 200
DEFAULT_O_SMP = 2000
PARTITIONS = ("block", "cyclic")
INVOCATIONS = ("region", "step")


@dataclass
class SpeedupEstimate:
    region_id: int
    task_count: int
    partition: str
    invocation: str
    o_smt: int
    o_smp: int
    seq: SimResult
    smt: SimResult | None
    smp: SimResult | None
    invocations: int

    @property
    def applicable(self) -> bool:
        return self.smt is not None

    @property
    def seq_cycles(self) -> int:
        return self.seq.cycles

    @property
    def smt_cycles(self) -> int | None:
        return None if self.smt is None else self.o_smt * self.invocations + self.smt.cycles

    @property
    def smp_cycles(self) -> int | None:
        return None if self.smp is None else self.o_smp * self.invocations + self.smp.cycles

    @property
    def gain_smt(self) -> float | None:
        return _gain(self.seq_cycles, self.smt_cycles)

    @property
    def gain_smp(self) -> float | None:
        return _gain(self.seq_cycles, self.smp_cycles)

    def summary(self) -> dict:
        return {
            "seq_cycles": self.seq_cycles,
            "smt_cycles": self.smt_cycles,
            "smp_cycles": self.smp_cycles,
            "gain_smt": self.gain_smt,
            "gain_smp": self.gain_smp,
        }

    def to_dict(self) -> dict:
        return {
            "region_id": self.region_id,
            "task_count": self.task_count,
            "partition": self.partition,
            "invocation": self.invocation,
            "invocations": self.invocations,
            "o_smt": self.o_smt,
            "o_smp": self.o_smp,
            "applicable": self.applicable,
            **self.summary(),
            "seq": self.seq.to_dict(),
            "smt": None if self.smt is None else self.smt.to_dict(),
            "smp": None if self.smp is None else self.smp.to_dict(),
        }


def _gain(seq: int, par: int | None) -> float | None:
    if par is None:
        return None
    if par == 0:
        return 0.0
    return seq / par - 1.0


def split_tasks(
    tasks: Sequence[TaskInstance], partition: str
) -> tuple[list[TaskInstance], list[TaskInstance]]:
    if partition == "block":
        half = (len(tasks) + 1) // 2
        return list(tasks[:half]), list(tasks[half:])
    if partition == "cyclic":
        return list(tasks[0::2]), list(tasks[1::2])
    raise InvalidParam(f"unknown partition policy {partition!r}")


def estimate_speedup(
    region: RegionTrace,
    table: ProgramTable,
    cfg: MachineConfig,
    o_smt: int = DEFAULT_O_SMT,
    o_smp: int = DEFAULT_O_SMP,
    partition: str = "block",
    invocation: str = "region",
    seq: SimResult | None = None,
) -> SpeedupEstimate:
    """Simulate the region sequentially and split across two hardware threads.

    ``invocation="region"`` runs each half as one stream and charges the
    scheduling overhead once. ``invocation="step"`` models fork-join per
    step: step ``k`` runs the k-th task of each half concurrently, the
    threads join, and the overhead is charged every step; cache state
    persists across steps.
    """
    if not region.tasks:
        raise EmptyRegion(f"region {region.region_id} has no tasks")
    if partition not in PARTITIONS:
        raise InvalidParam(f"unknown partition policy {partition!r}")
    if invocation not in INVOCATIONS:
        raise InvalidParam(f"unknown invocation model {invocation!r}")
    if o_smt < 0 or o_smp < 0:
        raise InvalidParam("scheduling overheads must be non-negative")
    if seq is None:
        seq = simulate_solo(expand_uops(region.tasks, table), cfg)
    n = len(region.tasks)
    if n < 2:
        return SpeedupEstimate(
            region.region_id, n, partition, invocation, o_smt, o_smp, seq, None, None, 0
        )
    first, second = split_tasks(region.tasks, partition)
    if invocation == "region":
        a, b = expand_uops(first, table), expand_uops(second, table)
        smt = simulate_corun_smt(a, b, cfg)
        smp = simulate_corun_smp(a, b, cfg)
        steps = 1
    else:
        smt_views, smp_views = smt_caches(cfg), smp_caches(cfg)
        smt_parts, smp_parts = [], []
        for k in range(len(first)):
            a = expand_uops(first[k : k + 1], table)
            b = expand_uops(second[k : k + 1], table) if k < len(second) else UopStream()
            smt_parts.append(simulate_corun_smt(a, b, cfg, smt_views))
            smp_parts.append(simulate_corun_smp(a, b, cfg, smp_views))
        smt, smp = SimResult.combine(smt_parts), SimResult.combine(smp_parts)
        steps = len(first)
    return SpeedupEstimate(
        region.region_id, n, partition, invocation, o_smt, o_smp, seq, smt, smp, steps
    )
