"""Parametric task-granularity families and their gain curves."""

from __future__ import annotations

from typing import Any, Sequence

from ..errors import InvalidParam
from ..sim.config import MachineConfig
from ..sim.estimate import DEFAULT_O_SMP, DEFAULT_O_SMT, estimate_speedup
from ..trace_model import slice_region
from .base import Builder, GeneratedCase, fadd, fmul, ld

FAMILIES = ("SWEEP_COMPUTE", "SWEEP_MEMORY")
DEFAULT_TOTAL = 32768
# lines per working set; two sets share one L1 under SMT and partly thrash it
DEFAULT_POOL_LINES = 360

SWEEP_PARAMS: dict[str, dict[str, tuple[Any, Any, Any]]] = {
    "SWEEP_COMPUTE": {
        "granularity": (64, 64, 1),
        "total": (DEFAULT_TOTAL, DEFAULT_TOTAL, 1),
    },
    "SWEEP_MEMORY": {
        "granularity": (64, 64, 1),
        "total": (DEFAULT_TOTAL, DEFAULT_TOTAL, 1),
        "pool_lines": (DEFAULT_POOL_LINES, DEFAULT_POOL_LINES, 1),
    },
}


def sweep_compute(b: Builder, p: dict) -> None:
    g = p["granularity"]
    tasks = max(2, p["total"] // g)
    # eight independent accumulator chains keep the FP port busy every cycle
    wide = b.block([fadd(8), fmul(8), fadd(8), fmul(8), fadd(8), fmul(8), fadd(8), fmul(8)])
    tail = b.block([fadd(8)])
    rid = b.region("particle_motion_update", wide, "robotics/pfl_motion.c", (40, 58))
    for _ in range(tasks):
        b.enter(rid)
        for _ in range(g // 8):
            b.exec(wide)
        for _ in range(g % 8):
            b.exec(tail)
        b.leave(rid)


def sweep_memory(b: Builder, p: dict) -> None:
    g, n = p["granularity"], p["pool_lines"]
    tasks = max(2, p["total"] // g)
    half = (tasks + 1) // 2
    # one working set per community; the two halves of the region walk different ones
    pools = [b.pool(f"component_{c}", n, 64, spread=4) for c in range(2)]
    orders = []
    for _ in range(2):
        order = list(range(n))
        b.rng.shuffle(order)
        orders.append(order)
    hop = b.block([ld(8, 1)])
    rid = b.region("label_propagation_step", hop, "graph/cc_hook.c", (73, 91))
    for t in range(tasks):
        c = 0 if t < half else 1
        pos = ((t if c == 0 else t - half) * g) % n
        b.enter(rid)
        for k in range(g):
            b.exec(hop, pools[c][orders[c][(pos + k) % n]])
        b.leave(rid)


def sweep_granularity(
    family: str,
    granularities: Sequence[int],
    seed: int = 42,
    total: int = DEFAULT_TOTAL,
    params: dict[str, Any] | None = None,
) -> list[GeneratedCase]:
    from . import KernelSpec, generate_kernel

    if family not in FAMILIES:
        raise InvalidParam(f"unknown sweep family {family!r}")
    if not granularities:
        raise InvalidParam("granularities must be non-empty")
    cases = []
    for g in granularities:
        if isinstance(g, bool) or not isinstance(g, int) or g < 1:
            raise InvalidParam(f"granularity {g!r} must be an integer >= 1")
        extra = dict(params or {}, granularity=g, total=total)
        cases.append(generate_kernel(KernelSpec(family, "desk", extra, seed)))
    return cases


def evaluate_case(
    case: GeneratedCase,
    cfg: MachineConfig,
    o_smt: int = DEFAULT_O_SMT,
    o_smp: int = DEFAULT_O_SMP,
) -> dict[str, Any]:
    """One gain-curve row; each step forks both threads and joins them."""
    region = slice_region(case.trace, 0)
    est = estimate_speedup(region, case.table, cfg, o_smt, o_smp, "block", "step")
    return {
        "granularity": case.manifest["params"]["granularity"],
        "tasks": est.task_count,
        "steps": est.invocations,
        "seq_cycles": est.seq_cycles,
        "smt_cycles": est.smt_cycles,
        "smp_cycles": est.smp_cycles,
        "gain_smt": est.gain_smt,
        "gain_smp": est.gain_smp,
        "solo_port_utilization": est.seq.port_utilization,
    }


def sweep_document(
    family: str,
    cases: Sequence[GeneratedCase],
    cfg: MachineConfig,
    o_smt: int = DEFAULT_O_SMT,
    o_smp: int = DEFAULT_O_SMP,
) -> dict[str, Any]:
    rows = [evaluate_case(c, cfg, o_smt, o_smp) for c in cases]
    return {
        "family": family,
        "invocation": "step",
        "o_smt": o_smt,
        "o_smp": o_smp,
        "seed": cases[0].manifest["seed"] if cases else None,
        "rows": rows,
    }
