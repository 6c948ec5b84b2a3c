"""Trace-driven SMT/SMP performance model."""

from .cache import CacheLevel, CacheView, build_views
from .config import CacheLevelConfig, MachineConfig, fixed_latency, load_config
from .engine import (
    SimResult,
    UopStream,
    expand_uops,
    simulate_corun_smp,
    simulate_corun_smt,
    simulate_solo,
)
from .estimate import DEFAULT_O_SMP, DEFAULT_O_SMT, SpeedupEstimate, estimate_speedup, split_tasks

__all__ = [
    "CacheLevel", "CacheLevelConfig", "CacheView", "DEFAULT_O_SMP", "DEFAULT_O_SMT",
    "MachineConfig", "SimResult", "SpeedupEstimate", "UopStream", "build_views",
    "estimate_speedup", "expand_uops", "fixed_latency", "load_config",
    "simulate_corun_smp", "simulate_corun_smt", "simulate_solo", "split_tasks",
]
