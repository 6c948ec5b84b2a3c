"""Kernel characterization, the per-region decision gate, and the advice report."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from typing import Any, Optional, Sequence

from . import __version__
from .depcheck import ConflictReport, StaticCheckResult
from .errors import EmptyRegion, InvalidConfig
from .sim.config import MachineConfig
from .sim.engine import SimResult, expand_uops, simulate_solo
from .sim.estimate import SpeedupEstimate
from .trace_model import ProgramTable, RegionTrace

ACCEPT_SMT = "ACCEPT_SMT"
ACCEPT_SMP = "ACCEPT_SMP"
REJECT = "REJECT"

STATIC_UNSAFE = "STATIC_UNSAFE"
CONFLICTS = "CONFLICTS"
TOO_FINE_GRAINED = "TOO_FINE_GRAINED"
NEGATIVE_GAIN = "NEGATIVE_GAIN"

COMPUTE_BOUND = "compute_bound"
MEMORY_BOUND = "memory_bound"
MIXED = "mixed"


@dataclass(frozen=True)
class GateThresholds:
    min_gain: float = 0.02
    min_task_uops: float = 50
    min_work_ratio: float = 20
    mpki_threshold: float = 5.0
    util_threshold: float = 0.90

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
                raise InvalidConfig(f"threshold {f.name} must be a non-negative number")
        if self.min_gain >= 1:
            raise InvalidConfig("min_gain must be below 1")

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


def load_thresholds(text: str | None) -> GateThresholds:
    if text is None:
        return GateThresholds()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"thresholds are not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InvalidConfig("thresholds must be a JSON object")
    names = {f.name for f in fields(GateThresholds)}
    unknown = set(doc) - names
    if unknown:
        raise InvalidConfig(f"unknown threshold fields: {', '.join(sorted(unknown))}")
    return GateThresholds(**doc)


@dataclass(frozen=True)
class KernelProfile:
    task_count: int
    mean_uops_per_task: float
    mean_cycles_per_task: float
    mpki: float
    port_utilization: float
    classification: str

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def classify(mpki: float, port_utilization: float, thresholds: GateThresholds) -> str:
    if mpki >= thresholds.mpki_threshold:
        return MEMORY_BOUND
    if port_utilization >= thresholds.util_threshold:
        return COMPUTE_BOUND
    return MIXED


def profile_from_solo(task_count: int, solo: SimResult, thresholds: GateThresholds) -> KernelProfile:
    uops = solo.uops_executed
    llc_misses = solo.memory_accesses[0] if solo.memory_accesses else 0
    mpki = 1000.0 * llc_misses / uops if uops else 0.0
    util = solo.port_utilization
    return KernelProfile(
        task_count=task_count,
        mean_uops_per_task=uops / task_count,
        mean_cycles_per_task=solo.cycles / task_count,
        mpki=mpki,
        port_utilization=util,
        classification=classify(mpki, util, thresholds),
    )


def characterize(
    region: RegionTrace,
    table: ProgramTable,
    cfg: MachineConfig,
    thresholds: GateThresholds = GateThresholds(),
    solo: SimResult | None = None,
) -> KernelProfile:
    if not region.tasks:
        raise EmptyRegion(f"region {region.region_id} has no tasks")
    if solo is None:
        solo = simulate_solo(expand_uops(region.tasks, table), cfg)
    return profile_from_solo(len(region.tasks), solo, thresholds)


@dataclass(frozen=True)
class RegionVerdict:
    region_id: int
    name: str
    status: str
    reason: Optional[str]
    static: dict[str, Any]
    conflicts: dict[str, Any]
    gains: Optional[dict[str, Any]] = None
    kernel: Optional[dict[str, Any]] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "region_id": self.region_id,
            "name": self.name,
            "status": self.status,
            "reason": self.reason,
            "static": self.static,
            "conflicts": self.conflicts,
            "gains": self.gains,
            "kernel": self.kernel,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "RegionVerdict":
        return cls(**doc)


def too_fine_grained(
    estimate: SpeedupEstimate, profile: KernelProfile, thresholds: GateThresholds
) -> bool:
    if profile.mean_uops_per_task < thresholds.min_task_uops:
        return True
    if estimate.o_smt == 0:
        return False
    return (estimate.seq_cycles / 2) / estimate.o_smt < thresholds.min_work_ratio


def decide(
    statics: StaticCheckResult,
    conflicts: ConflictReport,
    estimate: SpeedupEstimate | None,
    profile: KernelProfile | None,
    thresholds: GateThresholds = GateThresholds(),
    name: str = "",
) -> RegionVerdict:
    """Apply the gate rules in strict priority order; exactly one fires.

    Estimate and profile may be omitted only when an earlier rule rejects.
    """
    static_doc = {"safe": statics.safe, "flags": list(statics.flags)}
    conflict_doc = {
        "conflict_free": conflicts.conflict_free,
        "truncated": conflicts.truncated,
        "count": len(conflicts.conflicts),
    }
    base = dict(region_id=statics.region_id, name=name, static=static_doc, conflicts=conflict_doc)
    if not statics.safe:
        return RegionVerdict(status=REJECT, reason=STATIC_UNSAFE, **base)
    if not conflicts.conflict_free:
        return RegionVerdict(status=REJECT, reason=CONFLICTS, **base)
    if estimate is None or profile is None:
        raise ValueError("estimate and profile are required once static and dynamic checks pass")
    base["gains"] = estimate.summary()
    base["kernel"] = profile.to_dict()
    if too_fine_grained(estimate, profile, thresholds):
        return RegionVerdict(status=REJECT, reason=TOO_FINE_GRAINED, **base)
    if not estimate.applicable:
        return RegionVerdict(status=REJECT, reason=NEGATIVE_GAIN, **base)
    g_smt, g_smp = estimate.gain_smt, estimate.gain_smp
    if max(g_smt, g_smp) < thresholds.min_gain:
        return RegionVerdict(status=REJECT, reason=NEGATIVE_GAIN, **base)
    status = ACCEPT_SMT if g_smt >= g_smp else ACCEPT_SMP
    return RegionVerdict(status=status, reason=None, **base)


@dataclass(frozen=True)
class AdviceReport:
    inputs: dict[str, Any]
    thresholds: dict[str, float]
    simulation: dict[str, Any]
    verdicts: tuple[RegionVerdict, ...] = ()
    hotspots: Optional[dict[str, Any]] = None
    tool: str = "advise"
    version: str = __version__

    def to_dict(self) -> dict[str, Any]:
        return {
            "tool": self.tool,
            "version": self.version,
            "inputs": self.inputs,
            "thresholds": self.thresholds,
            "simulation": self.simulation,
            "hotspots": self.hotspots,
            "summary": _summary(self.verdicts),
            "verdicts": [v.to_dict() for v in self.verdicts],
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "AdviceReport":
        return cls(
            inputs=doc["inputs"],
            thresholds=doc["thresholds"],
            simulation=doc["simulation"],
            verdicts=tuple(RegionVerdict.from_dict(v) for v in doc["verdicts"]),
            hotspots=doc.get("hotspots"),
            tool=doc["tool"],
            version=doc["version"],
        )


def _summary(verdicts: Sequence[RegionVerdict]) -> dict[str, Any]:
    counts: dict[str, int] = {}
    for v in verdicts:
        key = v.status if v.reason is None else f"{v.status}/{v.reason}"
        counts[key] = counts.get(key, 0) + 1
    return {"regions": len(verdicts), "by_outcome": dict(sorted(counts.items()))}


def generate_report(
    verdicts: Sequence[RegionVerdict],
    hotspots: dict[str, Any] | None,
    inputs: dict[str, Any],
    thresholds: GateThresholds,
    simulation: dict[str, Any] | None = None,
) -> AdviceReport:
    ordered = tuple(sorted(verdicts, key=lambda v: v.region_id))
    return AdviceReport(
        inputs=inputs,
        thresholds=thresholds.to_dict(),
        simulation=simulation or {},
        verdicts=ordered,
        hotspots=hotspots,
    )


def parse_report(text: str) -> AdviceReport:
    return AdviceReport.from_dict(json.loads(text))
