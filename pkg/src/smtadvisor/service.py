"""Document producers shared by the CLI and the tool server.

Every function takes document *contents* (not paths) and returns the
canonical JSON text, so the two front ends emit byte-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import canon
from .advisor import (
    GateThresholds,
    RegionVerdict,
    decide,
    generate_report,
    load_thresholds,
    profile_from_solo,
)
from .depcheck import ConflictReport, check_document, find_conflicts, static_check, symbolize
from .errors import InvalidParam, RegionNotFound
from .profile import DEFAULT_COVERAGE, parse_profile, rank_hotspots
from .sim.config import MachineConfig, load_config
from .sim.engine import expand_uops, simulate_solo
from .sim.estimate import DEFAULT_O_SMP, DEFAULT_O_SMT, estimate_speedup
from .trace_model import (
    ProgramTable,
    Trace,
    check_annotations,
    parse_annotations,
    parse_program_table,
    parse_symbols,
    parse_trace,
    slice_region,
    trace_regions,
)


def parse_private(spec: str) -> tuple[int, int]:
    """``lo:hi`` with hex or decimal bounds, half-open."""
    lo_s, sep, hi_s = spec.partition(":")
    try:
        lo, hi = int(lo_s, 0), int(hi_s, 0)
    except ValueError:
        raise InvalidParam(f"private range {spec!r} must be 'lo:hi'") from None
    if not sep or lo >= hi:
        raise InvalidParam(f"private range {spec!r} must be 'lo:hi' with lo < hi")
    return lo, hi


@dataclass
class Inputs:
    table: ProgramTable
    traces: list[Trace]

    @classmethod
    def load(cls, ptab: str, traces: Sequence[str]) -> "Inputs":
        table = parse_program_table(ptab)
        parsed = sorted((parse_trace(t, table) for t in traces), key=lambda t: t.thread_id)
        return cls(table, parsed)

    def region_trace(self, region_id: int):
        if region_id not in self.table.regions:
            raise RegionNotFound(f"region {region_id} is not in the program table")
        for trace in self.traces:
            if region_id in trace_regions(trace):
                return slice_region(trace, region_id)
        raise RegionNotFound(f"region {region_id} does not appear in any trace")


def hotspots_doc(samples: str, coverage: float = DEFAULT_COVERAGE) -> str:
    report = rank_hotspots(parse_profile(samples), coverage)
    return canon.dumps(report.to_dict())


def validate_doc(ptab: str, traces: Sequence[str] = (), annotations: str | None = None) -> str:
    inputs = Inputs.load(ptab, traces)
    table = inputs.table
    doc = {
        "valid": True,
        "functions": len(table.functions),
        "blocks": len(table.blocks),
        "regions": sorted(table.regions),
        "traces": [
            {
                "thread_id": t.thread_id,
                "events": len(t.events),
                "regions": sorted(trace_regions(t)),
            }
            for t in inputs.traces
        ],
    }
    if annotations is not None:
        problems = check_annotations(parse_annotations(annotations), table)
        doc["annotations"] = {"consistent": not problems, "problems": problems}
        doc["valid"] = not problems
    return canon.dumps(doc)


def check_doc(
    ptab: str,
    traces: Sequence[str],
    region_id: int,
    private: Sequence[tuple[int, int]] = (),
    symbols: str | None = None,
    max_conflicts: int | None = 100,
) -> str:
    inputs = Inputs.load(ptab, traces)
    static = static_check(inputs.table, region_id, inputs.traces)
    report = find_conflicts(inputs.region_trace(region_id), inputs.table, private, max_conflicts)
    if symbols is not None:
        report = symbolize(report, parse_symbols(symbols))
    return canon.dumps(check_document(static, report))


def simulate_doc(
    ptab: str,
    traces: Sequence[str],
    region_id: int,
    config: str | None = None,
    o_smt: int = DEFAULT_O_SMT,
    o_smp: int = DEFAULT_O_SMP,
    partition: str = "block",
    invocation: str = "region",
) -> str:
    inputs = Inputs.load(ptab, traces)
    cfg = load_config(config)
    est = estimate_speedup(
        inputs.region_trace(region_id), inputs.table, cfg, o_smt, o_smp, partition, invocation
    )
    return canon.dumps(est.to_dict())


def analyze_region(
    inputs: Inputs,
    region_id: int,
    cfg: MachineConfig,
    thresholds: GateThresholds,
    o_smt: int = DEFAULT_O_SMT,
    o_smp: int = DEFAULT_O_SMP,
    partition: str = "block",
    private: Sequence[tuple[int, int]] = (),
) -> RegionVerdict:
    """Run the gate for one region; simulation only happens once both checks pass."""
    table = inputs.table
    name = table.regions[region_id].name
    static = static_check(table, region_id, inputs.traces)
    try:
        region = inputs.region_trace(region_id)
    except RegionNotFound:
        region = None
    if region is None or not static.safe:
        if region is None:
            conflicts = ConflictReport(region_id, (), False)
        else:
            conflicts = find_conflicts(region, table, private)
        return decide(static, conflicts, None, None, thresholds, name)
    conflicts = find_conflicts(region, table, private)
    if not conflicts.conflict_free:
        return decide(static, conflicts, None, None, thresholds, name)
    solo = simulate_solo(expand_uops(region.tasks, table), cfg)
    est = estimate_speedup(region, table, cfg, o_smt, o_smp, partition, seq=solo)
    profile = profile_from_solo(len(region.tasks), solo, thresholds)
    return decide(static, conflicts, est, profile, thresholds, name)


def report_doc(
    ptab: str,
    traces: Sequence[str],
    config: str | None = None,
    thresholds: str | None = None,
    samples: str | None = None,
    coverage: float = DEFAULT_COVERAGE,
    o_smt: int = DEFAULT_O_SMT,
    o_smp: int = DEFAULT_O_SMP,
    partition: str = "block",
) -> str:
    inputs = Inputs.load(ptab, traces)
    cfg = load_config(config)
    gate = load_thresholds(thresholds)
    verdicts = [
        analyze_region(inputs, rid, cfg, gate, o_smt, o_smp, partition)
        for rid in sorted(inputs.table.regions)
    ]
    digests = {
        "ptab": canon.sha256_bytes(ptab.encode()),
        "traces": [canon.sha256_bytes(t.encode()) for t in traces],
        "config": None if config is None else canon.sha256_bytes(config.encode()),
        "thresholds": None if thresholds is None else canon.sha256_bytes(thresholds.encode()),
        "samples": None if samples is None else canon.sha256_bytes(samples.encode()),
    }
    hot = rank_hotspots(parse_profile(samples), coverage).to_dict() if samples else None
    simulation = {
        "o_smt": o_smt,
        "o_smp": o_smp,
        "partition": partition,
        "machine": cfg.to_dict(),
    }
    report = generate_report(verdicts, hot, digests, gate, simulation)
    return canon.dumps(report.to_dict())
