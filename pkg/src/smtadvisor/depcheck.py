"""Static screening of annotated regions and cross-task memory conflict detection."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .canon import hex_addr
from .errors import RegionNotFound
from .trace_model import (
    InstrClass,
    ProgramTable,
    RegionEnter,
    RegionExit,
    RegionTrace,
    SymbolTable,
    Trace,
)

DEFAULT_MAX_CONFLICTS = 100

HAS_CALL = "HAS_CALL"
HAS_OTHER_CLASS = "HAS_OTHER_CLASS"
EMPTY_REGION = "EMPTY_REGION"
UNREACHED_ENTRY = "UNREACHED_ENTRY"
_FLAG_ORDER = (HAS_CALL, HAS_OTHER_CLASS, EMPTY_REGION, UNREACHED_ENTRY)


@dataclass(frozen=True)
class StaticCheckResult:
    region_id: int
    flags: tuple[str, ...]
    blocks: tuple[int, ...]

    @property
    def safe(self) -> bool:
        return not self.flags

    def to_dict(self) -> dict:
        return {
            "region_id": self.region_id,
            "safe": self.safe,
            "flags": list(self.flags),
            "blocks": list(self.blocks),
        }


@dataclass(frozen=True)
class Access:
    position: int
    task_id: int
    bb_id: int
    slot_index: int
    addr: int
    width: int
    is_store: bool

    @property
    def end(self) -> int:
        return self.addr + self.width


@dataclass(frozen=True)
class Conflict:
    kind: str
    earlier: Access
    later: Access
    overlap: tuple[int, int]
    symbol: str | None = None

    def to_dict(self) -> dict:
        def side(a: Access) -> dict:
            return {
                "task_id": a.task_id,
                "bb_id": a.bb_id,
                "slot_index": a.slot_index,
                "addr": hex_addr(a.addr),
                "width": a.width,
            }

        return {
            "kind": self.kind,
            "earlier": side(self.earlier),
            "later": side(self.later),
            "overlap": [hex_addr(self.overlap[0]), hex_addr(self.overlap[1])],
            "symbol": self.symbol,
        }


@dataclass(frozen=True)
class ConflictReport:
    region_id: int
    conflicts: tuple[Conflict, ...]
    truncated: bool

    @property
    def conflict_free(self) -> bool:
        return not self.conflicts and not self.truncated

    def to_dict(self) -> dict:
        return {
            "region_id": self.region_id,
            "conflict_free": self.conflict_free,
            "truncated": self.truncated,
            "conflict_count": len(self.conflicts),
            "conflicts": [c.to_dict() for c in self.conflicts],
        }


def region_blocks(traces: Iterable[Trace], region_id: int) -> set[int]:
    """All blocks executed inside any instance of the region across the traces."""
    seen: set[int] = set()
    for trace in traces:
        inside = False
        for ev in trace.events:
            if isinstance(ev, RegionEnter):
                inside = ev.region_id == region_id
            elif isinstance(ev, RegionExit):
                inside = False
            elif inside:
                seen.add(ev.bb_id)
    return seen


def static_check(
    table: ProgramTable, region_id: int, traces: Sequence[Trace] | None = None
) -> StaticCheckResult:
    region = table.regions.get(region_id)
    if region is None:
        raise RegionNotFound(f"region {region_id} is not in the program table")
    if traces:
        blocks = region_blocks(traces, region_id)
    else:
        blocks = {region.entry_bb}
    flags = set()
    if not blocks:
        flags.add(EMPTY_REGION)
    if traces and region.entry_bb not in blocks:
        flags.add(UNREACHED_ENTRY)
    for bb in blocks:
        for ins in table.blocks[bb].instrs:
            if ins.cls is InstrClass.CALL:
                flags.add(HAS_CALL)
            elif ins.cls is InstrClass.OTHER:
                flags.add(HAS_OTHER_CLASS)
    return StaticCheckResult(
        region_id, tuple(f for f in _FLAG_ORDER if f in flags), tuple(sorted(blocks))
    )


def memory_accesses(region: RegionTrace, table: ProgramTable) -> list[Access]:
    """Flatten a region trace into its memory accesses in sequential order."""
    out: list[Access] = []
    for task in region.tasks:
        for ev in task.events:
            block = table.blocks[ev.bb_id]
            slot = 0
            for ins in block.instrs:
                if ins.mem_slot is None:
                    continue
                out.append(
                    Access(
                        len(out),
                        task.task_id,
                        ev.bb_id,
                        slot,
                        ev.addresses[slot],
                        ins.mem_slot,
                        ins.cls is InstrClass.STORE,
                    )
                )
                slot += 1
    return out


def is_private(addr: int, end: int, private_ranges: Sequence[tuple[int, int]]) -> bool:
    return any(lo <= addr and end <= hi for lo, hi in private_ranges)


def conflict_kind(earlier_store: bool, later_store: bool) -> str:
    if earlier_store:
        return "WAW" if later_store else "RAW"
    return "WAR"


_CHUNK = 64


def find_conflicts(
    region: RegionTrace,
    table: ProgramTable,
    private_ranges: Sequence[tuple[int, int]] = (),
    max_conflicts: int | None = DEFAULT_MAX_CONFLICTS,
) -> ConflictReport:
    """Report every cross-task access pair with overlapping bytes and at least one store.

    Accesses are bucketed by 64-byte chunk so each access only meets earlier
    accesses that share a chunk; slots are at most 64 bytes wide, so one access
    touches at most two chunks.
    """
    accesses = [
        a for a in memory_accesses(region, table) if not is_private(a.addr, a.end, private_ranges)
    ]
    # per chunk: earlier loads and earlier stores as (lo, hi, task, access);
    # a load only needs the stores
    loads: dict[int, list[tuple[int, int, int, Access]]] = defaultdict(list)
    stores: dict[int, list[tuple[int, int, int, Access]]] = defaultdict(list)
    conflicts: list[Conflict] = []
    truncated = False
    for later in accesses:
        lo, hi, tid = later.addr, later.end, later.task_id
        chunks = range(lo // _CHUNK, (hi - 1) // _CHUNK + 1)
        buckets = (stores, loads) if later.is_store else (stores,)
        found: dict[int, Access] = {}
        for ch in chunks:
            for bucket in buckets:
                for e_lo, e_hi, e_tid, earlier in bucket.get(ch, ()):
                    if e_tid != tid and e_lo < hi and lo < e_hi:
                        found[earlier.position] = earlier
        for pos in sorted(found):
            if max_conflicts is not None and len(conflicts) >= max_conflicts:
                truncated = True
                break
            earlier = found[pos]
            conflicts.append(
                Conflict(
                    conflict_kind(earlier.is_store, later.is_store),
                    earlier,
                    later,
                    (max(earlier.addr, later.addr), min(earlier.end, later.end)),
                )
            )
        if truncated:
            break
        target = stores if later.is_store else loads
        entry = (lo, hi, tid, later)
        for ch in chunks:
            target[ch].append(entry)
    return ConflictReport(region.region_id, tuple(conflicts), truncated)


def symbolize(report: ConflictReport, symbols: SymbolTable) -> ConflictReport:
    named = []
    for c in report.conflicts:
        hits = symbols.lookup(*c.overlap)
        named.append(replace(c, symbol=hits[0].name) if len(hits) == 1 else c)
    return replace(report, conflicts=tuple(named))


def check_document(static: StaticCheckResult, report: ConflictReport) -> dict:
    return {"static": static.to_dict(), "dynamic": report.to_dict()}
