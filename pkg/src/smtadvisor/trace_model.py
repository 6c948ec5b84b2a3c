"""Canonical text formats for the static program table, dynamic traces,
data symbols and region annotations.

All objects are frozen dataclasses; parsers validate every invariant and
serializers emit a canonical form so that ``parse(serialize(x)) == x``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

from .errors import (
    AddressCountMismatch,
    DanglingReference,
    MalformedLine,
    NonMonotonicTaskId,
    RegionNotFound,
    SlotOnNonMemoryInstr,
    UnbalancedRegion,
    UnknownBlock,
    UnknownVersion,
    ValidationError,
)

MEM_WIDTHS = (1, 2, 4, 8, 16, 32, 64)
ADDR_MAX = (1 << 64) - 1


class InstrClass(str, enum.Enum):
    IALU = "IALU"
    IMUL = "IMUL"
    FADD = "FADD"
    FMUL = "FMUL"
    DIV = "DIV"
    LOAD = "LOAD"
    STORE = "STORE"
    BR = "BR"
    CALL = "CALL"
    OTHER = "OTHER"

    @property
    def is_memory(self) -> bool:
        return self in (InstrClass.LOAD, InstrClass.STORE)


@dataclass(frozen=True)
class InstrRecord:
    index: int
    cls: InstrClass
    deps: tuple[int, ...] = ()
    mem_slot: int | None = None


@dataclass(frozen=True)
class BasicBlock:
    bb_id: int
    function_id: int
    instrs: tuple[InstrRecord, ...]

    @property
    def slot_count(self) -> int:
        return sum(1 for ins in self.instrs if ins.mem_slot is not None)


@dataclass(frozen=True)
class RegionDef:
    region_id: int
    name: str
    path: str
    begin_line: int
    end_line: int
    entry_bb: int


@dataclass(frozen=True)
class ProgramTable:
    functions: dict[int, str] = field(default_factory=dict)
    blocks: dict[int, BasicBlock] = field(default_factory=dict)
    regions: dict[int, RegionDef] = field(default_factory=dict)


@dataclass(frozen=True)
class RegionEnter:
    region_id: int
    task_id: int


@dataclass(frozen=True)
class RegionExit:
    region_id: int


@dataclass(frozen=True)
class BlockExec:
    bb_id: int
    addresses: tuple[int, ...] = ()


TraceEvent = Union[RegionEnter, RegionExit, BlockExec]


@dataclass(frozen=True)
class Trace:
    thread_id: int
    events: tuple[TraceEvent, ...]


@dataclass(frozen=True)
class TaskInstance:
    task_id: int
    events: tuple[BlockExec, ...]


@dataclass(frozen=True)
class RegionTrace:
    region_id: int
    tasks: tuple[TaskInstance, ...]


@dataclass(frozen=True)
class Symbol:
    name: str
    lo: int
    hi: int


@dataclass(frozen=True)
class SymbolTable:
    entries: tuple[Symbol, ...] = ()

    def lookup(self, lo: int, hi: int) -> list[Symbol]:
        return [s for s in self.entries if s.lo < hi and lo < s.hi]


@dataclass(frozen=True)
class RegionAnnotation:
    region_id: int
    name: str
    file: str
    begin_line: int
    end_line: int
    task_boundary: str = "iteration"


# --------------------------------------------------------------------------
# shared line handling


def _lines(text: str) -> Iterator[tuple[int, list[str]]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _int(tok: str, lineno: int, what: str, minimum: int = 0) -> int:
    try:
        value = int(tok, 10)
    except ValueError:
        raise MalformedLine(lineno, f"{what} must be an integer, got {tok!r}") from None
    if value < minimum:
        raise MalformedLine(lineno, f"{what} must be >= {minimum}, got {value}")
    return value


def _hex(tok: str, lineno: int) -> int:
    if not tok.lower().startswith("0x"):
        raise MalformedLine(lineno, f"address must be 0x-prefixed hex, got {tok!r}")
    try:
        value = int(tok, 16)
    except ValueError:
        raise MalformedLine(lineno, f"bad hex address {tok!r}") from None
    if value > ADDR_MAX:
        raise MalformedLine(lineno, f"address {tok} exceeds 64 bits")
    return value


def _header(lines: list[tuple[int, list[str]]], magic: str) -> None:
    if not lines:
        raise UnknownVersion(f"empty document, expected '{magic} 1' header")
    lineno, toks = lines[0]
    if toks[0] != magic or len(toks) != 2:
        raise UnknownVersion(f"line {lineno}: expected '{magic} 1' header")
    if toks[1] != "1":
        raise UnknownVersion(f"{magic} version {toks[1]!r} is not supported")


def _body(lines: list[tuple[int, list[str]]]) -> list[tuple[int, list[str]]]:
    body = lines[1:]
    for i, (lineno, toks) in enumerate(body):
        if toks[0] == "END":
            if len(toks) != 1:
                raise MalformedLine(lineno, "END takes no arguments")
            if i != len(body) - 1:
                raise MalformedLine(body[i + 1][0], "content after END")
            return body[:i]
    last = body[-1][0] if body else lines[0][0]
    raise MalformedLine(last, "missing END terminator")


# --------------------------------------------------------------------------
# program table


def _parse_instr(toks: list[str], lineno: int) -> InstrRecord:
    if len(toks) not in (4, 5):
        raise MalformedLine(lineno, "expected 'I <idx> <CLASS> <deps|-> [M<bytes>]'")
    index = _int(toks[1], lineno, "instruction index")
    try:
        cls = InstrClass(toks[2])
    except ValueError:
        raise MalformedLine(lineno, f"unknown instruction class {toks[2]!r}") from None
    deps: tuple[int, ...] = ()
    if toks[3] != "-":
        parts = toks[3].split(",")
        if len(parts) > 2:
            raise MalformedLine(lineno, "at most two dependences per instruction")
        deps = tuple(_int(p, lineno, "dependence distance", minimum=1) for p in parts)
    slot = None
    if len(toks) == 5:
        tok = toks[4]
        if not tok.startswith("M"):
            raise MalformedLine(lineno, f"expected memory slot 'M<bytes>', got {tok!r}")
        slot = _int(tok[1:], lineno, "memory slot width")
        if slot not in MEM_WIDTHS:
            raise MalformedLine(lineno, f"memory slot width {slot} not in {MEM_WIDTHS}")
        if not cls.is_memory:
            raise SlotOnNonMemoryInstr(f"line {lineno}: {cls.value} cannot own a memory slot")
    elif cls.is_memory:
        raise MalformedLine(lineno, f"{cls.value} requires a memory slot")
    return InstrRecord(index, cls, deps, slot)


def _parse_anchor(tok: str, lineno: int) -> tuple[str, int, int]:
    path, sep, span = tok.rpartition(":")
    lo, dash, hi = span.partition("-")
    if not sep or not path or not dash:
        raise MalformedLine(lineno, f"expected <path>:<lo>-<hi>, got {tok!r}")
    begin = _int(lo, lineno, "begin_line", minimum=1)
    end = _int(hi, lineno, "end_line", minimum=1)
    if begin > end:
        raise MalformedLine(lineno, f"begin_line {begin} > end_line {end}")
    return path, begin, end


def parse_program_table(text: str) -> ProgramTable:
    lines = list(_lines(text))
    _header(lines, "PTAB")
    functions: dict[int, str] = {}
    raw_blocks: dict[int, tuple[int, list[InstrRecord], int]] = {}
    regions: dict[int, RegionDef] = {}
    current: int | None = None

    for lineno, toks in _body(lines):
        tag = toks[0]
        if tag == "FUNC":
            if len(toks) != 3:
                raise MalformedLine(lineno, "expected 'FUNC <fid> <name>'")
            fid = _int(toks[1], lineno, "function id")
            if fid in functions:
                raise MalformedLine(lineno, f"duplicate function id {fid}")
            functions[fid] = toks[2]
            current = None
        elif tag == "BB":
            if len(toks) != 3:
                raise MalformedLine(lineno, "expected 'BB <bbid> <fid>'")
            bb = _int(toks[1], lineno, "block id")
            if bb in raw_blocks:
                raise MalformedLine(lineno, f"duplicate block id {bb}")
            raw_blocks[bb] = (_int(toks[2], lineno, "function id"), [], lineno)
            current = bb
        elif tag == "I":
            if current is None:
                raise MalformedLine(lineno, "instruction outside of a BB")
            ins = _parse_instr(toks, lineno)
            instrs = raw_blocks[current][1]
            if ins.index != len(instrs):
                raise MalformedLine(
                    lineno, f"instruction index {ins.index}, expected {len(instrs)}"
                )
            instrs.append(ins)
        elif tag == "REGION":
            if len(toks) != 5:
                raise MalformedLine(
                    lineno, "expected 'REGION <rid> <name> <path>:<lo>-<hi> <entry_bbid>'"
                )
            rid = _int(toks[1], lineno, "region id")
            if rid in regions:
                raise MalformedLine(lineno, f"duplicate region id {rid}")
            path, begin, end = _parse_anchor(toks[3], lineno)
            entry = _int(toks[4], lineno, "entry block id")
            regions[rid] = RegionDef(rid, toks[2], path, begin, end, entry)
            current = None
        else:
            raise MalformedLine(lineno, f"unknown record {tag!r}")

    blocks = {}
    for bb, (fid, instrs, lineno) in raw_blocks.items():
        if not instrs:
            raise MalformedLine(lineno, f"block {bb} has no instructions")
        blocks[bb] = BasicBlock(bb, fid, tuple(instrs))
    table = ProgramTable(functions, blocks, regions)
    validate_table(table)
    return table


def validate_table(table: ProgramTable) -> None:
    """Check cross-references and per-record invariants of a table built in code."""
    for bb_id, block in table.blocks.items():
        if block.bb_id != bb_id or bb_id < 0:
            raise ValidationError(f"block key {bb_id} does not match bb_id {block.bb_id}")
        if block.function_id not in table.functions:
            raise DanglingReference(f"block {bb_id} names unknown function {block.function_id}")
        if not block.instrs:
            raise ValidationError(f"block {bb_id} has no instructions")
        for i, ins in enumerate(block.instrs):
            if ins.index != i:
                raise ValidationError(f"block {bb_id}: instruction index {ins.index} at {i}")
            if len(ins.deps) > 2 or any(d < 1 for d in ins.deps):
                raise ValidationError(f"block {bb_id} instr {i}: bad deps {ins.deps}")
            if ins.mem_slot is not None:
                if not ins.cls.is_memory:
                    raise SlotOnNonMemoryInstr(f"block {bb_id} instr {i}: {ins.cls.value}")
                if ins.mem_slot not in MEM_WIDTHS:
                    raise ValidationError(f"block {bb_id} instr {i}: width {ins.mem_slot}")
            elif ins.cls.is_memory:
                raise ValidationError(f"block {bb_id} instr {i}: {ins.cls.value} lacks a slot")
    for rid, reg in table.regions.items():
        if reg.region_id != rid or rid < 0:
            raise ValidationError(f"region key {rid} does not match {reg.region_id}")
        if reg.begin_line > reg.end_line:
            raise ValidationError(f"region {rid}: begin_line > end_line")
        if reg.entry_bb not in table.blocks:
            raise DanglingReference(f"region {rid} names unknown entry block {reg.entry_bb}")


def serialize_program_table(table: ProgramTable) -> str:
    out = ["PTAB 1"]
    for fid in sorted(table.functions):
        out.append(f"FUNC {fid} {table.functions[fid]}")
    for bb_id in sorted(table.blocks):
        block = table.blocks[bb_id]
        out.append(f"BB {bb_id} {block.function_id}")
        for ins in block.instrs:
            deps = ",".join(str(d) for d in ins.deps) if ins.deps else "-"
            line = f"I {ins.index} {ins.cls.value} {deps}"
            if ins.mem_slot is not None:
                line += f" M{ins.mem_slot}"
            out.append(line)
    for rid in sorted(table.regions):
        r = table.regions[rid]
        out.append(f"REGION {rid} {r.name} {r.path}:{r.begin_line}-{r.end_line} {r.entry_bb}")
    out.append("END")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# traces


def parse_trace(text: str, table: ProgramTable) -> Trace:
    lines = list(_lines(text))
    _header(lines, "TRC")
    body = _body(lines)
    if not body or body[0][1][0] != "T" or len(body[0][1]) != 2:
        where = body[0][0] if body else lines[0][0]
        raise MalformedLine(where, "expected 'T <tid>' after the header")
    thread_id = _int(body[0][1][1], body[0][0], "thread id")

    events: list[TraceEvent] = []
    open_region: int | None = None
    last_task: dict[int, int] = {}
    for lineno, toks in body[1:]:
        tag = toks[0]
        if tag == "B":
            if len(toks) < 2:
                raise MalformedLine(lineno, "expected 'B <bbid> <hexaddr>...'")
            bb = _int(toks[1], lineno, "block id")
            block = table.blocks.get(bb)
            if block is None:
                raise UnknownBlock(f"line {lineno}: block {bb} is not in the program table")
            addrs = tuple(_hex(t, lineno) for t in toks[2:])
            if len(addrs) != block.slot_count:
                raise AddressCountMismatch(bb, block.slot_count, len(addrs), lineno)
            events.append(BlockExec(bb, addrs))
        elif tag == "R+":
            if len(toks) != 3:
                raise MalformedLine(lineno, "expected 'R+ <rid> <task_id>'")
            rid = _int(toks[1], lineno, "region id")
            task = _int(toks[2], lineno, "task id")
            if rid not in table.regions:
                raise DanglingReference(f"line {lineno}: region {rid} is not in the program table")
            if open_region is not None:
                raise UnbalancedRegion(
                    f"line {lineno}: region {rid} entered while region {open_region} is open"
                )
            if rid in last_task and task <= last_task[rid]:
                raise NonMonotonicTaskId(
                    f"line {lineno}: task {task} after task {last_task[rid]} in region {rid}"
                )
            last_task[rid] = task
            open_region = rid
            events.append(RegionEnter(rid, task))
        elif tag == "R-":
            if len(toks) != 2:
                raise MalformedLine(lineno, "expected 'R- <rid>'")
            rid = _int(toks[1], lineno, "region id")
            if open_region != rid:
                raise UnbalancedRegion(
                    f"line {lineno}: exit of region {rid} but open region is {open_region}"
                )
            open_region = None
            events.append(RegionExit(rid))
        elif tag == "T":
            raise MalformedLine(lineno, "one thread per trace file")
        else:
            raise MalformedLine(lineno, f"unknown record {tag!r}")
    if open_region is not None:
        raise UnbalancedRegion(f"region {open_region} is never exited")
    return Trace(thread_id, tuple(events))


def validate_trace(trace: Trace, table: ProgramTable) -> None:
    """Re-check a programmatically built trace by round-tripping its text form."""
    parse_trace(serialize_trace(trace), table)


def serialize_trace(trace: Trace) -> str:
    out = ["TRC 1", f"T {trace.thread_id}"]
    for ev in trace.events:
        if isinstance(ev, BlockExec):
            if ev.addresses:
                out.append(f"B {ev.bb_id} " + " ".join(f"0x{a:x}" for a in ev.addresses))
            else:
                out.append(f"B {ev.bb_id}")
        elif isinstance(ev, RegionEnter):
            out.append(f"R+ {ev.region_id} {ev.task_id}")
        else:
            out.append(f"R- {ev.region_id}")
    out.append("END")
    return "\n".join(out) + "\n"


def trace_regions(trace: Trace) -> list[int]:
    seen: dict[int, None] = {}
    for ev in trace.events:
        if isinstance(ev, RegionEnter):
            seen.setdefault(ev.region_id)
    return list(seen)


def slice_region(trace: Trace, region_id: int) -> RegionTrace:
    tasks: list[TaskInstance] = []
    current: list[BlockExec] | None = None
    task_id = -1
    for ev in trace.events:
        if isinstance(ev, RegionEnter):
            if ev.region_id == region_id:
                current, task_id = [], ev.task_id
        elif isinstance(ev, RegionExit):
            if ev.region_id == region_id and current is not None:
                tasks.append(TaskInstance(task_id, tuple(current)))
                current = None
        elif current is not None:
            current.append(ev)
    if not tasks:
        raise RegionNotFound(f"region {region_id} does not appear in trace {trace.thread_id}")
    tasks.sort(key=lambda t: t.task_id)
    return RegionTrace(region_id, tuple(tasks))


# --------------------------------------------------------------------------
# symbols


def parse_symbols(text: str) -> SymbolTable:
    entries = []
    for lineno, toks in _lines(text):
        if toks[0] != "SYM" or len(toks) != 4:
            raise MalformedLine(lineno, "expected 'SYM <name> <lo_hex> <hi_hex>'")
        lo, hi = _hex(toks[2], lineno), _hex(toks[3], lineno)
        if lo >= hi:
            raise MalformedLine(lineno, f"empty symbol range for {toks[1]}")
        entries.append(Symbol(toks[1], lo, hi))
    entries.sort(key=lambda s: (s.lo, s.hi, s.name))
    for prev, cur in zip(entries, entries[1:]):
        if cur.lo < prev.hi:
            raise ValidationError(f"symbols {prev.name} and {cur.name} overlap")
    return SymbolTable(tuple(entries))


def serialize_symbols(symbols: SymbolTable) -> str:
    return "".join(f"SYM {s.name} 0x{s.lo:x} 0x{s.hi:x}\n" for s in symbols.entries)


# --------------------------------------------------------------------------
# region annotations (JSON)

_ANNOTATION_KEYS = ("region_id", "name", "file", "begin_line", "end_line", "task_boundary")


def parse_annotations(text: str) -> list[RegionAnnotation]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"annotations are not valid JSON: {exc}") from None
    items = doc.get("regions") if isinstance(doc, dict) else doc
    if not isinstance(items, list):
        raise ValidationError("annotations must be a list or an object with a 'regions' list")
    out = []
    seen = set()
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            raise ValidationError(f"annotation {i} is not an object")
        missing = [k for k in _ANNOTATION_KEYS[:-1] if k not in item]
        if missing:
            raise ValidationError(f"annotation {i} lacks {', '.join(missing)}")
        rid, begin, end = item["region_id"], item["begin_line"], item["end_line"]
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (rid, begin, end)):
            raise ValidationError(f"annotation {i}: ids and lines must be integers")
        if rid < 0 or begin < 1 or begin > end:
            raise ValidationError(f"annotation {i}: bad region id or line span")
        if rid in seen:
            raise ValidationError(f"annotation {i}: duplicate region id {rid}")
        seen.add(rid)
        boundary = item.get("task_boundary", "iteration")
        if boundary != "iteration":
            raise ValidationError(f"annotation {i}: task_boundary must be 'iteration'")
        out.append(RegionAnnotation(rid, str(item["name"]), str(item["file"]), begin, end))
    return out


def annotations_for(table: ProgramTable) -> list[RegionAnnotation]:
    return [
        RegionAnnotation(r.region_id, r.name, r.path, r.begin_line, r.end_line)
        for _, r in sorted(table.regions.items())
    ]


def serialize_annotations(annotations: Iterable[RegionAnnotation]) -> str:
    regions = [
        {k: getattr(a, k) for k in _ANNOTATION_KEYS}
        for a in sorted(annotations, key=lambda a: a.region_id)
    ]
    return json.dumps({"regions": regions}, indent=2) + "\n"


def check_annotations(annotations: list[RegionAnnotation], table: ProgramTable) -> list[str]:
    """Return mismatches between an annotation file and the program table."""
    problems = []
    for a in annotations:
        reg = table.regions.get(a.region_id)
        if reg is None:
            problems.append(f"region {a.region_id} is not in the program table")
            continue
        if (reg.name, reg.path, reg.begin_line, reg.end_line) != (
            a.name, a.file, a.begin_line, a.end_line
        ):
            problems.append(
                f"region {a.region_id}: annotation {a.file}:{a.begin_line}-{a.end_line} "
                f"differs from table {reg.path}:{reg.begin_line}-{reg.end_line}"
            )
    annotated = {a.region_id for a in annotations}
    for rid in sorted(set(table.regions) - annotated):
        problems.append(f"region {rid} has no annotation")
    return problems
