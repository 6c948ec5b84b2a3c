"""Builder for synthetic program tables, traces and symbol tables."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..trace_model import (
    BasicBlock,
    BlockExec,
    InstrClass,
    InstrRecord,
    ProgramTable,
    RegionDef,
    RegionEnter,
    RegionExit,
    Symbol,
    SymbolTable,
    Trace,
    annotations_for,
    serialize_annotations,
    serialize_program_table,
    serialize_symbols,
    serialize_trace,
)

C = InstrClass
Op = tuple  # (class, deps, width | None)


def ld(width: int, *deps: int) -> Op:
    return (C.LOAD, deps, width)


def st(width: int, *deps: int) -> Op:
    return (C.STORE, deps, width)


def alu(*deps: int) -> Op:
    return (C.IALU, deps, None)


def fadd(*deps: int) -> Op:
    return (C.FADD, deps, None)


def fmul(*deps: int) -> Op:
    return (C.FMUL, deps, None)


def br(*deps: int) -> Op:
    return (C.BR, deps, None)


def div(*deps: int) -> Op:
    return (C.DIV, deps, None)


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    scale: str = "desk"
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 42


@dataclass
class GeneratedCase:
    table: ProgramTable
    trace: Trace
    symbols: SymbolTable
    manifest: dict[str, Any]

    def files(self) -> dict[str, str]:
        return {
            "kernel.ptab": serialize_program_table(self.table),
            "kernel.trc": serialize_trace(self.trace),
            "kernel.sym": serialize_symbols(self.symbols),
            "regions.json": serialize_annotations(annotations_for(self.table)),
            "manifest.json": json.dumps(self.manifest, indent=2) + "\n",
        }

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = {}
        for name, text in self.files().items():
            path = out / name
            path.write_text(text, encoding="utf-8")
            written[name] = path
        return written


class Pool:
    """``count`` fixed-size nodes scattered over a symbol's address range."""

    def __init__(self, base: int, count: int, node_bytes: int, rng: random.Random, spread: int = 1):
        self.base = base
        self.node_bytes = node_bytes
        slots = list(range(count * spread))
        rng.shuffle(slots)
        self.slots = slots[:count]

    def __getitem__(self, i: int) -> int:
        return self.base + self.slots[i] * self.node_bytes


class Builder:
    """Accumulates blocks, symbols and trace events for one generated kernel.

    Every block built with ``block_len`` set is padded to that length, so the
    first instruction of a block sits at a fixed distance from the last
    instruction of the previous one; the last instruction conventionally
    produces the next node pointer.
    """

    def __init__(self, name: str, seed: int, block_len: int | None = None):
        self.rng = random.Random(seed)
        self.block_len = block_len
        self.functions = {0: name}
        self.blocks: dict[int, BasicBlock] = {}
        self.regions: dict[int, RegionDef] = {}
        self.symbols: list[Symbol] = []
        self.events: list = []
        self._slot_counts: dict[int, int] = {}
        # seed-dependent heap base: addresses move with the seed, structure does not
        self._next = 0x10000000 + (self.rng.randrange(1, 1 << 12) << 16)
        self._task = 0

    def block(self, ops: list[Op]) -> int:
        if self.block_len is not None:
            ops = pointer_block(ops, self.block_len)
        bb_id = len(self.blocks)
        instrs = tuple(
            InstrRecord(i, cls, tuple(deps), width) for i, (cls, deps, width) in enumerate(ops)
        )
        self.blocks[bb_id] = BasicBlock(bb_id, 0, instrs)
        self._slot_counts[bb_id] = sum(1 for op in ops if op[2] is not None)
        return bb_id

    def alloc(self, name: str, nbytes: int, align: int = 64) -> int:
        base = -(-self._next // align) * align
        size = -(-max(nbytes, 1) // 64) * 64
        self.symbols.append(Symbol(name, base, base + size))
        self._next = base + size + 64 * self.rng.randrange(1, 64)
        return base

    def pool(self, name: str, count: int, node_bytes: int, spread: int = 1) -> Pool:
        base = self.alloc(name, count * node_bytes * spread)
        return Pool(base, count, node_bytes, self.rng, spread)

    def region(self, name: str, entry_bb: int, path: str, lines: tuple[int, int]) -> int:
        rid = len(self.regions)
        self.regions[rid] = RegionDef(rid, name, path, lines[0], lines[1], entry_bb)
        return rid

    def enter(self, region_id: int) -> None:
        self.events.append(RegionEnter(region_id, self._task))
        self._task += 1

    def leave(self, region_id: int) -> None:
        self.events.append(RegionExit(region_id))

    def exec(self, bb_id: int, *addrs: int) -> None:
        if len(addrs) != self._slot_counts[bb_id]:
            raise ValueError(f"block {bb_id} takes {self._slot_counts[bb_id]} addresses")
        self.events.append(BlockExec(bb_id, addrs))

    def finish(self, manifest: dict[str, Any]) -> GeneratedCase:
        table = ProgramTable(dict(self.functions), dict(self.blocks), dict(self.regions))
        trace = Trace(0, tuple(self.events))
        symbols = SymbolTable(tuple(sorted(self.symbols, key=lambda s: s.lo)))
        return GeneratedCase(table, trace, symbols, manifest)


def pointer_block(ops: list[Op], length: int) -> list[Op]:
    """Pad ``ops`` to ``length``, keeping the final op last and fixing its deps.

    Dependence distances in ``ops`` refer to the unpadded layout. Padding goes
    in front of the final op, so its distances grow by the pad count.
    """
    pad = length - len(ops)
    if pad < 0:
        raise ValueError(f"block of {len(ops)} ops exceeds length {length}")
    if pad == 0:
        return list(ops)
    last_cls, last_deps, last_w = ops[-1]
    last = (last_cls, tuple(d + pad for d in last_deps), last_w)
    return list(ops[:-1]) + [alu()] * pad + [last]
