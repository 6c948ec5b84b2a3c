"""Bounded-window list scheduler for one or two hardware threads per core.

Each cycle, per hardware thread: micro-ops whose completion time has passed
leave the window, new micro-ops enter in program order while there is room,
and ready micro-ops issue oldest-first to the lowest-index free port that
accepts their class. A micro-op issued at cycle ``c`` with latency ``L``
completes at ``c + L``; dependents may issue from that cycle on. Cycles in
which nothing can happen are skipped.
"""

from __future__ import annotations

import heapq
from bisect import insort
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import DanglingReference
from ..trace_model import InstrClass, ProgramTable, TaskInstance
from .cache import CacheView, build_views
from .config import MachineConfig

_CLASSES = list(InstrClass)
_CODE = {c: i for i, c in enumerate(_CLASSES)}
_LOAD = _CODE[InstrClass.LOAD]
_STORE = _CODE[InstrClass.STORE]


@dataclass
class UopStream:
    """Micro-ops in program order, stored column-wise."""

    classes: list[int] = field(default_factory=list)
    deps: list[tuple[int, ...]] = field(default_factory=list)
    addrs: list[int] = field(default_factory=list)
    widths: list[int] = field(default_factory=list)
    origins: list[tuple[int, int, int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.classes)

    def cls(self, i: int) -> InstrClass:
        return _CLASSES[self.classes[i]]

    def append(
        self,
        cls: InstrClass,
        deps: tuple[int, ...] = (),
        addr: int = 0,
        width: int = 0,
        origin: tuple[int, int, int] = (0, 0, 0),
    ) -> None:
        self.classes.append(_CODE[cls])
        self.deps.append(tuple(deps))
        self.addrs.append(addr)
        self.widths.append(width)
        self.origins.append(origin)

    def extend(self, other: "UopStream") -> None:
        self.classes += other.classes
        self.deps += other.deps
        self.addrs += other.addrs
        self.widths += other.widths
        self.origins += other.origins

    @classmethod
    def of(cls, ops: Sequence[tuple]) -> "UopStream":
        """Build from ``(class, deps[, addr, width])`` tuples (test convenience)."""
        s = cls()
        for op in ops:
            s.append(*op)
        return s


def expand_uops(tasks: Sequence[TaskInstance], table: ProgramTable) -> UopStream:
    stream = UopStream()
    for task in tasks:
        for ev in task.events:
            block = table.blocks.get(ev.bb_id)
            if block is None:
                raise DanglingReference(f"block {ev.bb_id} is not in the program table")
            slot = 0
            for ins in block.instrs:
                if ins.mem_slot is not None:
                    addr, width = ev.addresses[slot], ins.mem_slot
                    slot += 1
                else:
                    addr, width = 0, 0
                stream.classes.append(_CODE[ins.cls])
                stream.deps.append(ins.deps)
                stream.addrs.append(addr)
                stream.widths.append(width)
                stream.origins.append((task.task_id, ev.bb_id, ins.index))
    return stream


@dataclass
class SimResult:
    cycles: int
    per_thread_cycles: list[int]
    uops_executed: int
    per_thread_uops: list[int]
    cache_accesses: list[list[int]]
    cache_misses: list[list[int]]
    memory_accesses: list[int]
    port_busy_cycles: list[list[int]]

    @property
    def port_utilization(self) -> float:
        if self.cycles == 0:
            return 0.0
        busiest = max((b for core in self.port_busy_cycles for b in core), default=0)
        return busiest / self.cycles

    def to_dict(self) -> dict:
        return {
            "cycles": self.cycles,
            "per_thread_cycles": list(self.per_thread_cycles),
            "uops_executed": self.uops_executed,
            "per_thread_uops": list(self.per_thread_uops),
            "cache_accesses": [list(x) for x in self.cache_accesses],
            "cache_misses": [list(x) for x in self.cache_misses],
            "memory_accesses": list(self.memory_accesses),
            "port_busy_cycles": [list(x) for x in self.port_busy_cycles],
            "port_utilization": self.port_utilization,
        }

    @classmethod
    def combine(cls, parts: Sequence["SimResult"]) -> "SimResult":
        """Sum results of back-to-back runs (cycles add up)."""
        if not parts:
            raise ValueError("nothing to combine")
        first = parts[0]

        def add(rows):
            return [sum(col) for col in zip(*rows)]

        def add2(tables):
            return [add(rows) for rows in zip(*tables)]

        return cls(
            cycles=sum(p.cycles for p in parts),
            per_thread_cycles=add(p.per_thread_cycles for p in parts),
            uops_executed=sum(p.uops_executed for p in parts),
            per_thread_uops=add(p.per_thread_uops for p in parts),
            cache_accesses=add2(p.cache_accesses for p in parts) if first.cache_accesses else [],
            cache_misses=add2(p.cache_misses for p in parts) if first.cache_misses else [],
            memory_accesses=add(p.memory_accesses for p in parts),
            port_busy_cycles=add2(p.port_busy_cycles for p in parts),
        )


class _Thread:
    __slots__ = (
        "cls", "deps", "addrs", "widths", "n", "cache", "latency", "window",
        "complete", "pending", "ready_at", "consumers", "next_enter", "occupancy",
        "done_heap", "ready_heap", "avail", "issued", "last_complete", "base",
    )

    def __init__(self, stream: UopStream, cfg: MachineConfig, cache: CacheView):
        self.cls = stream.classes
        self.deps = stream.deps
        self.addrs = stream.addrs
        self.widths = stream.widths
        self.n = len(stream)
        self.cache = cache
        self.latency = [cfg.latencies.get(c, 1) for c in _CLASSES]
        self.window = cfg.window
        self.complete = [-1] * self.n
        self.pending = [0] * self.n
        self.ready_at = [0] * self.n
        self.consumers: dict[int, list[int]] = {}
        self.next_enter = 0
        self.occupancy = 0
        self.done_heap: list[int] = []
        self.ready_heap: list[tuple[int, int]] = []
        self.avail: list[int] = []
        self.issued = 0
        self.last_complete = 0
        # caches may persist across runs; counters are reported as deltas
        self.base = (list(cache.accesses), list(cache.misses), cache.memory_accesses)

    def counters(self) -> tuple[list[int], list[int], int]:
        acc, miss, mem = self.base
        c = self.cache
        return (
            [x - y for x, y in zip(c.accesses, acc)],
            [x - y for x, y in zip(c.misses, miss)],
            c.memory_accesses - mem,
        )

    @property
    def finished(self) -> bool:
        return self.issued == self.n

    def advance(self, cycle: int) -> None:
        """Retire completed micro-ops, fill the window, collect ready ones."""
        done = self.done_heap
        while done and done[0] <= cycle:
            heapq.heappop(done)
            self.occupancy -= 1
        complete, deps = self.complete, self.deps
        while self.occupancy < self.window and self.next_enter < self.n:
            i = self.next_enter
            self.next_enter += 1
            self.occupancy += 1
            unresolved = 0
            ready = 0
            for d in deps[i]:
                j = i - d
                if j < 0:
                    continue
                cj = complete[j]
                if cj < 0:
                    unresolved += 1
                    self.consumers.setdefault(j, []).append(i)
                elif cj > ready:
                    ready = cj
            if unresolved:
                self.pending[i] = unresolved
                self.ready_at[i] = ready
            else:
                heapq.heappush(self.ready_heap, (ready, i))
        rh = self.ready_heap
        while rh and rh[0][0] <= cycle:
            insort(self.avail, heapq.heappop(rh)[1])

    def issue(self, i: int, cycle: int) -> None:
        c = self.cls[i]
        if c == _LOAD:
            lat = self.cache.access(self.addrs[i], self.widths[i], False)
        else:
            if c == _STORE:
                self.cache.access(self.addrs[i], self.widths[i], True)
            lat = self.latency[c]
        t = cycle + lat
        self.complete[i] = t
        if t > self.last_complete:
            self.last_complete = t
        heapq.heappush(self.done_heap, t)
        self.issued += 1
        waiting = self.consumers.pop(i, None)
        if waiting:
            for k in waiting:
                if t > self.ready_at[k]:
                    self.ready_at[k] = t
                self.pending[k] -= 1
                if self.pending[k] == 0:
                    heapq.heappush(self.ready_heap, (self.ready_at[k], k))

    def next_event(self) -> int | None:
        best = None
        if self.ready_heap:
            best = self.ready_heap[0][0]
        if self.next_enter < self.n and self.occupancy >= self.window and self.done_heap:
            t = self.done_heap[0]
            best = t if best is None or t < best else best
        return best


class _Core:
    """Issue ports and width shared by the hardware threads placed on this core."""

    def __init__(self, cfg: MachineConfig, threads: list[_Thread]):
        self.threads = threads
        self.width = cfg.issue_width
        self.n_ports = len(cfg.ports)
        self.accept = [
            [p for p, accepted in enumerate(cfg.ports) if cls in accepted] for cls in _CLASSES
        ]
        self.busy = [0] * self.n_ports

    def issue_cycle(self, cycle: int) -> bool:
        """Issue for one cycle; return True if a ready micro-op was left behind."""
        threads = [t for t in self.threads if t.avail]
        if not threads:
            return False
        if len(threads) == 1:
            return self._issue_one(threads[0], cycle)
        used = [False] * self.n_ports
        free_ports = self.n_ports
        slots = self.width
        # even cycles favour the first thread, odd cycles the second
        order = threads if cycle % 2 == 0 else threads[::-1]
        cursors = [0] * len(order)
        issued: list[list[int]] = [[] for _ in order]
        active = list(range(len(order)))
        while slots and free_ports and active:
            still = []
            for k in active:
                if not slots or not free_ports:
                    still.append(k)
                    continue
                th = order[k]
                avail = th.avail
                pos = cursors[k]
                picked = False
                while pos < len(avail):
                    i = avail[pos]
                    pos += 1
                    for p in self.accept[th.cls[i]]:
                        if not used[p]:
                            used[p] = True
                            free_ports -= 1
                            slots -= 1
                            self.busy[p] += 1
                            th.issue(i, cycle)
                            issued[k].append(i)
                            picked = True
                            break
                    if picked:
                        break
                cursors[k] = pos
                if picked:
                    still.append(k)
            active = still
        blocked = False
        for k, th in enumerate(order):
            if issued[k]:
                gone = set(issued[k])
                th.avail = [i for i in th.avail if i not in gone]
            if th.avail:
                blocked = True
        return blocked

    def _issue_one(self, th: _Thread, cycle: int) -> bool:
        # same policy as the general loop with a single contender
        avail, accept, cls, busy = th.avail, self.accept, th.cls, self.busy
        keep: list[int] = []
        used = 0
        slots = self.width
        for pos, i in enumerate(avail):
            if not slots:
                keep.extend(avail[pos:])
                break
            for p in accept[cls[i]]:
                if not used >> p & 1:
                    used |= 1 << p
                    slots -= 1
                    busy[p] += 1
                    th.issue(i, cycle)
                    break
            else:
                keep.append(i)
        th.avail = keep
        return bool(keep)


def _run(cores: list[_Core]) -> int:
    threads = [t for core in cores for t in core.threads]
    cycle = 0
    while not all(t.finished for t in threads):
        for t in threads:
            t.advance(cycle)
        blocked = False
        for core in cores:
            if core.issue_cycle(cycle):
                blocked = True
        if blocked:
            cycle += 1
            continue
        nxt = [e for e in (t.next_event() for t in threads) if e is not None]
        if not nxt:
            if all(t.finished for t in threads):
                break
            raise RuntimeError("scheduler stalled with unissued micro-ops")
        cycle = max(cycle + 1, min(nxt))
    return max((t.last_complete for t in threads), default=0)


def _result(cores: list[_Core], threads: list[_Thread]) -> SimResult:
    return SimResult(
        cycles=max((t.last_complete for t in threads), default=0),
        per_thread_cycles=[t.last_complete for t in threads],
        uops_executed=sum(t.n for t in threads),
        per_thread_uops=[t.n for t in threads],
        cache_accesses=[t.counters()[0] for t in threads],
        cache_misses=[t.counters()[1] for t in threads],
        memory_accesses=[t.counters()[2] for t in threads],
        port_busy_cycles=[list(c.busy) for c in cores],
    )


def simulate_solo(
    stream: UopStream, cfg: MachineConfig, caches: list[CacheView] | None = None
) -> SimResult:
    views = caches or build_views(cfg, 1, range(len(cfg.cache_levels)))
    th = _Thread(stream, cfg, views[0])
    core = _Core(cfg, [th])
    _run([core])
    return _result([core], [th])


def simulate_corun_smt(
    a: UopStream, b: UopStream, cfg: MachineConfig, caches: list[CacheView] | None = None
) -> SimResult:
    views = caches or smt_caches(cfg)
    ta, tb = _Thread(a, cfg, views[0]), _Thread(b, cfg, views[1])
    core = _Core(cfg, [ta, tb])
    _run([core])
    return _result([core], [ta, tb])


def simulate_corun_smp(
    a: UopStream, b: UopStream, cfg: MachineConfig, caches: list[CacheView] | None = None
) -> SimResult:
    views = caches or smp_caches(cfg)
    ta, tb = _Thread(a, cfg, views[0]), _Thread(b, cfg, views[1])
    cores = [_Core(cfg, [ta]), _Core(cfg, [tb])]
    _run(cores)
    return _result(cores, [ta, tb])


def smt_caches(cfg: MachineConfig) -> list[CacheView]:
    return build_views(cfg, 2, cfg.smt_shared)


def smp_caches(cfg: MachineConfig) -> list[CacheView]:
    return build_views(cfg, 2, cfg.smp_shared)
