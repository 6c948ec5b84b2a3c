"""Set-associative LRU cache hierarchy (inclusive fill, write-allocate, write-back)."""

from __future__ import annotations

from typing import Sequence

from .config import CacheLevelConfig, MachineConfig


class CacheLevel:
    """One level of cache state. May be shared by several hardware threads."""

    def __init__(self, cfg: CacheLevelConfig):
        self.cfg = cfg
        self.line_bytes = cfg.line_bytes
        self.n_sets = cfg.sets
        self.ways = cfg.associativity
        self.hit_latency = cfg.hit_latency
        # per set: line numbers ordered LRU first, MRU last
        self.sets: list[list[int]] = [[] for _ in range(self.n_sets)]
        self.dirty: set[int] = set()
        self.writebacks = 0

    def probe(self, line: int) -> bool:
        """Look up a line; on hit move it to MRU."""
        s = self.sets[line % self.n_sets]
        if line in s:
            if s[-1] != line:
                s.remove(line)
                s.append(line)
            return True
        return False

    def fill(self, line: int) -> None:
        s = self.sets[line % self.n_sets]
        if len(s) >= self.ways:
            victim = s.pop(0)
            if victim in self.dirty:
                self.dirty.discard(victim)
                self.writebacks += 1
        s.append(line)

    def contains(self, line: int) -> bool:
        return line in self.sets[line % self.n_sets]


class CacheView:
    """One hardware thread's path through the hierarchy, with its own counters."""

    def __init__(self, levels: Sequence[CacheLevel], memory_latency: int, line_bytes: int = 64):
        self.levels = list(levels)
        self.memory_latency = memory_latency
        self.line_bytes = line_bytes
        self.accesses = [0] * len(self.levels)
        self.misses = [0] * len(self.levels)
        self.memory_accesses = 0

    def access(self, addr: int, width: int, is_store: bool) -> int:
        """Access ``width`` bytes at ``addr``; return the latency charged.

        A range that crosses a line boundary is split and the two line
        latencies are summed.
        """
        first = addr // self.line_bytes
        last = (addr + max(width, 1) - 1) // self.line_bytes
        total = 0
        for line in range(first, last + 1):
            total += self._access_line(line, is_store)
        return total

    def _access_line(self, line: int, is_store: bool) -> int:
        levels = self.levels
        latency = self.memory_latency
        hit_at = len(levels)
        for i, level in enumerate(levels):
            self.accesses[i] += 1
            if level.probe(line):
                hit_at = i
                latency = level.hit_latency
                break
            self.misses[i] += 1
        if hit_at == len(levels):
            self.memory_accesses += 1
        for i in range(hit_at):
            levels[i].fill(line)
        if is_store and levels:
            levels[0].dirty.add(line)
        return latency


def build_views(cfg: MachineConfig, threads: int, shared: Sequence[int]) -> list[CacheView]:
    """Instantiate per-thread views; levels listed in ``shared`` are a single state."""
    shared_set = set(shared)
    common = {i: CacheLevel(lv) for i, lv in enumerate(cfg.cache_levels) if i in shared_set}
    line = cfg.cache_levels[0].line_bytes if cfg.cache_levels else 64
    views = []
    for _ in range(threads):
        levels = [
            common[i] if i in shared_set else CacheLevel(lv)
            for i, lv in enumerate(cfg.cache_levels)
        ]
        views.append(CacheView(levels, cfg.memory_latency, line))
    return views
