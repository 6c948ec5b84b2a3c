"""Machine model parameters for the trace-driven SMT simulator."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from ..errors import InvalidConfig
from ..trace_model import InstrClass

C = InstrClass

DEFAULT_PORTS: tuple[frozenset[InstrClass], ...] = (
    frozenset({C.IALU, C.IMUL, C.BR, C.CALL, C.OTHER}),
    frozenset({C.IALU, C.FADD, C.FMUL, C.DIV}),
    frozenset({C.LOAD}),
    frozenset({C.LOAD}),
    frozenset({C.STORE}),
)

DEFAULT_LATENCIES: dict[InstrClass, int] = {
    C.IALU: 1,
    C.IMUL: 3,
    C.FADD: 3,
    C.FMUL: 4,
    C.DIV: 12,
    C.STORE: 1,
    C.BR: 1,
    C.CALL: 1,
    C.OTHER: 1,
}


@dataclass(frozen=True)
class CacheLevelConfig:
    size_bytes: int
    associativity: int
    hit_latency: int
    line_bytes: int = 64

    @property
    def sets(self) -> int:
        return self.size_bytes // (self.line_bytes * self.associativity)


DEFAULT_CACHE_LEVELS = (
    CacheLevelConfig(49152, 12, 4),
    CacheLevelConfig(1310720, 10, 14),
    CacheLevelConfig(26214400, 16, 50),
)


@dataclass(frozen=True)
class MachineConfig:
    issue_width: int = 4
    window: int = 128
    ports: tuple[frozenset[InstrClass], ...] = DEFAULT_PORTS
    latencies: dict[InstrClass, int] = field(default_factory=lambda: dict(DEFAULT_LATENCIES))
    cache_levels: tuple[CacheLevelConfig, ...] = DEFAULT_CACHE_LEVELS
    memory_latency: int = 200
    smt_shared_levels: tuple[int, ...] | None = None
    smp_shared_levels: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        validate_config(self)

    @property
    def smt_shared(self) -> tuple[int, ...]:
        if self.smt_shared_levels is None:
            return tuple(range(len(self.cache_levels)))
        return self.smt_shared_levels

    @property
    def smp_shared(self) -> tuple[int, ...]:
        if self.smp_shared_levels is None:
            return (len(self.cache_levels) - 1,) if self.cache_levels else ()
        return self.smp_shared_levels

    def to_dict(self) -> dict[str, Any]:
        return {
            "issue_width": self.issue_width,
            "window": self.window,
            "ports": [sorted(c.value for c in p) for p in self.ports],
            "latencies": {c.value: v for c, v in sorted(self.latencies.items())},
            "cache_levels": [
                {
                    "size_bytes": lv.size_bytes,
                    "associativity": lv.associativity,
                    "line_bytes": lv.line_bytes,
                    "hit_latency": lv.hit_latency,
                }
                for lv in self.cache_levels
            ],
            "memory_latency": self.memory_latency,
            "smt_shared_levels": list(self.smt_shared),
            "smp_shared_levels": list(self.smp_shared),
        }


def validate_config(cfg: MachineConfig) -> None:
    if cfg.issue_width < 1 or cfg.window < 1:
        raise InvalidConfig("issue_width and window must be positive")
    if cfg.issue_width > len(cfg.ports):
        raise InvalidConfig(f"issue_width {cfg.issue_width} exceeds port count {len(cfg.ports)}")
    for cls in InstrClass:
        if not any(cls in p for p in cfg.ports):
            raise InvalidConfig(f"no port accepts {cls.value}")
        if cls is not C.LOAD and cfg.latencies.get(cls, 0) < 1:
            raise InvalidConfig(f"latency for {cls.value} must be >= 1")
    prev = 0
    for i, lv in enumerate(cfg.cache_levels):
        if lv.size_bytes <= 0 or lv.associativity <= 0 or lv.line_bytes <= 0:
            raise InvalidConfig(f"cache level {i}: sizes must be positive")
        if lv.size_bytes % (lv.line_bytes * lv.associativity):
            raise InvalidConfig(
                f"cache level {i}: size {lv.size_bytes} not divisible by line*associativity"
            )
        if lv.hit_latency <= prev:
            raise InvalidConfig("cache hit latencies must strictly increase across levels")
        if lv.line_bytes != cfg.cache_levels[0].line_bytes:
            raise InvalidConfig("all cache levels must share one line size")
        prev = lv.hit_latency
    if cfg.memory_latency < 1 or (cfg.cache_levels and cfg.memory_latency <= prev):
        raise InvalidConfig("memory_latency must exceed the last cache hit latency")
    for name, levels in (("smt", cfg.smt_shared_levels), ("smp", cfg.smp_shared_levels)):
        if levels is not None and any(not 0 <= i < len(cfg.cache_levels) for i in levels):
            raise InvalidConfig(f"{name}_shared_levels names a missing cache level")


def _classes(names: Any, where: str) -> frozenset[InstrClass]:
    try:
        return frozenset(InstrClass(n) for n in names)
    except (TypeError, ValueError):
        raise InvalidConfig(f"{where}: unknown instruction class in {names!r}") from None


def config_from_dict(doc: dict[str, Any]) -> MachineConfig:
    """Build a config from a JSON object; absent fields keep their defaults."""
    if not isinstance(doc, dict):
        raise InvalidConfig("machine config must be a JSON object")
    known = {
        "issue_width", "window", "ports", "latencies", "cache_levels",
        "memory_latency", "smt_shared_levels", "smp_shared_levels",
    }
    unknown = set(doc) - known
    if unknown:
        raise InvalidConfig(f"unknown machine config fields: {', '.join(sorted(unknown))}")
    kw: dict[str, Any] = {}
    try:
        for key in ("issue_width", "window", "memory_latency"):
            if key in doc:
                kw[key] = int(doc[key])
        if "ports" in doc:
            kw["ports"] = tuple(_classes(p, f"port {i}") for i, p in enumerate(doc["ports"]))
        if "latencies" in doc:
            lat = dict(DEFAULT_LATENCIES)
            for name, value in doc["latencies"].items():
                cls = InstrClass(name)
                if cls is C.LOAD:
                    raise InvalidConfig("LOAD latency comes from the cache model")
                lat[cls] = int(value)
            kw["latencies"] = lat
        if "cache_levels" in doc:
            kw["cache_levels"] = tuple(
                CacheLevelConfig(
                    int(lv["size_bytes"]),
                    int(lv["associativity"]),
                    int(lv["hit_latency"]),
                    int(lv.get("line_bytes", 64)),
                )
                for lv in doc["cache_levels"]
            )
        for key in ("smt_shared_levels", "smp_shared_levels"):
            if key in doc and doc[key] is not None:
                kw[key] = tuple(int(i) for i in doc[key])
    except InvalidConfig:
        raise
    except (TypeError, ValueError, KeyError, AttributeError) as exc:
        raise InvalidConfig(f"malformed machine config: {exc}") from None
    return MachineConfig(**kw)


def load_config(text: str | None) -> MachineConfig:
    if text is None:
        return MachineConfig()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"machine config is not valid JSON: {exc}") from None
    return config_from_dict(doc)


def fixed_latency(memory_latency: int = 200, **kw: Any) -> MachineConfig:
    """A config with the cache model disabled: every LOAD costs ``memory_latency``."""
    return MachineConfig(cache_levels=(), memory_latency=memory_latency, **kw)
