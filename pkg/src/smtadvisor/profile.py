"""Sampled-profile ingestion and hotspot ranking."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .errors import EmptyProfile, InvalidParam, MalformedLine, NonPositiveCount, UnknownVersion

DEFAULT_COVERAGE = 0.80


@dataclass(frozen=True)
class BranchEdge:
    from_symbol: str
    to_symbol: str
    count: int


@dataclass(frozen=True)
class SampleProfile:
    samples: dict[str, int]
    branch_edges: tuple[BranchEdge, ...] = ()

    @property
    def total(self) -> int:
        return sum(self.samples.values())


@dataclass(frozen=True)
class HotspotEntry:
    symbol: str
    count: int
    share: float
    cumulative_share: float


@dataclass(frozen=True)
class HotspotReport:
    total: int
    coverage_threshold: float
    entries: tuple[HotspotEntry, ...]
    hot_set: tuple[str, ...]
    hot_edges: tuple[BranchEdge, ...] = ()

    def to_dict(self) -> dict:
        return {
            "total_samples": self.total,
            "coverage_threshold": self.coverage_threshold,
            "entries": [
                {
                    "symbol": e.symbol,
                    "count": e.count,
                    "share": e.share,
                    "cumulative_share": e.cumulative_share,
                }
                for e in self.entries
            ],
            "hot_set": list(self.hot_set),
            "hot_edges": [
                {"from": e.from_symbol, "to": e.to_symbol, "count": e.count}
                for e in self.hot_edges
            ],
        }


def _count(tok: str, lineno: int) -> int:
    try:
        value = int(tok, 10)
    except ValueError:
        raise MalformedLine(lineno, f"count must be an integer, got {tok!r}") from None
    if value <= 0:
        raise NonPositiveCount(f"line {lineno}: count {value} is not positive")
    return value


def parse_profile(text: str) -> SampleProfile:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((lineno, line.split()))
    if not rows or rows[0][1] != ["SMP", "1"]:
        if rows and rows[0][1][0] == "SMP":
            raise UnknownVersion(f"unsupported profile header {' '.join(rows[0][1])!r}")
        raise UnknownVersion("expected 'SMP 1' header")

    samples: Counter[str] = Counter()
    edges: Counter[tuple[str, str]] = Counter()
    body = rows[1:]
    for i, (lineno, toks) in enumerate(body):
        tag = toks[0]
        if tag == "S" and len(toks) == 3:
            samples[toks[1]] += _count(toks[2], lineno)
        elif tag == "L" and len(toks) == 4:
            edges[(toks[1], toks[2])] += _count(toks[3], lineno)
        elif tag == "END" and len(toks) == 1:
            if i != len(body) - 1:
                raise MalformedLine(body[i + 1][0], "content after END")
        else:
            raise MalformedLine(lineno, "expected 'S <symbol> <count>' or 'L <from> <to> <count>'")
    branch = tuple(BranchEdge(f, t, c) for (f, t), c in sorted(edges.items()))
    return SampleProfile(dict(sorted(samples.items())), branch)


def rank_hotspots(
    profile: SampleProfile, coverage_threshold: float = DEFAULT_COVERAGE, max_edges: int = 10
) -> HotspotReport:
    if not profile.samples:
        raise EmptyProfile("profile has no samples")
    if not 0.0 < coverage_threshold <= 1.0:
        raise InvalidParam(f"coverage threshold {coverage_threshold} not in (0, 1]")
    total = profile.total
    ranked = sorted(profile.samples.items(), key=lambda kv: (-kv[1], kv[0]))
    entries = []
    hot: list[str] = []
    running = 0
    for symbol, count in ranked:
        reached = bool(hot) and entries[-1].cumulative_share >= coverage_threshold
        running += count
        entry = HotspotEntry(symbol, count, count / total, running / total)
        entries.append(entry)
        if not reached:
            hot.append(symbol)
    edges = sorted(profile.branch_edges, key=lambda e: (-e.count, e.from_symbol, e.to_symbol))
    return HotspotReport(
        total, coverage_threshold, tuple(entries), tuple(hot), tuple(edges[:max_edges])
    )
