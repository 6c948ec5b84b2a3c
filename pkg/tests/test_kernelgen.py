from __future__ import annotations

import json
from collections import Counter

import pytest

from smtadvisor.depcheck import find_conflicts
from smtadvisor.errors import InvalidParam
from smtadvisor.kernelgen import (
    KINDS,
    KernelSpec,
    default_params,
    generate_kernel,
    sweep_granularity,
)
from smtadvisor.kernelgen.kernels import DESK_DIVISORS
from smtadvisor.trace_model import (
    BlockExec,
    InstrClass,
    parse_program_table,
    parse_symbols,
    parse_trace,
    serialize_program_table,
    slice_region,
)

BENCHMARKS = [k for k in KINDS if not k.startswith("SWEEP")]
READ_ONLY = ["GEOSPATIAL", "LIDAR", "RF", "GEOIP", "BVH", "ONEHOP"]


@pytest.fixture(scope="module")
def cases():
    return {k: generate_kernel(KernelSpec(k)) for k in KINDS}


def only_region(case):
    (rid,) = case.table.regions
    return slice_region(case.trace, rid)


FULL_SCALE = {
    "GEOSPATIAL": {"objects": 2048, "extent": 1000, "queries": 15, "query_size": 50, "max_results": 32},
    "VWAP": {"price_levels": 100, "skip_levels": 4, "window": 32, "trades": 30},
    "LIDAR": {"obstacles": 1000, "volume": 60, "waypoints": 100, "spacing": 0.2},
    "TIMELINE": {
        "accounts": 1000, "follows_min": 64, "follows_max": 192, "posts_min": 16,
        "posts_max": 80, "reactions_min": 5, "reactions_max": 25, "post_cap": 8,
    },
    "RF": {"trees": 256, "depth": 5, "features": 32},
    "ONEHOP": {"nodes": 200000, "degree": 256, "features": 64},
    "LOB": {"symbols": 256, "updates": 500},
    "GEOIP": {"lookups": 10**6},
    "FRAUD": {"vertices": 10**5, "edges": 3 * 10**5, "tested": 1000, "fanin": 5},
    "BVH": {"points": 2 * 10**5, "trajectory": 10000, "extent": 1000},
}


@pytest.mark.parametrize("kind", BENCHMARKS)
def test_full_scale_defaults(kind):
    params = default_params(kind, "paper")
    for name, value in FULL_SCALE[kind].items():
        assert params[name] == value, name
    if kind == "LOB":
        assert params["symbols"] * params["updates"] == 128000


@pytest.mark.parametrize("kind", BENCHMARKS)
def test_desk_scale_divides_by_documented_factor(kind):
    full, desk = default_params(kind, "paper"), default_params(kind, "desk")
    divided = set()
    for base, factor in DESK_DIVISORS.get(kind, {}).items():
        # a divisor on "follows" covers follows_min and follows_max
        names = [n for n in (base, f"{base}_min", f"{base}_max") if n in full]
        assert names, base
        for name in names:
            assert desk[name] * factor == pytest.approx(full[name], rel=0.01), name
        divided.update(names)
    for name in set(full) - divided:
        assert desk[name] == full[name], name


def test_desk_anchors():
    assert default_params("ONEHOP", "desk")["nodes"] == 2000
    assert default_params("ONEHOP", "desk")["degree"] == 32
    assert default_params("GEOIP", "desk")["lookups"] == 10**4


def test_rf_walk_bounded_by_depth(cases):
    case = cases["RF"]
    region = only_region(case)
    entry = case.table.regions[region.region_id].entry_bb
    leaf = {b for b, blk in case.table.blocks.items() if any(i.cls is InstrClass.STORE for i in blk.instrs)}
    assert len(region.tasks) == 8
    for task in region.tasks:
        counts = Counter(ev.bb_id for ev in task.events)
        internal = sum(n for b, n in counts.items() if b != entry and b not in leaf)
        assert internal <= 5
        assert sum(counts[b] for b in leaf) == 1


def test_geoip_walk_bounded_by_address_bits(cases):
    case = cases["GEOIP"]
    region = only_region(case)
    entry = case.table.regions[region.region_id].entry_bb
    store = {b for b, blk in case.table.blocks.items() if any(i.cls is InstrClass.STORE for i in blk.instrs)}
    assert len(region.tasks) == 10**4
    for task in region.tasks:
        assert sum(1 for ev in task.events if ev.bb_id not in store and ev.bb_id != entry) <= 32


@pytest.mark.parametrize("kind", KINDS)
def test_same_seed_byte_identical(kind, cases):
    again = generate_kernel(KernelSpec(kind))
    assert again.files() == cases[kind].files()


@pytest.mark.parametrize("kind", BENCHMARKS)
def test_other_seed_changes_addresses_not_structure(kind, cases):
    a, b = cases[kind], generate_kernel(KernelSpec(kind, seed=7))
    assert serialize_program_table(a.table) == serialize_program_table(b.table)
    ra, rb = only_region(a), only_region(b)
    assert len(ra.tasks) == len(rb.tasks)
    assert a.files()["kernel.trc"] != b.files()["kernel.trc"]


@pytest.mark.parametrize("kind", KINDS)
def test_files_validate_and_symbols_cover(kind, cases):
    files = cases[kind].files()
    table = parse_program_table(files["kernel.ptab"])
    trace = parse_trace(files["kernel.trc"], table)
    syms = parse_symbols(files["kernel.sym"])
    assert trace == cases[kind].trace
    for ev in trace.events:
        if isinstance(ev, BlockExec) and ev.addresses:
            widths = [i.mem_slot for i in table.blocks[ev.bb_id].instrs if i.mem_slot]
            for addr, width in zip(ev.addresses, widths):
                hit = syms.lookup(addr, addr + width)
                assert len(hit) == 1 and hit[0].lo <= addr and addr + width <= hit[0].hi
    manifest = json.loads(files["manifest.json"])
    assert manifest["kind"] == kind and manifest["seed"] == 42
    regions = json.loads(files["regions.json"])["regions"]
    assert [r["region_id"] for r in regions] == sorted(table.regions)


@pytest.mark.parametrize("kind", READ_ONLY)
def test_read_only_kernels_conflict_free(kind, cases):
    case = cases[kind]
    assert find_conflicts(only_region(case), case.table).conflict_free


def test_lob_has_cross_task_writes(cases):
    rep = find_conflicts(only_region(cases["LOB"]), cases["LOB"].table)
    assert not rep.conflict_free
    assert {c.kind for c in rep.conflicts} >= {"RAW", "WAW"}


@pytest.mark.parametrize("g", [1, 8, 100])
def test_memory_sweep_tasks_are_load_chains(g):
    (case,) = sweep_granularity("SWEEP_MEMORY", [g], total=800)
    region = only_region(case)
    assert len(region.tasks) == max(2, 800 // g)
    for task in region.tasks:
        instrs = [i for ev in task.events for i in case.table.blocks[ev.bb_id].instrs]
        assert len(instrs) == g
        assert all(i.cls is InstrClass.LOAD and i.deps == (1,) for i in instrs)


def test_compute_sweep_has_no_memory_slots():
    for case in sweep_granularity("SWEEP_COMPUTE", [8, 64, 1000]):
        assert all(b.slot_count == 0 for b in case.table.blocks.values())
        assert {i.cls for b in case.table.blocks.values() for i in b.instrs} <= {InstrClass.FADD, InstrClass.FMUL}
        g = case.manifest["params"]["granularity"]
        region = only_region(case)
        assert all(sum(len(case.table.blocks[ev.bb_id].instrs) for ev in t.events) == g for t in region.tasks)


def test_sweep_single_granularity():
    assert len(sweep_granularity("SWEEP_MEMORY", [10])) == 1


@pytest.mark.parametrize(
    "spec",
    [
        KernelSpec("RF", params={"trees": 0}),
        KernelSpec("RF", params={"depth": "five"}),
        KernelSpec("RF", params={"forest": 3}),
        KernelSpec("TIMELINE", params={"follows_min": 20, "follows_max": 10}),
        KernelSpec("GEOIP", params={"max_prefix": 33}),
        KernelSpec("RF", seed=-1),
        KernelSpec("RF", seed=2**64),
        KernelSpec("RF", scale="huge"),
        KernelSpec("QUICKSORT"),
    ],
)
def test_invalid_specs(spec):
    with pytest.raises(InvalidParam):
        generate_kernel(spec)


@pytest.mark.parametrize("args", [("SWEEP_MEMORY", []), ("SWEEP_MEMORY", [0]), ("RF", [8])])
def test_invalid_sweeps(args):
    with pytest.raises(InvalidParam):
        sweep_granularity(*args)


def test_write_creates_all_files(tmp_path, cases):
    written = cases["VWAP"].write(tmp_path / "vwap")
    assert sorted(written) == ["kernel.ptab", "kernel.sym", "kernel.trc", "manifest.json", "regions.json"]
    assert (tmp_path / "vwap" / "kernel.trc").read_text() == cases["VWAP"].files()["kernel.trc"]
