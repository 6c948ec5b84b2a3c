"""Acceptance criteria, one test per criterion.

A pass/fail line per criterion is printed in the terminal summary.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import time
from pathlib import Path

import pytest

from conftest import PTAB, SAMPLES, SYMS, TRC, run_cli
from mutations import MUTATIONS, parse_mutant
from oracles import as_tuples, brute_force_conflicts, random_region, random_table
from rpc import Session
from smtadvisor.depcheck import find_conflicts
from smtadvisor.errors import AdviseError
from smtadvisor.kernelgen import KINDS, sweep_document, sweep_granularity
from smtadvisor.sim import load_config
from smtadvisor.toolserver import INVALID_PARAMS, METHOD_NOT_FOUND, TOOL_FAILURE, playbook_text
from test_sim import CACHE_SCENARIOS, HAND_SCHEDULES, run_both

BENCHMARKS = [k for k in KINDS if not k.startswith("SWEEP")]
GRID = [2**k for k in range(3, 14)]


def sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def cli_json(*args, cwd=None):
    res = run_cli(*args, cwd=cwd)
    assert res.returncode == 0, res.stderr.decode()
    return json.loads(res.stdout)


@pytest.mark.criterion(1, "dependence oracle equivalence, 1000 regions, < 60 s")
def test_dependence_oracle_equivalence():
    table = random_table()
    rng = random.Random(20240601)
    regions = [random_region(rng) for _ in range(1000)]
    assert all(len(r.tasks) <= 64 for r in regions)
    start = time.perf_counter()
    mismatches = 0
    for r in regions:
        if as_tuples(find_conflicts(r, table, max_conflicts=None)) != brute_force_conflicts(r):
            mismatches += 1
    elapsed = time.perf_counter() - start
    print(f"criterion 1: {mismatches} mismatches, {elapsed:.1f} s")
    assert mismatches == 0
    assert elapsed < 60


@pytest.mark.criterion(2, "simulator hand schedules and LRU cache oracle")
def test_simulator_micro_oracles():
    assert len(HAND_SCHEDULES) >= 10
    assert len(CACHE_SCENARIOS) >= 5
    for label, thunk, expected in HAND_SCHEDULES:
        assert thunk() == expected, label
    for name, (cfg, accesses) in CACHE_SCENARIOS.items():
        view, ref, got, want = run_both(cfg, accesses)
        assert got == want, name
        assert view.misses == ref.misses, name


@pytest.mark.criterion(3, "memory sweep shows an SMT-favourable granularity window")
def test_memory_granularity_window():
    doc = cli_json("sweep", "--family", "memory", "--granularities", ",".join(map(str, GRID)))
    rows = doc["rows"]
    assert [r["granularity"] for r in rows] == GRID
    assert (doc["o_smt"], doc["o_smp"]) == (200, 2000)
    for r in rows:
        print(f"g={r['granularity']:5d} smt={r['gain_smt']:+.3f} smp={r['gain_smp']:+.3f}")
    # (a) the two smallest granularities lose on both
    for r in rows[:2]:
        assert r["gain_smt"] < 0 and r["gain_smp"] < 0
    # (b) SMT wins on a contiguous, non-empty run
    window = [i for i, r in enumerate(rows) if r["gain_smt"] > 0 and r["gain_smt"] > r["gain_smp"]]
    assert window
    assert window == list(range(window[0], window[-1] + 1))
    # (c) two cores win at the largest granularity
    assert rows[-1]["gain_smp"] >= rows[-1]["gain_smt"]


@pytest.mark.criterion(4, "saturated compute sweep gains nothing from SMT")
def test_compute_saturation():
    rows = cli_json("sweep", "--family", "compute", "--granularities", ",".join(map(str, GRID)))["rows"]
    # zero SMT overhead is the case most favourable to SMT
    cases = sweep_granularity("SWEEP_COMPUTE", GRID, total=16384)
    rows += sweep_document("SWEEP_COMPUTE", cases, load_config(None), o_smt=0, o_smp=0)["rows"]
    saturated = [r for r in rows if r["solo_port_utilization"] >= 0.95]
    assert saturated
    for r in saturated:
        assert r["gain_smt"] <= 0.05, r


@pytest.fixture(scope="module")
def desk_cases(tmp_path_factory):
    root = tmp_path_factory.mktemp("desk")
    start = time.perf_counter()
    for kind in BENCHMARKS:
        cli_json("gen", "--kind", kind, "--out-dir", str(root / kind))
    return root, time.perf_counter() - start


@pytest.mark.criterion(5, "end-to-end verdicts over the 10 desk kernels, < 120 s")
def test_end_to_end_verdicts(desk_cases):
    root, gen_seconds = desk_cases
    start = time.perf_counter()
    verdicts = {}
    for kind in BENCHMARKS:
        doc = cli_json("report", str(root / kind / "kernel.ptab"), str(root / kind / "kernel.trc"))
        (verdict,) = doc["verdicts"]
        verdicts[kind] = verdict
    elapsed = time.perf_counter() - start
    for kind, v in verdicts.items():
        gains = v["gains"] or {}
        print(f"{kind:11s} {v['status']:10s} {v['reason'] or '':17s} smt={gains.get('gain_smt')}")
    print(f"criterion 5: generation {gen_seconds:.1f} s, reports {elapsed:.1f} s")

    assert (verdicts["FRAUD"]["status"], verdicts["FRAUD"]["reason"]) == ("REJECT", "NEGATIVE_GAIN")
    for kind in ("ONEHOP", "BVH"):
        assert (verdicts[kind]["status"], verdicts[kind]["reason"]) == ("REJECT", "TOO_FINE_GRAINED")
    rest = [v for k, v in verdicts.items() if k not in ("FRAUD", "ONEHOP", "BVH")]
    accepted = [
        v for v in rest
        if v["status"] in ("ACCEPT_SMT", "ACCEPT_SMP")
        and v["conflicts"]["conflict_free"]
        and max(v["gains"]["gain_smt"], v["gains"]["gain_smp"]) > 0
    ]
    assert len(accepted) >= 6
    speedups = [1 + v["gains"]["gain_smt"] for v in accepted]
    geomean = math.exp(sum(map(math.log, speedups)) / len(speedups)) - 1
    print(f"criterion 5: {len(accepted)} accepted, geomean gain_smt {geomean:.3f}")
    assert geomean > 0
    assert gen_seconds + elapsed < 120


def _every_command(workdir: Path) -> dict[str, str]:
    """Run each CLI command once inside ``workdir``; hash stdout and written files."""
    workdir.mkdir()
    for name, text in {"s.ptab": PTAB, "s.trc": TRC, "s.samples": SAMPLES, "s.sym": SYMS}.items():
        (workdir / name).write_text(text)
    commands = {
        "hotspots": ["hotspots", "s.samples"],
        "validate": ["validate", "s.ptab", "s.trc"],
        "check": ["check", "s.ptab", "s.trc", "--region", "5", "--sym", "s.sym"],
        "simulate": ["simulate", "s.ptab", "s.trc", "--region", "5"],
        "report": ["report", "s.ptab", "s.trc", "--samples", "s.samples"],
        "gen": ["gen", "--kind", "LOB", "--out-dir", "lob"],
        "report-lob": ["report", "lob/kernel.ptab", "lob/kernel.trc", "--out", "lob/report.json"],
        "sweep": ["sweep", "--family", "memory", "--granularities", "8,256,4096", "--out-dir", "sweep"],
    }
    hashes = {}
    for label, argv in commands.items():
        res = run_cli(*argv, cwd=workdir)
        assert res.returncode == 0, (label, res.stderr)
        hashes[label] = sha(res.stdout)
    with Session(cwd=workdir) as s:
        s.request("tools/list")
        s.text("full_report", ptab="s.ptab", traces=["s.trc"], samples="s.samples")
        s.call("nope")
        s.request("nope/method")
        s.close()
    hashes["serve"] = sha(b"".join(s.transcript))
    for path in sorted(workdir.rglob("*")):
        if path.is_file():
            hashes[str(path.relative_to(workdir))] = sha(path.read_bytes())
    return hashes


@pytest.mark.criterion(6, "byte-identical reruns of every command")
def test_determinism(tmp_path):
    first = _every_command(tmp_path / "a")
    second = _every_command(tmp_path / "b")
    assert first.keys() == second.keys()
    assert len(first) > 9
    assert first == second


@pytest.mark.criterion(7, "scripted tool-server session")
def test_protocol_session(desk_cases, small_files):
    root, _ = desk_cases
    rf_ptab, rf_trc = str(root / "RF" / "kernel.ptab"), str(root / "RF" / "kernel.trc")
    files = {k: str(v) for k, v in small_files.items()}
    expected = {
        "detect_hotspots": run_cli("hotspots", files["samples"]).stdout,
        "validate_annotations": run_cli("validate", files["ptab"], files["trc"]).stdout,
        "analyze_region": run_cli("check", rf_ptab, rf_trc, "--region", "0").stdout,
        "estimate_gain": run_cli("simulate", files["ptab"], files["trc"], "--region", "5").stdout,
        "full_report": run_cli("report", files["ptab"], files["trc"], "--samples", files["samples"]).stdout,
    }
    with Session() as s:
        assert s.request("initialize", {})["result"]["protocolVersion"]
        tools = s.request("tools/list")["result"]["tools"]
        assert len(tools) == 6
        assert s.text("get_playbook") == playbook_text()
        got = {
            "detect_hotspots": s.text("detect_hotspots", samples=files["samples"]),
            "validate_annotations": s.text("validate_annotations", ptab=files["ptab"], traces=[files["trc"]]),
            "analyze_region": s.text("analyze_region", ptab=rf_ptab, traces=[rf_trc], region=0),
            "estimate_gain": s.text("estimate_gain", ptab_text=PTAB, trace_texts=[TRC], region=5),
            "full_report": s.text("full_report", ptab=files["ptab"], traces=[files["trc"]], samples_text=SAMPLES),
        }
        assert s.request("no/such/method")["error"]["code"] == METHOD_NOT_FOUND
        violation = s.call("analyze_region", ptab=rf_ptab, traces=[rf_trc], region="zero")["error"]
        assert violation["code"] == INVALID_PARAMS
        assert s.call("foo")["error"]["code"] == INVALID_PARAMS
        failure = s.call("analyze_region", ptab=rf_ptab, traces=[rf_trc], region=42)["error"]
        assert (failure["code"], failure["data"]["kind"]) == (TOOL_FAILURE, "RegionNotFound")
        code, rest = s.close()
    assert code == 0 and rest == b""
    assert {name: text.encode() for name, text in got.items()} == expected
    assert json.loads(got["analyze_region"])["dynamic"]["conflict_free"] is True


@pytest.mark.criterion(8, "format mutation suite")
def test_mutation_suite():
    assert len(MUTATIONS) >= 30
    assert {fmt for _, fmt, _, _ in MUTATIONS} == {"ptab", "trc", "samples"}
    for label, fmt, text, kind in MUTATIONS:
        try:
            parse_mutant(fmt, text)
        except AdviseError as exc:
            assert exc.kind == kind, label
        else:
            pytest.fail(f"mutant accepted: {label}")
