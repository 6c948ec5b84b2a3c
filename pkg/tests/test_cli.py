from __future__ import annotations

import hashlib
import json

import pytest

from conftest import PTAB, SAMPLES, SYMS, TRC, run_cli
from smtadvisor import service
from smtadvisor.cli import main


def sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def test_hotspots_matches_service(small_files):
    res = run_cli("hotspots", str(small_files["samples"]))
    assert res.returncode == 0
    assert res.stdout.decode() == service.hotspots_doc(SAMPLES)


def test_check_matches_service(small_files):
    res = run_cli("check", str(small_files["ptab"]), str(small_files["trc"]), "--region", "5",
                  "--sym", str(small_files["sym"]))
    assert res.returncode == 0
    assert res.stdout.decode() == service.check_doc(PTAB, [TRC], 5, symbols=SYMS)


def test_simulate_matches_service(small_files):
    res = run_cli("simulate", str(small_files["ptab"]), str(small_files["trc"]), "--region", "5",
                  "--o-smt", "10", "--invocation", "step")
    assert res.returncode == 0
    assert res.stdout.decode() == service.simulate_doc(PTAB, [TRC], 5, o_smt=10, invocation="step")


def test_report_matches_service(small_files):
    res = run_cli("report", str(small_files["ptab"]), str(small_files["trc"]),
                  "--samples", str(small_files["samples"]))
    assert res.returncode == 0
    assert res.stdout.decode() == service.report_doc(PTAB, [TRC], samples=SAMPLES)


def test_out_writes_file_and_nothing_to_stdout(small_files, tmp_path):
    target = tmp_path / "nested" / "v.json"
    res = run_cli("validate", str(small_files["ptab"]), str(small_files["trc"]), "--out", str(target))
    assert res.returncode == 0 and res.stdout == b""
    assert target.read_text() == service.validate_doc(PTAB, [TRC])


def test_validate_annotations_inconsistent_is_still_exit_zero(small_files, tmp_path):
    ann = tmp_path / "ann.json"
    ann.write_text(json.dumps({"regions": [{"region_id": 5, "name": "other", "file": "src/walk.c",
                                            "begin_line": 10, "end_line": 20}]}))
    res = run_cli("validate", str(small_files["ptab"]), "--annotations", str(ann))
    doc = json.loads(res.stdout)
    assert res.returncode == 0
    assert doc["valid"] is False and doc["annotations"]["problems"]


@pytest.mark.parametrize(
    "argv,kind",
    [
        (["check", "{ptab}", "{trc}", "--region", "9"], "RegionNotFound"),
        (["hotspots", "{missing}"], "InputError"),
        (["simulate", "{ptab}", "{trc}", "--region", "5", "--config", "{samples}"], "InvalidConfig"),
        (["gen", "--kind", "rf", "--param", "trees=0", "--out-dir", "{tmp}"], "InvalidParam"),
        (["sweep", "--family", "memory", "--granularities", "8,x"], "InvalidParam"),
        (["check", "{ptab}", "{trc}", "--region", "5", "--private", "nope"], "InvalidParam"),
    ],
)
def test_validation_errors_exit_2(small_files, tmp_path, capsys, argv, kind):
    paths = {k: str(v) for k, v in small_files.items()}
    paths.update(missing=str(tmp_path / "none"), tmp=str(tmp_path / "g"))
    code = main([a.format(**paths) for a in argv])
    err = capsys.readouterr().err
    assert code == 2
    assert err.startswith(f"advise: {kind}:")


def test_malformed_input_exit_2(tmp_path):
    bad = tmp_path / "bad.ptab"
    bad.write_text(PTAB.replace("I 1 IALU", "I 1 IALUX"))
    res = run_cli("validate", str(bad))
    assert res.returncode == 2
    assert b"advise: MalformedLine:" in res.stderr


def test_usage_errors_exit_2():
    assert run_cli("check").returncode == 2
    assert run_cli("gen", "--kind", "QUICKSORT", "--out-dir", "x").returncode == 2
    assert run_cli("simulate", "a", "b", "--region", "0", "--o-smt", "-1").returncode == 2


def test_internal_error_exit_3(monkeypatch, capsys, small_files):
    def boom(*a, **k):
        raise RuntimeError("kaput")

    monkeypatch.setattr(service, "hotspots_doc", boom)
    assert main(["hotspots", str(small_files["samples"])]) == 3
    assert "internal error" in capsys.readouterr().err


def test_gen_reports_hashes_of_written_files(tmp_path):
    res = run_cli("gen", "--kind", "vwap", "--out-dir", str(tmp_path / "v"))
    assert res.returncode == 0
    doc = json.loads(res.stdout)
    assert doc["manifest"]["kind"] == "VWAP"
    for name, entry in doc["files"].items():
        assert entry["sha256"] == sha((tmp_path / "v" / name).read_bytes())


def test_gen_and_sweep_repeat_byte_identically(tmp_path):
    def run(sub):
        gen = run_cli("gen", "--kind", "LOB", "--seed", "3", "--out-dir", "case", cwd=tmp_path / sub)
        sweep = run_cli("sweep", "--family", "compute", "--granularities", "8,64,512", "--out-dir", "sw",
                        cwd=tmp_path / sub)
        assert gen.returncode == sweep.returncode == 0
        tree = sorted(p.relative_to(tmp_path / sub) for p in (tmp_path / sub).rglob("*") if p.is_file())
        return gen.stdout, sweep.stdout, {str(p): sha((tmp_path / sub / p).read_bytes()) for p in tree}

    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    assert run("a") == run("b")


def test_sweep_writes_granularity_dirs(tmp_path):
    res = run_cli("sweep", "--family", "memory", "--granularities", "8,16", "--total", "256",
                  "--out-dir", str(tmp_path))
    assert res.returncode == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["g16", "g8"]
    rows = json.loads(res.stdout)["rows"]
    assert [r["granularity"] for r in rows] == [8, 16]
