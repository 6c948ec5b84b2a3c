from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]

PTAB = """\
PTAB 1
# one function, a walk block and a scratch store
FUNC 0 walk
FUNC 1 helper
BB 0 0
I 0 LOAD - M8
I 1 IALU 1
I 2 STORE 1 M8
BB 1 0
I 0 LOAD 1 M8
I 1 BR 1
BB 2 1
I 0 FADD -
I 1 FMUL 1,1
REGION 5 walk_loop src/walk.c:10-20 0
END
"""

TRC = """\
TRC 1
T 0
B 2
R+ 5 0
B 0 0x1000 0x2000
B 1 0x1008
R- 5
R+ 5 1
B 0 0x1040 0x2040
B 1 0x1048
R- 5
R+ 5 2
B 0 0x1080 0x2000
R- 5
END
"""

SAMPLES = """\
SMP 1
S kd_range_query 600
S bst_lookup 250
S parse 100
S log_line 50
L kd_range_query bst_lookup 40
END
"""

SYMS = """\
SYM nodes 0x1000 0x1100
SYM scratch 0x2000 0x2100
"""


def run_cli(*args: str, stdin: bytes | None = None, cwd: Path | None = None):
    return subprocess.run(
        [sys.executable, "-m", "smtadvisor.cli", *args],
        input=stdin,
        capture_output=True,
        cwd=cwd,
        timeout=600,
    )


@pytest.fixture
def small_files(tmp_path: Path) -> dict[str, Path]:
    files = {"ptab": PTAB, "trc": TRC, "samples": SAMPLES, "sym": SYMS}
    out = {}
    for name, text in files.items():
        p = tmp_path / f"small.{name}"
        p.write_text(text)
        out[name] = p
    return out


# ---------------------------------------------------------------- acceptance summary

_CRITERIA: dict[int, tuple[str, bool]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    number, title = mark.args
    _CRITERIA[number] = (title, rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
