"""``advise`` command line.

Exit codes: 0 success, 2 invalid input, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import __version__, canon, service
from .errors import InvalidParam, ValidationError
from .kernelgen import KINDS, SCALES, KernelSpec, generate_kernel, sweep_document, sweep_granularity
from .kernelgen.sweep import DEFAULT_TOTAL
from .profile import DEFAULT_COVERAGE
from .sim.config import load_config
from .sim.estimate import DEFAULT_O_SMP, DEFAULT_O_SMT, INVOCATIONS, PARTITIONS

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INTERNAL = 3

_FAMILIES = {"compute": "SWEEP_COMPUTE", "memory": "SWEEP_MEMORY"}


class InputError(Exception):
    """An input file could not be read."""


def _read(path: str | None) -> str | None:
    if path is None:
        return None
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _param(spec: str) -> tuple[str, object]:
    key, sep, raw = spec.partition("=")
    if not sep or not key:
        raise InvalidParam(f"parameter {spec!r} must be key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _granularities(text: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise InvalidParam(f"granularities {text!r} must be comma-separated integers") from None
    if not values:
        raise InvalidParam("granularities must be non-empty")
    return values


# ---------------------------------------------------------------- commands


def cmd_hotspots(args: argparse.Namespace) -> None:
    _emit(service.hotspots_doc(_read(args.samples), args.coverage), args.out)


def cmd_validate(args: argparse.Namespace) -> None:
    doc = service.validate_doc(
        _read(args.ptab), [_read(t) for t in args.traces], _read(args.annotations)
    )
    _emit(doc, args.out)


def cmd_check(args: argparse.Namespace) -> None:
    private = [service.parse_private(p) for p in args.private]
    doc = service.check_doc(
        _read(args.ptab),
        [_read(t) for t in args.traces],
        args.region,
        private,
        _read(args.sym),
        args.max_conflicts,
    )
    _emit(doc, args.out)


def cmd_simulate(args: argparse.Namespace) -> None:
    doc = service.simulate_doc(
        _read(args.ptab),
        [_read(t) for t in args.traces],
        args.region,
        _read(args.config),
        args.o_smt,
        args.o_smp,
        args.partition,
        args.invocation,
    )
    _emit(doc, args.out)


def cmd_report(args: argparse.Namespace) -> None:
    doc = service.report_doc(
        _read(args.ptab),
        [_read(t) for t in args.traces],
        _read(args.config),
        _read(args.thresholds),
        _read(args.samples),
        args.coverage,
        args.o_smt,
        args.o_smp,
        args.partition,
    )
    _emit(doc, args.out)


def cmd_gen(args: argparse.Namespace) -> None:
    params = dict(_param(p) for p in args.param)
    case = generate_kernel(KernelSpec(args.kind.upper(), args.scale, params, args.seed))
    written = case.write(args.out_dir)
    doc = {
        "manifest": case.manifest,
        "files": {
            name: {"path": str(path), "sha256": canon.sha256_file(path)}
            for name, path in sorted(written.items())
        },
    }
    _emit(canon.dumps(doc), args.out)


def cmd_sweep(args: argparse.Namespace) -> None:
    family = _FAMILIES[args.family]
    params = dict(_param(p) for p in args.param)
    cases = sweep_granularity(family, _granularities(args.granularities), args.seed, args.total, params)
    if args.out_dir is not None:
        for case in cases:
            case.write(Path(args.out_dir) / f"g{case.manifest['params']['granularity']}")
    doc = sweep_document(family, cases, load_config(_read(args.config)), args.o_smt, args.o_smp)
    _emit(canon.dumps(doc), args.out)


def cmd_serve(args: argparse.Namespace) -> None:
    from .toolserver import serve_stdio

    raise SystemExit(serve_stdio())


# ---------------------------------------------------------------- parser


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="advise", description="SMT parallelization advisor for latency-critical loops."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def out(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", help="write the document here instead of stdout")

    def overheads(p: argparse.ArgumentParser) -> None:
        p.add_argument("--o-smt", type=_nonneg, default=DEFAULT_O_SMT, help="SMT fork-join overhead (cycles)")
        p.add_argument("--o-smp", type=_nonneg, default=DEFAULT_O_SMP, help="SMP fork-join overhead (cycles)")

    p = sub.add_parser("hotspots", help="rank functions of a sampling profile")
    p.add_argument("samples")
    p.add_argument("--coverage", type=float, default=DEFAULT_COVERAGE)
    out(p)
    p.set_defaults(func=cmd_hotspots)

    p = sub.add_parser("validate", help="validate a program table, traces and annotations")
    p.add_argument("ptab")
    p.add_argument("traces", nargs="*")
    p.add_argument("--annotations")
    out(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check", help="static and dynamic dependence check of one region")
    p.add_argument("ptab")
    p.add_argument("traces", nargs="+")
    p.add_argument("--region", type=int, required=True)
    p.add_argument("--private", action="append", default=[], metavar="LO:HI")
    p.add_argument("--sym")
    p.add_argument("--max-conflicts", type=int, default=100)
    out(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="sequential vs SMT vs SMP cycle estimate for one region")
    p.add_argument("ptab")
    p.add_argument("traces", nargs="+")
    p.add_argument("--region", type=int, required=True)
    p.add_argument("--config")
    overheads(p)
    p.add_argument("--partition", choices=PARTITIONS, default="block")
    p.add_argument("--invocation", choices=INVOCATIONS, default="region")
    out(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="gate every region and write the advice report")
    p.add_argument("ptab")
    p.add_argument("traces", nargs="+")
    p.add_argument("--config")
    p.add_argument("--thresholds")
    p.add_argument("--samples")
    p.add_argument("--coverage", type=float, default=DEFAULT_COVERAGE)
    overheads(p)
    p.add_argument("--partition", choices=PARTITIONS, default="block")
    out(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("gen", help="generate a synthetic kernel case")
    p.add_argument("--kind", required=True, type=str.upper, choices=KINDS)
    p.add_argument("--scale", choices=SCALES, default="desk")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out-dir", required=True)
    out(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sweep", help="gain curve over task granularities")
    p.add_argument("--family", required=True, choices=sorted(_FAMILIES))
    p.add_argument(
        "--granularities",
        default=",".join(str(2**k) for k in range(3, 14)),
        help="comma-separated micro-ops per task",
    )
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--total", type=int, default=DEFAULT_TOTAL, help="micro-ops across all tasks")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--config")
    overheads(p)
    p.add_argument("--out-dir", help="also write each generated case here")
    out(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="JSON-RPC tool server on stdio")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValidationError, InputError) as exc:
        kind = exc.kind if isinstance(exc, ValidationError) else "InputError"
        print(f"advise: {kind}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"advise: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
