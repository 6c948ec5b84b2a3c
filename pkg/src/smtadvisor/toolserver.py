"""JSON-RPC 2.0 tool server over stdio with ``Content-Length`` framing.

Every tool returns the same canonical document the matching CLI command
prints, wrapped as a single text content item.
"""

from __future__ import annotations

import json
import logging
import sys
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, BinaryIO, Callable

import jsonschema

from . import __version__, service
from .errors import AdviseError, InvalidParam

log = logging.getLogger("smtadvisor.toolserver")

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32603
TOOL_FAILURE = -32000

PROTOCOL_VERSION = "2024-11-05"


def playbook_text() -> str:
    return resources.files("smtadvisor").joinpath("data/playbook.md").read_text(encoding="utf-8")


# ---------------------------------------------------------------- schemas


def _file(name: str, what: str) -> dict[str, Any]:
    return {
        name: {"type": "string", "description": f"path to the {what} file"},
        f"{name}_text": {"type": "string", "description": f"inline {what} content"},
    }


_TRACES = {
    "traces": {"type": "array", "items": {"type": "string"}, "minItems": 1,
               "description": "paths to trace files"},
    "trace_texts": {"type": "array", "items": {"type": "string"}, "minItems": 1,
                    "description": "inline trace contents"},
}
_REGION = {"region": {"type": "integer", "minimum": 0}}
_OVERHEADS = {
    "o_smt": {"type": "integer", "minimum": 0},
    "o_smp": {"type": "integer", "minimum": 0},
    "partition": {"enum": ["block", "cyclic"]},
}
_COVERAGE = {"coverage": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}}


def _one_of(*names: str) -> dict[str, Any]:
    return {"anyOf": [{"required": [n]} for n in names]}


def _schema(props: dict[str, Any], required: tuple[str, ...] = (), *need: tuple[str, ...]) -> dict:
    schema: dict[str, Any] = {
        "type": "object",
        "properties": props,
        "additionalProperties": False,
    }
    if required:
        schema["required"] = list(required)
    if need:
        schema["allOf"] = [_one_of(*pair) for pair in need]
    return schema


_OUTPUT = {
    "type": "object",
    "properties": {
        "content": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"type": {"const": "text"}, "text": {"type": "string"}},
                "required": ["type", "text"],
            },
        },
        "isError": {"type": "boolean"},
    },
    "required": ["content"],
}


# ---------------------------------------------------------------- inputs


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidParam(f"cannot read {path}: {exc.strerror}") from None


def _text(args: dict[str, Any], name: str) -> str | None:
    if f"{name}_text" in args:
        return args[f"{name}_text"]
    if name in args:
        return _read(args[name])
    return None


def _traces(args: dict[str, Any]) -> list[str]:
    if "trace_texts" in args:
        return list(args["trace_texts"])
    return [_read(p) for p in args.get("traces", [])]


# ---------------------------------------------------------------- handlers


def _get_playbook(args: dict[str, Any]) -> str:
    return playbook_text()


def _detect_hotspots(args: dict[str, Any]) -> str:
    return service.hotspots_doc(_text(args, "samples"), args.get("coverage", 0.80))


def _validate_annotations(args: dict[str, Any]) -> str:
    return service.validate_doc(_text(args, "ptab"), _traces(args), _text(args, "annotations"))


def _analyze_region(args: dict[str, Any]) -> str:
    private = [service.parse_private(s) for s in args.get("private", [])]
    return service.check_doc(
        _text(args, "ptab"),
        _traces(args),
        args["region"],
        private,
        _text(args, "symbols"),
        args.get("max_conflicts", 100),
    )


def _estimate_gain(args: dict[str, Any]) -> str:
    return service.simulate_doc(
        _text(args, "ptab"),
        _traces(args),
        args["region"],
        _text(args, "config"),
        args.get("o_smt", 200),
        args.get("o_smp", 2000),
        args.get("partition", "block"),
        args.get("invocation", "region"),
    )


def _full_report(args: dict[str, Any]) -> str:
    return service.report_doc(
        _text(args, "ptab"),
        _traces(args),
        _text(args, "config"),
        _text(args, "thresholds"),
        _text(args, "samples"),
        args.get("coverage", 0.80),
        args.get("o_smt", 200),
        args.get("o_smp", 2000),
        args.get("partition", "block"),
    )


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    description: str
    input_schema: dict[str, Any]
    handler: Callable[[dict[str, Any]], str]
    output_schema: dict[str, Any] = field(default_factory=lambda: _OUTPUT)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "inputSchema": self.input_schema,
            "outputSchema": self.output_schema,
        }


TOOLS: tuple[ToolDescriptor, ...] = (
    ToolDescriptor(
        "get_playbook",
        "Return the step-by-step parallelization playbook (Markdown).",
        _schema({}),
        _get_playbook,
    ),
    ToolDescriptor(
        "detect_hotspots",
        "Rank functions of a sampling profile and mark the hot set.",
        _schema({**_file("samples", "SMP 1 profile"), **_COVERAGE}, (), ("samples", "samples_text")),
        _detect_hotspots,
    ),
    ToolDescriptor(
        "validate_annotations",
        "Validate a program table, optional traces and optional region annotations.",
        _schema(
            {**_file("ptab", "program table"), **_TRACES, **_file("annotations", "region annotation")},
            (),
            ("ptab", "ptab_text"),
        ),
        _validate_annotations,
    ),
    ToolDescriptor(
        "analyze_region",
        "Static screening and cross-task RAW/WAR/WAW conflict detection for one region.",
        _schema(
            {
                **_file("ptab", "program table"),
                **_TRACES,
                **_REGION,
                **_file("symbols", "symbol table"),
                "private": {"type": "array", "items": {"type": "string", "pattern": "^[^:]+:[^:]+$"}},
                "max_conflicts": {"type": ["integer", "null"], "minimum": 1},
            },
            ("region",),
            ("ptab", "ptab_text"),
            ("traces", "trace_texts"),
        ),
        _analyze_region,
    ),
    ToolDescriptor(
        "estimate_gain",
        "Simulate a region sequentially, as two SMT threads and on two cores.",
        _schema(
            {
                **_file("ptab", "program table"),
                **_TRACES,
                **_REGION,
                **_file("config", "machine config"),
                **_OVERHEADS,
                "invocation": {"enum": ["region", "step"]},
            },
            ("region",),
            ("ptab", "ptab_text"),
            ("traces", "trace_texts"),
        ),
        _estimate_gain,
    ),
    ToolDescriptor(
        "full_report",
        "Run the whole gate over every region and return the advice report.",
        _schema(
            {
                **_file("ptab", "program table"),
                **_TRACES,
                **_file("config", "machine config"),
                **_file("thresholds", "gate thresholds"),
                **_file("samples", "SMP 1 profile"),
                **_COVERAGE,
                **_OVERHEADS,
            },
            (),
            ("ptab", "ptab_text"),
            ("traces", "trace_texts"),
        ),
        _full_report,
    ),
)

_BY_NAME = {t.name: t for t in TOOLS}


# ---------------------------------------------------------------- dispatch


class RpcError(Exception):
    def __init__(self, code: int, message: str, data: Any = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.data = data


def _error(rid: Any, exc: RpcError) -> dict[str, Any]:
    err: dict[str, Any] = {"code": exc.code, "message": exc.message}
    if exc.data is not None:
        err["data"] = exc.data
    return {"jsonrpc": "2.0", "id": rid, "error": err}


def call_tool(name: Any, arguments: Any) -> dict[str, Any]:
    tool = _BY_NAME.get(name) if isinstance(name, str) else None
    if tool is None:
        raise RpcError(INVALID_PARAMS, f"unknown tool {name!r}")
    if arguments is None:
        arguments = {}
    errors = sorted(
        jsonschema.Draft202012Validator(tool.input_schema).iter_errors(arguments),
        key=lambda e: list(e.absolute_path),
    )
    if errors:
        detail = [
            {"path": "/".join(str(p) for p in e.absolute_path), "message": e.message}
            for e in errors
        ]
        raise RpcError(INVALID_PARAMS, f"invalid arguments for {name}", {"errors": detail})
    try:
        text = tool.handler(arguments)
    except AdviseError as exc:
        raise RpcError(TOOL_FAILURE, str(exc), {"kind": exc.kind}) from None
    return {"content": [{"type": "text", "text": text}], "isError": False}


def _dispatch(method: str, params: Any) -> Any:
    if method == "initialize":
        return {
            "protocolVersion": PROTOCOL_VERSION,
            "serverInfo": {"name": "advise", "version": __version__},
            "capabilities": {"tools": {}},
        }
    if method == "ping":
        return {}
    if method == "tools/list":
        return {"tools": [t.to_dict() for t in TOOLS]}
    if method == "tools/call":
        if not isinstance(params, dict):
            raise RpcError(INVALID_PARAMS, "tools/call params must be an object")
        return call_tool(params.get("name"), params.get("arguments"))
    raise RpcError(METHOD_NOT_FOUND, f"method not found: {method}")


def handle_request(msg: Any) -> dict[str, Any] | None:
    """Answer one decoded JSON-RPC message; notifications get ``None``."""
    if not isinstance(msg, dict) or msg.get("jsonrpc") != "2.0" or not isinstance(
        msg.get("method"), str
    ):
        rid = msg.get("id") if isinstance(msg, dict) else None
        return _error(rid, RpcError(INVALID_REQUEST, "invalid JSON-RPC 2.0 request"))
    rid = msg.get("id")
    notification = "id" not in msg
    try:
        result = _dispatch(msg["method"], msg.get("params"))
    except RpcError as exc:
        if notification:
            return None
        return _error(rid, exc)
    except Exception as exc:  # tool bug; keep serving
        log.exception("internal error in %s", msg["method"])
        if notification:
            return None
        return _error(rid, RpcError(INTERNAL_ERROR, f"internal error: {exc}"))
    if notification:
        return None
    return {"jsonrpc": "2.0", "id": rid, "result": result}


# ---------------------------------------------------------------- transport


def encode(obj: dict[str, Any]) -> bytes:
    body = json.dumps(obj, ensure_ascii=False).encode("utf-8")
    return f"Content-Length: {len(body)}\r\n\r\n".encode("ascii") + body


def read_message(stream: BinaryIO) -> bytes | None:
    """Read one framed body; ``None`` at end of stream."""
    length = None
    while True:
        line = stream.readline()
        if not line:
            return None
        if line in (b"\r\n", b"\n"):
            if length is None:
                raise ValueError("missing Content-Length header")
            break
        key, sep, value = line.decode("ascii", errors="replace").partition(":")
        if sep and key.strip().lower() == "content-length":
            try:
                length = int(value.strip())
            except ValueError:
                raise ValueError(f"bad Content-Length {value.strip()!r}") from None
    body = stream.read(length)
    if len(body) < length:
        return None
    return body


class Server:
    def __init__(self, stdin: BinaryIO, stdout: BinaryIO):
        self.stdin = stdin
        self.stdout = stdout
        self._lock = threading.Lock()

    def send(self, obj: dict[str, Any]) -> None:
        data = encode(obj)
        with self._lock:
            self.stdout.write(data)
            self.stdout.flush()

    def serve(self) -> int:
        log.info("advise tool server %s ready", __version__)
        while True:
            try:
                body = read_message(self.stdin)
            except ValueError as exc:
                log.error("framing error: %s", exc)
                self.send(_error(None, RpcError(PARSE_ERROR, str(exc))))
                continue
            if body is None:
                log.info("input closed, exiting")
                return 0
            try:
                msg = json.loads(body.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                self.send(_error(None, RpcError(PARSE_ERROR, f"parse error: {exc}")))
                continue
            log.debug("request %s", msg.get("method") if isinstance(msg, dict) else msg)
            reply = handle_request(msg)
            if reply is not None:
                self.send(reply)


def serve_stdio() -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    return Server(sys.stdin.buffer, sys.stdout.buffer).serve()
