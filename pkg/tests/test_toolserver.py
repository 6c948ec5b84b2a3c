from __future__ import annotations

import io
import json
import re

import jsonschema
import pytest

from conftest import PTAB, SAMPLES, SYMS, TRC, run_cli
from rpc import Session
from smtadvisor import service
from smtadvisor.kernelgen import KernelSpec, generate_kernel
from smtadvisor.toolserver import (
    INTERNAL_ERROR,
    INVALID_PARAMS,
    INVALID_REQUEST,
    METHOD_NOT_FOUND,
    PROTOCOL_VERSION,
    TOOL_FAILURE,
    TOOLS,
    encode,
    handle_request,
    playbook_text,
    read_message,
)

TOOL_NAMES = {
    "get_playbook",
    "detect_hotspots",
    "validate_annotations",
    "analyze_region",
    "estimate_gain",
    "full_report",
}


def rpc(method, params=None, rid=1):
    msg = {"jsonrpc": "2.0", "id": rid, "method": method}
    if params is not None:
        msg["params"] = params
    return handle_request(msg)


def call(name, **arguments):
    return rpc("tools/call", {"name": name, "arguments": arguments})


def error_of(reply):
    assert "result" not in reply
    return reply["error"]


@pytest.fixture(scope="module")
def rf_case(tmp_path_factory):
    out = tmp_path_factory.mktemp("rf")
    case = generate_kernel(KernelSpec("RF"))
    case.write(out)
    (rid,) = case.table.regions
    return out, rid


# ---------------------------------------------------------------- playbook


def test_playbook_has_seven_ordered_steps():
    text = playbook_text()
    steps = [int(n) for n in re.findall(r"^## (\d+)\.", text, re.M)]
    assert steps == list(range(1, 8))
    first = text.split("## 1.")[1].split("## 2.")[0]
    assert "profile" in first.lower()


def test_playbook_stable():
    a = call("get_playbook")["result"]["content"][0]["text"]
    b = call("get_playbook")["result"]["content"][0]["text"]
    assert a == b == playbook_text()


# ---------------------------------------------------------------- in-process dispatch


def test_initialize():
    result = rpc("initialize", {})["result"]
    assert result["protocolVersion"] == PROTOCOL_VERSION
    assert result["serverInfo"]["name"] == "advise"


def test_tools_list_matches_registry():
    tools = rpc("tools/list")["result"]["tools"]
    assert len(tools) == 6
    assert {t["name"] for t in tools} == TOOL_NAMES == {t.name for t in TOOLS}
    for t in tools:
        jsonschema.Draft202012Validator.check_schema(t["inputSchema"])
        jsonschema.Draft202012Validator.check_schema(t["outputSchema"])


def test_every_advertised_tool_dispatches():
    for name in TOOL_NAMES:
        reply = call(name)
        # either a result (no required inputs) or a schema error, never "unknown tool"
        if "error" in reply:
            assert reply["error"]["code"] == INVALID_PARAMS
            assert "errors" in reply["error"]["data"]


def test_unknown_tool_names_it():
    err = error_of(call("foo"))
    assert err["code"] == INVALID_PARAMS
    assert "foo" in err["message"]


def test_unknown_method():
    assert error_of(rpc("tools/destroy"))["code"] == METHOD_NOT_FOUND


@pytest.mark.parametrize(
    "arguments,path",
    [
        ({"ptab_text": PTAB, "trace_texts": [TRC]}, ""),
        ({"ptab_text": PTAB, "trace_texts": [TRC], "region": -1}, "region"),
        ({"ptab_text": PTAB, "trace_texts": [TRC], "region": "5"}, "region"),
        ({"ptab_text": PTAB, "trace_texts": [TRC], "region": 5, "colour": 1}, ""),
        ({"ptab_text": PTAB, "trace_texts": [], "region": 5}, "trace_texts"),
        ({"trace_texts": [TRC], "region": 5}, ""),
        ({"ptab_text": PTAB, "trace_texts": [TRC], "region": 5, "private": ["12"]}, "private/0"),
    ],
)
def test_schema_violations(arguments, path):
    err = error_of(rpc("tools/call", {"name": "analyze_region", "arguments": arguments}))
    assert err["code"] == INVALID_PARAMS
    assert path in [e["path"] for e in err["data"]["errors"]]


def test_non_object_arguments():
    err = error_of(rpc("tools/call", {"name": "get_playbook", "arguments": [1]}))
    assert err["code"] == INVALID_PARAMS
    assert error_of(rpc("tools/call", [1]))["code"] == INVALID_PARAMS


@pytest.mark.parametrize(
    "name,arguments,kind",
    [
        ("analyze_region", {"ptab_text": PTAB, "trace_texts": [TRC], "region": 99}, "RegionNotFound"),
        ("analyze_region", {"ptab_text": "PTAB 2\nEND\n", "trace_texts": [TRC], "region": 5}, "UnknownVersion"),
        ("detect_hotspots", {"samples_text": "SMP 1\nEND\n"}, "EmptyProfile"),
        ("detect_hotspots", {"samples": "/nonexistent/x.samples"}, "InvalidParam"),
        ("estimate_gain", {"ptab_text": PTAB, "trace_texts": [TRC], "region": 5, "config_text": "{"}, "InvalidConfig"),
        ("full_report", {"ptab_text": PTAB, "trace_texts": [TRC], "thresholds_text": '{"min_gain": 2}'}, "InvalidConfig"),
    ],
)
def test_tool_failures_carry_error_kind(name, arguments, kind):
    err = error_of(call(name, **arguments))
    assert err["code"] == TOOL_FAILURE
    assert err["data"] == {"kind": kind}


def test_internal_error_keeps_serving(monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("kaput")

    monkeypatch.setattr(service, "hotspots_doc", boom)
    assert error_of(call("detect_hotspots", samples_text=SAMPLES))["code"] == INTERNAL_ERROR
    assert "result" in rpc("ping")


@pytest.mark.parametrize(
    "msg",
    [
        [1, 2],
        "x",
        {"id": 3, "method": "ping"},
        {"jsonrpc": "1.0", "id": 3, "method": "ping"},
        {"jsonrpc": "2.0", "id": 3, "method": 7},
    ],
)
def test_invalid_requests(msg):
    reply = handle_request(msg)
    assert reply["error"]["code"] == INVALID_REQUEST
    assert reply["id"] == (msg.get("id") if isinstance(msg, dict) else None)


def test_notifications_get_no_reply():
    assert handle_request({"jsonrpc": "2.0", "method": "ping"}) is None
    assert handle_request({"jsonrpc": "2.0", "method": "nope"}) is None


def test_inline_and_path_arguments_agree(small_files):
    by_path = call(
        "analyze_region", ptab=str(small_files["ptab"]), traces=[str(small_files["trc"])],
        region=5, symbols=str(small_files["sym"]),
    )
    inline = call("analyze_region", ptab_text=PTAB, trace_texts=[TRC], region=5, symbols_text=SYMS)
    assert by_path["result"] == inline["result"]


# ---------------------------------------------------------------- framing


def test_encode_read_round_trip():
    obj = {"jsonrpc": "2.0", "id": 1, "result": {"text": "héllo"}}
    stream = io.BytesIO(encode(obj) + encode(obj))
    assert json.loads(read_message(stream)) == obj
    assert json.loads(read_message(stream)) == obj
    assert read_message(stream) is None


def test_header_is_case_insensitive_and_extra_headers_ignored():
    body = b'{"a": 1}'
    raw = b"content-length: 8\r\nContent-Type: application/json\r\n\r\n" + body
    assert read_message(io.BytesIO(raw)) == body


def test_missing_length_is_an_error():
    with pytest.raises(ValueError):
        read_message(io.BytesIO(b"X-Thing: 1\r\n\r\n{}"))
    with pytest.raises(ValueError):
        read_message(io.BytesIO(b"Content-Length: ten\r\n\r\n{}"))


def test_truncated_body_is_end_of_stream():
    assert read_message(io.BytesIO(b"Content-Length: 50\r\n\r\n{}")) is None


# ---------------------------------------------------------------- subprocess sessions


def test_session_parse_error_then_recovers():
    with Session() as s:
        s.send_raw(b"Content-Length: 5\r\n\r\n{oops")
        assert s.receive()["error"]["code"] == -32700
        s.send_raw(b"Bogus\r\n\r\n")
        assert s.receive()["error"]["code"] == -32700
        s.send_raw(encode({"jsonrpc": "2.0", "method": "notifications/initialized"}))
        assert "result" in s.request("ping")
        code, rest = s.close()
    assert code == 0 and rest == b""
    assert b"ready" in s.stderr


def test_session_analyze_rf_matches_cli(rf_case):
    out, rid = rf_case
    ptab, trc = str(out / "kernel.ptab"), str(out / "kernel.trc")
    cli = run_cli("check", ptab, trc, "--region", str(rid))
    assert cli.returncode == 0
    with Session() as s:
        text = s.text("analyze_region", ptab=ptab, traces=[trc], region=rid)
        s.close()
    assert text.encode() == cli.stdout
    assert json.loads(text)["dynamic"]["conflict_free"] is True
