from __future__ import annotations

import json
import time
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from safexec.categories import ExceptionKind
from safexec.executor import Status
from safexec.pipeline import run_source
from safexec.policy import ToolSpec, parse_tool_signature
from safexec.tools import (
    ArgError,
    InProcessTransport,
    ScriptedTransport,
    SocketTransport,
    StubClock,
    ToolRegistrationError,
    ToolRegistry,
    ToolServer,
    check_args,
    redact_by_name,
)

K = ExceptionKind


def tool(sig: str, **kw) -> ToolSpec:
    return replace(parse_tool_signature(sig), **kw)


def policy_with(eval_policy, *specs, max_tool_calls=10, **limits):
    return replace(eval_policy.with_tools(*specs),
                   limits=replace(eval_policy.limits, max_tool_calls=max_tool_calls, **limits))


def scripted_run(eval_policy, spec, steps, src, **policy_kw):
    clock = StubClock()
    policy = policy_with(eval_policy, spec, **policy_kw)
    registry = ToolRegistry(transport=ScriptedTransport(steps, clock), clock=clock)
    registry.register_tool(spec, lambda *a: None)
    return run_source(src, policy, registry, clock=clock).outcome, clock


def test_register_and_resolve(eval_policy):
    spec = tool("add_to_db(record: dict)")
    policy = policy_with(eval_policy, spec)
    rows = []
    registry = ToolRegistry()
    registry.register_tool(spec, lambda record: rows.append(record) or len(rows))
    assert "add_to_db" in registry
    out = run_source('n = add_to_db({"a": 1})', policy, registry).outcome
    assert out.completed and out.final_variables == {"n": "1"} and rows == [{"a": 1}]


def test_duplicate_register():
    registry = ToolRegistry()
    registry.register_tool(tool("t(x: int)"))
    with pytest.raises(ToolRegistrationError):
        registry.register_tool(tool("t(x: int)"))


@pytest.mark.parametrize("value", [1, "s", [1], {"k": None}, None, 2.5, True])
def test_any_slot(value):
    check_args(tool("t(x: any)"), [value])


def test_check_args_examples():
    check_args(tool("search_wikipedia(query: string)"), ["ada lovelace"])
    with pytest.raises(ArgError) as info:
        check_args(tool("func(s: string)"), [1234])
    assert info.value.slot == "s" and info.value.kind == "InvalidArguments"
    with pytest.raises(ArgError) as info:
        check_args(tool("func(s: string)"), [])
    assert "missing required" in str(info.value)


def test_int_satisfies_float_but_bool_not_int():
    check_args(tool("f(x: float)"), [3])
    with pytest.raises(ArgError):
        check_args(tool("f(x: int)"), [True])


def test_flaky_then_success(eval_policy):
    spec = tool("api(q: string)", max_retries=3, backoff_base=100)
    steps = [{"outcome": "error", "reason": "boom"}, {"outcome": "error"}, {"outcome": "ok", "value": 7}]
    out, clock = scripted_run(eval_policy, spec, steps, 'r = api("x")')
    assert out.completed and out.final_variables == {"r": "7"}
    (record,) = out.tool_trace
    assert record.attempts == 3 and record.backoff_delays == [100, 200]
    assert clock.sleeps == [100, 200]
    assert record.final["status"] == "success"


def test_timeout_no_retry(eval_policy):
    spec = tool("slow(q: string)", timeout=50, max_retries=0)
    out, _ = scripted_run(eval_policy, spec, [{"outcome": "ok", "value": 1, "delay_ms": 100}], 'r = slow("x")')
    assert out.kind is K.ToolError
    (record,) = out.tool_trace
    assert record.attempts == 1 and record.final["reason"] == "timeout"
    assert "r" not in out.final_variables


def test_real_sleep_timeout(eval_policy):
    spec = tool("slow(q: string)", timeout=50, max_retries=0)
    policy = policy_with(eval_policy, spec)
    registry = ToolRegistry(transport=InProcessTransport())
    registry.register_tool(spec, lambda q: time.sleep(0.1) or 1)
    start = time.perf_counter()
    out = run_source('r = slow("x")', policy, registry).outcome
    assert out.kind is K.ToolError and out.tool_trace[0].attempts == 1
    assert time.perf_counter() - start < 0.1 + 0.05


def test_hallucinated_tool_has_no_record(eval_policy):
    policy = policy_with(eval_policy, tool("search_wikipedia(query: string)"))
    out = run_source('book_flight("NYC")', policy, validate=False).outcome
    assert out.kind is K.FunctionNotAllowedError and out.tool_trace == []


def test_exhaustion_message(eval_policy):
    spec = tool("api(q: string)", max_retries=2, backoff_base=10)
    out, _ = scripted_run(eval_policy, spec, [{"outcome": "error"}] * 3, 'api("x")')
    assert out.kind is K.ToolError and "maximum retries reached" in out.exception.message


def test_budget(eval_policy):
    spec = tool("api(q: string)")
    steps = [{"outcome": "ok", "value": 1}] * 5
    out, _ = scripted_run(eval_policy, spec, steps, 'for i in range(5):\n    api("x")\n', max_tool_calls=3)
    assert out.kind is K.ToolError and len(out.tool_trace) == 3


def test_wrong_argument_type_is_type_error(eval_policy):
    out, _ = scripted_run(eval_policy, tool("api(q: string)"), [], "api(1234)")
    assert out.kind is K.TypeError and out.tool_trace == []


def test_failed_call_leaves_globals(eval_policy):
    spec = tool("api(q: string)", max_retries=1, backoff_base=1)
    out, _ = scripted_run(eval_policy, spec, [{"outcome": "error"}] * 2, 'x = 1\nx = api("q")\n')
    assert out.final_variables == {"x": "1"}


def test_backoff_sleep_is_cut_at_deadline(eval_policy):
    spec = tool("api(q: string)", max_retries=3, backoff_base=400)
    out, clock = scripted_run(eval_policy, spec, [{"outcome": "error"}] * 4, 'api("x")', wall_clock_timeout=1000)
    assert out.kind is K.TimeoutException
    assert out.tool_trace[0].backoff_delays == [400, 800]
    assert clock.sleeps == [400, 600]


def test_scripted_from_json():
    transport = ScriptedTransport.from_json('[{"outcome": "ok", "value": [1, 2]}]')
    assert transport.attempt(tool("t(x: any)"), None, [1], 100).value == [1, 2]


def test_redaction():
    assert redact_by_name("api_key", "abc") != "abc"
    assert redact_by_name("query", "abc") == "abc"


def test_socket_transport_matches_in_process(eval_policy):
    spec = tool("echo(x: any)")
    policy = policy_with(eval_policy, spec)
    handlers = {"echo": lambda x: {"got": x}}
    server = ToolServer(handlers).start()
    try:
        outs = []
        for transport in (InProcessTransport(), SocketTransport(*server.address)):
            registry = ToolRegistry(transport=transport)
            registry.register_tool(spec, handlers["echo"])
            outs.append(run_source("r = echo([1, 'a'])", policy, registry).outcome)
    finally:
        server.stop()
    assert outs[0].final_variables == outs[1].final_variables == {"r": "{'got': [1, 'a']}"}


def test_trace_json(eval_policy):
    spec = tool("api(q: string)", max_retries=1, backoff_base=5)
    out, _ = scripted_run(eval_policy, spec, [{"outcome": "error"}, {"outcome": "ok", "value": 2}], 'api("x")')
    obj = json.loads(out.to_json())["tool_trace"][0]
    assert obj["attempts"] == 2 and obj["backoff_delays"] == [5]


# -- properties -------------------------------------------------------------

@settings(max_examples=80, deadline=None)
@given(st.integers(0, 6), st.integers(1, 500), st.integers(0, 7))
def test_backoff_law(eval_policy, max_retries, base, failures):
    spec = tool("api(q: string)", max_retries=max_retries, backoff_base=base, timeout=1000)
    steps = [{"outcome": "error"}] * failures + [{"outcome": "ok", "value": 1}]
    # a deadline far away so no sleep is cut short
    out, clock = scripted_run(eval_policy, spec, steps, 'api("x")', max_tool_calls=1,
                              wall_clock_timeout=10**7)
    (record,) = out.tool_trace
    assert len(record.per_attempt) == record.attempts <= max_retries + 1
    assert len(record.backoff_delays) == record.attempts - 1
    assert record.backoff_delays == [base * 2 ** k for k in range(record.attempts - 1)]
    assert clock.sleeps == record.backoff_delays
    assert out.completed == (failures <= max_retries)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 6), st.integers(0, 4))
def test_every_invocation_traced_once(eval_policy, calls, budget):
    spec = tool("api(q: string)", max_retries=0)
    steps = [{"outcome": "ok", "value": 1}] * calls
    src = "".join('api("x")\n' for _ in range(calls)) or "pass\n"
    out, _ = scripted_run(eval_policy, spec, steps, src, max_tool_calls=budget)
    assert len(out.tool_trace) == min(calls, budget)
