from __future__ import annotations

import builtins
import json
import os
import socket
import subprocess
import time
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from safexec.categories import ExceptionKind
from safexec.executor import Status, execute, render_truncated
from safexec.frontend import parse
from safexec.harness.demo_tools import demo_registry
from safexec.pipeline import run_source
from safexec.tools import StubClock

K = ExceptionKind


def run(src, policy, **kw):
    return run_source(src, policy, **kw).outcome


def with_limits(policy, **limits):
    return replace(policy, limits=replace(policy.limits, **limits))


def test_assignment(eval_policy):
    out = run("x = 1 + 3", eval_policy)
    assert out.status is Status.Completed and out.exception is None
    assert out.final_variables == {"x": "4"} and out.console_output == ""


def test_out_of_bounds_write(eval_policy):
    out = run("arr = [0]*5\narr[10] = 1", eval_policy)
    assert out.status is Status.Blocked and out.kind is K.OutOfBoundsError
    assert out.exception.span.start_line == 2


def test_unbounded_append_is_stopped(eval_policy):
    start = time.perf_counter()
    out = run('lst = []\nwhile len(lst) < 10**12: lst.append("data")', eval_policy)
    assert out.status is not Status.Completed
    # Observed under default limits: the deadline or the per-loop budget, both TimeoutException.
    assert out.kind is K.TimeoutException
    assert time.perf_counter() - start < 2.0 + 1.0


def test_echo(eval_policy):
    assert run('print("hi")', eval_policy).console_output == "hi\n"


@pytest.mark.parametrize("src, kind, host_exc", [
    ("x = 1 / 0", K.DivideByZeroError, ZeroDivisionError),
    ('x = {"a": 1}["b"]', K.KeyError, KeyError),
    ('x = "x" < 3', K.TypeError, TypeError),
    ("x = [1][3]", K.OutOfBoundsError, IndexError),
    ('x = "10" + 5', K.TypeError, TypeError),
])
def test_expression_errors_match_host(eval_policy, src, kind, host_exc):
    assert run(src, eval_policy).kind is kind
    with pytest.raises(host_exc):
        exec(src, {})


def test_floor_division_exact(eval_policy):
    assert run("x = 7 // 2", eval_policy).final_variables == {"x": "3"}


def test_missing_key_message(eval_policy):
    assert run('x = {"a": 1}["b"]', eval_policy).exception.message == "'b'"


def test_factorial(eval_policy):
    src = "def fac(n):\n    return 1 if n <= 1 else n * fac(n - 1)\nr = fac(5)\n"
    expected = 1
    for i in range(1, 6):
        expected *= i
    assert run(src, eval_policy).final_variables["r"] == str(expected)


def test_infinite_recursion(eval_policy):
    out = run("def f():\n    return f()\nf()\n", eval_policy)
    assert out.kind is K.StackDepthException
    assert len(out.exception.stack_summary) == 64 + 1


def test_arity(eval_policy):
    out = run("def f(a):\n    return a\nf(1, 2)\n", eval_policy)
    assert out.kind is K.TypeError and "1 positional argument" in out.exception.message


def test_for_sum(eval_policy):
    assert run("s=0\nfor i in range(5): s = s + i", eval_policy).final_variables["s"] == "10"


def test_nested_loops_through_calls(eval_policy):
    src = (
        "def e():\n    for n in range(2):\n        pass\n"
        "def d():\n    for m in range(2):\n        e()\n"
        "def c():\n    for k in range(2):\n        d()\n"
        "def b():\n    for j in range(2):\n        c()\n"
        "def a():\n    for i in range(2):\n        b()\n"
        "a()\n"
    )
    assert run(src, eval_policy).kind is K.NestedLoopDepthThresholdReachedError


def test_vacuous_while(eval_policy):
    out = run("while False: x = 1", eval_policy)
    assert out.completed and out.final_variables == {}


def test_snapshot_rendering(eval_policy):
    assert run("lst = [1,2]", eval_policy).final_variables == {"lst": "[1, 2]"}
    out = run('s = "a" * 10000', eval_policy)
    assert out.final_variables["s"] == render_truncated("a" * 10000)
    assert out.final_variables["s"] == repr("a" * 10000)[:256] + "…(truncated)"
    assert run("def g():\n    pass\n", eval_policy).final_variables == {"g": "<function g>"}


def test_loop_budget_message(eval_policy):
    policy = with_limits(eval_policy, max_loop_iterations=10)
    out = run("for i in range(100):\n    pass\n", policy)
    assert out.kind is K.TimeoutException and "loop iteration budget" in out.exception.message


def test_int_magnitude(eval_policy):
    assert run("x = 7 ** 100000", eval_policy).kind is K.OverflowError
    assert run("x = 10 ** 4299", eval_policy).completed


def test_float_overflow(eval_policy):
    assert run("x = 1e308 * 10", eval_policy).kind is K.OverflowError


def test_collection_size(eval_policy):
    policy = with_limits(eval_policy, max_collection_size=100)
    assert run("x = [0] * 101", policy).kind is K.OverflowError
    assert run("x = [0] * 100", policy).completed


def test_runtime_reenforces_static_rules(eval_policy):
    for src, kind in [("eval('1')", K.FunctionNotAllowedError), ("import os", K.ImportNotAllowedError),
                      ("x = ().__class__", K.NodeNotAllowedError), ("while True:\n    pass\n", K.WhileTrueError)]:
        assert run(src, eval_policy, validate=False).kind is kind, src


def test_outcome_json(eval_policy):
    obj = json.loads(run("x = 1 / 0", eval_policy).to_json())
    assert list(obj) == ["status", "exception", "console_output", "final_variables", "steps_used",
                         "elapsed_ms", "tool_trace"]
    assert set(obj["exception"]) == {"kind", "message", "span", "stack_summary"}


def test_steps_bounded(eval_policy):
    policy = with_limits(eval_policy, max_total_steps=500)
    out = run("x = 0\nfor i in range(10000):\n    x += i\n", policy)
    assert out.kind is K.TimeoutException and out.steps_used <= 500


def test_stub_clock_determinism(corpus_policy, corpus_entries):
    for entry in corpus_entries:
        if entry.id.startswith(("u24", "u34")):
            continue  # these sleep on the real clock inside tools
        a = run(entry.source(), corpus_policy, tools=demo_registry(corpus_policy), clock=StubClock())
        b = run(entry.source(), corpus_policy, tools=demo_registry(corpus_policy), clock=StubClock())
        assert a.to_json(include_timing=False) == b.to_json(include_timing=False), entry.id


def test_no_host_side_effects(corpus_policy, corpus_entries, monkeypatch):
    """Any attempt to reach files, sockets or processes from the sandbox would blow up here."""
    def forbidden(*args, **kwargs):
        raise AssertionError("sandbox touched the host")

    expected = {e.id: run(e.source(), corpus_policy, tools=demo_registry(corpus_policy)).kind
                for e in corpus_entries if not e.id.startswith(("u24", "u34"))}
    monkeypatch.setattr(builtins, "open", forbidden)
    monkeypatch.setattr(socket, "socket", forbidden)
    monkeypatch.setattr(os, "system", forbidden)
    monkeypatch.setattr(os, "remove", forbidden)
    monkeypatch.setattr(subprocess, "Popen", forbidden)
    for entry_id, kind in expected.items():
        entry = next(e for e in corpus_entries if e.id == entry_id)
        assert run(entry.source(), corpus_policy, tools=demo_registry(corpus_policy)).kind is kind


# -- properties -------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(1, 64), st.integers(0, 70))
def test_stack_limit_exact(eval_policy, limit, depth):
    policy = with_limits(eval_policy, max_stack_depth=limit)
    src = f"def f(n):\n    if n == 0:\n        return 0\n    return f(n - 1)\nr = f({depth - 1})\n" if depth else "r = 0\n"
    out = run(src, policy)
    # f(depth - 1) needs `depth` frames
    if depth <= limit:
        assert out.completed
    else:
        assert out.kind is K.StackDepthException


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 400), st.integers(0, 30))
def test_step_fuel_never_exceeded(eval_policy, fuel, n):
    policy = with_limits(eval_policy, max_total_steps=fuel)
    out = run(f"t = 0\nfor i in range({n}):\n    t = t + i * 2\nprint(t)\n", policy)
    assert out.steps_used <= fuel
    if not out.completed:
        assert out.kind is K.TimeoutException


@settings(max_examples=100, deadline=None)
@given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6),
       st.sampled_from(["+", "-", "*", "//", "%", "/", "<", "==", "**"]))
def test_arithmetic_matches_host(eval_policy, a, b, op):
    if op == "**":
        b = abs(b) % 6
    src = f"x = ({a}) {op} ({b})"
    out = run(src, eval_policy)
    env: dict = {}
    try:
        exec(src, env)
    except ZeroDivisionError:
        assert out.kind is K.DivideByZeroError
        return
    assert out.final_variables == {"x": repr(env["x"])}


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-50, 50), max_size=8), st.integers(-10, 10))
def test_indexing_matches_host(eval_policy, items, index):
    src = f"xs = {items!r}\ny = xs[{index}]\nz = xs[{index}:]\n"
    out = run(src, eval_policy)
    env: dict = {}
    try:
        exec(src, env)
    except IndexError:
        assert out.kind is K.OutOfBoundsError
        return
    assert out.final_variables == {k: repr(env[k]) for k in ("xs", "y", "z")}


def test_parse_once_execute_twice_independent(eval_policy):
    tree = parse("xs = []\nxs.append(1)\n")
    assert execute(tree, eval_policy).final_variables == execute(tree, eval_policy).final_variables
