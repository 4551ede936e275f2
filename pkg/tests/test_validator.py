from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from safexec.categories import ExceptionKind, RiskCategory
from safexec.executor import execute
from safexec.frontend import Span, parse
from safexec.validator import Rule, Verdict, Violation, explain_violation, validate_tree

STATIC_KINDS = {ExceptionKind.FunctionNotAllowedError, ExceptionKind.ImportNotAllowedError,
                ExceptionKind.NodeNotAllowedError, ExceptionKind.WhileTrueError}


def check(src, policy):
    return validate_tree(parse(src), policy)


def test_eval_blocked(eval_policy):
    report = check("eval(user_input)", eval_policy)
    assert report.verdict is Verdict.Blocked
    (v,) = report.violations
    assert v.category is RiskCategory.CodeInjection and v.offending == "eval"


def test_while_true_blocked(eval_policy):
    (v,) = check('while True: print("Running forever")', eval_policy).violations
    assert v.category is RiskCategory.InfiniteLoop


def test_plain_assignment_allowed(eval_policy):
    report = check("x = 1 + 3", eval_policy)
    assert report.verdict is Verdict.Allowed and report.violations == ()


def test_pickle_import_blocked(eval_policy):
    report = check("import pickle\npickle.loads(user_data)", eval_policy)
    assert [(v.category, v.offending) for v in report.violations] == [(RiskCategory.Deserialization, "pickle")]


def test_while_with_break_passes(eval_policy):
    assert check("while True:\n    break\n", eval_policy).allowed


def test_dunder_blocked(eval_policy):
    (v,) = check("x = ().__class__", eval_policy).violations
    assert v.category is RiskCategory.UnsafeReflection and v.rule is Rule.dunder


def test_forward_reference(eval_policy):
    (v,) = check("f()\ndef f():\n    return 1\n", eval_policy).violations
    assert v.rule is Rule.forward_reference


def test_recursive_call_inside_body_allowed(eval_policy):
    assert check("def f(n):\n    return f(n - 1) if n else 0\nf(3)\n", eval_policy).allowed


def test_loop_nesting_static(eval_policy):
    src = "".join("    " * i + f"for i{i} in range(2):\n" for i in range(5)) + "    " * 5 + "pass\n"
    (v,) = check(src, eval_policy).violations
    assert v.exception_kind is ExceptionKind.NestedLoopDepthThresholdReachedError


def test_hallucinated_tool_named(corpus_policy):
    (v,) = check("book_flight('NYC')", corpus_policy).violations
    assert v.category is RiskCategory.ToolNotAllowed


def test_explain_texts():
    span = Span(1, 0, 1, 4)
    eval_v = Violation(RiskCategory.CodeInjection, "d", span, "eval", Rule.call)
    assert explain_violation(eval_v) == \
        "Blocked: call to 'eval' is not in the allowed builtins (category: Code Injection)."
    loop_v = Violation(RiskCategory.InfiniteLoop, "d", span, "while", Rule.infinite_loop)
    assert "no reachable break" in explain_violation(loop_v)
    tool_v = Violation(RiskCategory.ToolNotAllowed, "d", span, "book​_flight", Rule.call)
    assert "book\\u200b_flight" in explain_violation(tool_v)


def test_report_json_shape(eval_policy):
    obj = check("eval(1)", eval_policy).to_json_obj()
    assert set(obj) == {"verdict", "policy_id", "violations"}
    assert set(obj["violations"][0]) == {"category", "detail", "offending", "span"}


def test_deterministic(eval_policy):
    src = "import os\neval(1)\nwhile True:\n    pass\n"
    assert check(src, eval_policy) == check(src, eval_policy)


# -- properties -------------------------------------------------------------

callees = st.sampled_from(["print", "len", "abs", "eval", "open", "getattr", "undefined_fn", "exec"])
modules = st.sampled_from(["math", "string", "os", "pickle", "socket"])


@st.composite
def flat_programs(draw):
    """Top-level statements with no function definitions and no bound callables."""
    stmts = []
    for _ in range(draw(st.integers(1, 6))):
        form = draw(st.sampled_from(["call", "import", "from", "while", "assign", "dunder", "for"]))
        if form == "call":
            stmts.append(f"{draw(callees)}({draw(st.integers(0, 9))})")
        elif form == "import":
            stmts.append(f"import {draw(modules)}")
        elif form == "from":
            stmts.append(f"from {draw(modules)} import thing")
        elif form == "while":
            test = draw(st.sampled_from(["True", "1", "False"]))
            body = draw(st.sampled_from(["break", "pass"]))
            stmts.append(f"while {test}:\n    {body}")
        elif form == "dunder":
            stmts.append("q = (1).__class__")
        elif form == "for":
            stmts.append(f"for k in range(2):\n    {draw(callees)}(k)")
        else:
            stmts.append(f"w = {draw(st.integers(0, 100))}")
    return stmts


@settings(max_examples=150, deadline=None)
@given(flat_programs())
def test_violations_accumulate_per_statement(eval_policy, stmts):
    whole = check("\n".join(stmts) + "\n", eval_policy)
    parts = sum(len(check(s + "\n", eval_policy).violations) for s in stmts)
    assert len(whole.violations) == parts
    assert (whole.verdict is Verdict.Blocked) == bool(whole.violations)


@settings(max_examples=150, deadline=None)
@given(flat_programs())
def test_allowed_programs_never_trip_static_kinds(eval_policy, stmts):
    tree = parse("\n".join(stmts) + "\n")
    if validate_tree(tree, eval_policy).allowed:
        outcome = execute(tree, eval_policy)
        assert outcome.kind not in STATIC_KINDS


def test_allowed_corpus_never_trips_static_kinds(corpus_entries, corpus_policy):
    from safexec.harness.demo_tools import demo_registry
    from safexec.frontend import SafexecSyntaxError

    checked = 0
    for entry in corpus_entries:
        try:
            tree = parse(entry.source())
        except SafexecSyntaxError:
            continue
        if validate_tree(tree, corpus_policy).allowed:
            outcome = execute(tree, corpus_policy, demo_registry(corpus_policy))
            assert outcome.kind not in STATIC_KINDS, entry.id
            checked += 1
    assert checked >= 24
