from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from safexec.categories import ExceptionKind, RiskCategory
from safexec.executor import ExceptionRecord, ExecutionOutcome, Status
from safexec.feedback import (
    FIELD_LABELS,
    LineDeletingFixer,
    build_repair_prompt,
    classify,
    delete_line,
    extract_code,
    identity_generator,
    render_report,
    run_repair_loop,
)
from safexec.frontend import Span, parse
from safexec.harness.schemas import schema_errors
from safexec.pipeline import run_source
from safexec.tools import ScriptedTransport, StubClock, ToolRegistry
from safexec.validator import Rule, ValidationReport, Verdict, Violation

GOLDEN = Path(__file__).parent / "golden"
K = ExceptionKind


def blocked(kind, message="m"):
    return ExecutionOutcome(Status.Blocked, ExceptionRecord(kind, message, Span(1, 1, 1, 2), ("<module>",)),
                            "", {}, 1, 0.0, [])


def report_for(src, policy, tools=None):
    result = run_source(src, policy, tools)
    return render_report(src, result.validation, result.outcome, policy)


def test_classify_examples():
    assert classify(blocked(K.WhileTrueError), None) is RiskCategory.InfiniteLoop
    assert classify(blocked(K.FunctionNotAllowedError, "call to 'eval' is not allowed"), None) is \
        RiskCategory.CodeInjection
    done = ExecutionOutcome(Status.Completed, None, "", {}, 1, 0.0, [])
    assert classify(done, None) is RiskCategory.None_


@pytest.mark.parametrize("module, category", [
    ("pickle", RiskCategory.Deserialization),
    ("socket", RiskCategory.UntrustedInclusion),
    ("requests", RiskCategory.UntrustedInclusion),
    ("something_else", RiskCategory.CodeInjection),
])
def test_import_table(module, category):
    assert classify(blocked(K.ImportNotAllowedError, f"import of {module} is not allowed"), None) is category


@pytest.mark.parametrize("kind, category", [
    (K.TimeoutException, RiskCategory.ResourceExhaustion),
    (K.NestedLoopDepthThresholdReachedError, RiskCategory.ResourceExhaustion),
    (K.OverflowError, RiskCategory.ResourceExhaustion),
    (K.StackDepthException, RiskCategory.ResourceExhaustion),
    (K.OutOfBoundsError, RiskCategory.OutOfBoundsWrite),
    (K.TypeError, RiskCategory.TypeConfusion),
    (K.KeyError, RiskCategory.OperationalError),
    (K.DivideByZeroError, RiskCategory.OperationalError),
    (K.ToolError, RiskCategory.ToolError),
])
def test_kind_table(kind, category):
    assert classify(blocked(kind), None) is category


def test_unknown_tool_name_is_tool_not_allowed():
    out = blocked(K.FunctionNotAllowedError, "call to 'book_flight' is not allowed")
    assert classify(out, None) is RiskCategory.ToolNotAllowed


def test_validator_category_wins():
    v = Violation(RiskCategory.Deadlock, "d", Span(1, 1, 1, 2), "threading", Rule.import_)
    report = ValidationReport(Verdict.Blocked, (v,), "p", 1)
    assert classify(blocked(K.ImportNotAllowedError), report) is RiskCategory.Deadlock


def test_report_for_eval(eval_policy):
    rep = report_for("eval(user_input)", eval_policy)
    assert "eval" in rep.guidance and "not allowed" in rep.guidance
    assert rep.category is RiskCategory.CodeInjection and rep.failed


def test_report_completed_golden(eval_policy):
    rep = report_for("x = 1+3", eval_policy)
    assert rep.result == "executed successfully" and rep.last_state_of_variables == {"x": "4"}
    assert rep.to_text() == (GOLDEN / "report_completed.txt").read_text()


def test_report_failure_golden(eval_policy):
    src = 'd = {"a": 1}\nprint("start")\nv = d["b"]\n'
    assert report_for(src, eval_policy).to_text() == (GOLDEN / "report_missing_key.txt").read_text()


def test_tool_error_guidance(eval_policy):
    from dataclasses import replace

    from safexec.policy import parse_tool_signature

    spec = replace(parse_tool_signature("flaky_api(endpoint: string)"), max_retries=2, backoff_base=1)
    policy = replace(eval_policy.with_tools(spec), limits=replace(eval_policy.limits, max_tool_calls=5))
    clock = StubClock()
    registry = ToolRegistry(transport=ScriptedTransport([{"outcome": "error"}] * 3, clock), clock=clock)
    registry.register_tool(spec)
    result = run_source('flaky_api("/x")', policy, registry, clock=clock)
    rep = render_report('flaky_api("/x")', result.validation, result.outcome, policy)
    assert rep.category is RiskCategory.ToolError
    assert "flaky_api" in rep.guidance and "maximum retries reached" in rep.guidance


def test_text_layout_order(eval_policy):
    text = report_for("x = 1 / 0", eval_policy).to_text()
    positions = [text.index(label) for label in FIELD_LABELS]
    assert positions == sorted(positions) and positions[0] == 0


def test_prompt_contains_code_and_feedback(eval_policy):
    rep = report_for("eval(x)", eval_policy)
    prompt = build_repair_prompt("eval(x)", rep)
    assert extract_code(prompt) == "eval(x)"
    assert rep.to_text() in prompt


def test_identity_gives_up(eval_policy):
    session = run_repair_loop("eval(user_input)", eval_policy, None, identity_generator, max_retries=2)
    assert session.terminal == "GaveUp" and len(session.attempts) == 3


def test_fixer_repairs_in_two(eval_policy):
    code = "x = 1 + 3\neval(user_input)\ny = x * 2\n"
    fixer = LineDeletingFixer()
    session = run_repair_loop(code, eval_policy, None, fixer, max_retries=2)
    assert session.terminal == "Repaired" and len(session.attempts) == 2
    assert session.attempts[1].code == "x = 1 + 3\ny = x * 2\n"
    assert session.attempts[1].outcome.final_variables == {"x": "4", "y": "8"}
    assert len(fixer.prompts) == 1


def test_safe_code_needs_no_feedback(eval_policy):
    fixer = LineDeletingFixer()
    session = run_repair_loop("x = 1", eval_policy, None, fixer, max_retries=2)
    assert session.repaired and len(session.attempts) == 1 and fixer.prompts == []


def test_generator_failure_consumes_retry(eval_policy):
    def broken(prompt):
        raise RuntimeError("model offline")

    session = run_repair_loop("eval(1)", eval_policy, None, broken, max_retries=2)
    assert len(session.attempts) == 3 and session.terminal == "GaveUp"
    assert all(a.report.category is RiskCategory.OperationalError for a in session.attempts[1:])


def test_transcript_schema_and_determinism(eval_policy):
    def session():
        return run_repair_loop("a = 1\nimport os\n", eval_policy, None, LineDeletingFixer(), max_retries=2)

    lines = session().transcript_lines("s1")
    assert lines == session().transcript_lines("s1")
    for line in lines:
        assert schema_errors("transcript", json.loads(line)) == []


def test_delete_line_keeps_block_parseable():
    code = "if True:\n    eval(1)\nx = 1\n"
    assert delete_line(code, 2) == "if True:\n    pass\nx = 1\n"
    parse(delete_line(code, 2))
    assert delete_line("for i in range(3):\n    y = i\nz = 0", 1) == "z = 0"


# -- properties -------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.sampled_from(list(K)), st.text(max_size=30), st.sampled_from(list(RiskCategory)), st.booleans())
def test_classify_total(kind, message, vcat, with_validation):
    report = None
    if with_validation:
        v = Violation(vcat, "detail", Span(1, 1, 1, 2), "x", Rule.node_kind)
        report = ValidationReport(Verdict.Blocked, (v,), "p", 1)
    assert isinstance(classify(blocked(kind, message), report), RiskCategory)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from(["a = 1", "eval(a)", "import os", "b = [0]*2", "b[5] = 1", "print(a)",
                                 "c = 1 / 0", "open('f')"]), min_size=1, max_size=5),
       st.integers(0, 3))
def test_session_invariants(eval_policy, lines, retries):
    session = run_repair_loop("\n".join(lines) + "\n", eval_policy, None, LineDeletingFixer(), max_retries=retries)
    assert 1 <= len(session.attempts) <= retries + 1
    assert [a.index for a in session.attempts] == list(range(len(session.attempts)))
    assert session.repaired == session.attempts[-1].completed
    for attempt in session.attempts:
        if attempt.report.failed:
            assert attempt.report.guidance
