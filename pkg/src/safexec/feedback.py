"""Outcome classification, structured reports and the bounded repair loop."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Callable

from .categories import KIND_CATEGORY, ExceptionKind, RiskCategory, call_category, import_category
from .executor import ExecutionOutcome, Status
from .paths import TEMPLATE_DIR
from .pipeline import run_source
from .policy import PolicyConfig
from .validator import Rule, ValidationReport, Violation, explain_violation, show_name

EK = ExceptionKind

RESULT_OK = "executed successfully"

FIELD_LABELS = (
    "Input Code - ",
    "Result - ",
    "Exception - ",
    "Console output - ",
    "Last state of variables - ",
)

_QUOTED = re.compile(r"'([^']*)'")
_IMPORTED = re.compile(r"import of (\S+)")


def _quoted_name(message: str) -> str:
    m = _QUOTED.search(message)
    return m.group(1) if m else ""


def classify(outcome: ExecutionOutcome | None, validation: ValidationReport | None,
             tool_names: frozenset[str] = frozenset(), import_table=None) -> RiskCategory:
    """One risk category per run; validator findings take precedence."""
    if validation is not None and not validation.allowed and validation.violations:
        return validation.violations[0].category
    if outcome is None or outcome.status is Status.Completed or outcome.exception is None:
        return RiskCategory.None_
    kind = outcome.exception.kind
    message = outcome.exception.message
    if kind is EK.FunctionNotAllowedError:
        return call_category(_quoted_name(message), tool_names)
    if kind is EK.ImportNotAllowedError:
        m = _IMPORTED.search(message)
        return import_category(m.group(1) if m else "", import_table)
    return KIND_CATEGORY[kind]


@dataclass(frozen=True)
class FeedbackReport:
    input_code: str
    result: str
    exception: str
    console_output: str
    last_state_of_variables: dict[str, str]
    category: RiskCategory
    guidance: str

    @property
    def failed(self) -> bool:
        return self.result != RESULT_OK

    def variables_text(self) -> str:
        items = ", ".join(f"{name!r}: {value}" for name, value in self.last_state_of_variables.items())
        return "{" + items + "}"

    def to_text(self) -> str:
        """The five-field layout, one field per label."""
        values = (self.input_code, self.result, self.exception, self.console_output, self.variables_text())
        return "\n".join(label + value for label, value in zip(FIELD_LABELS, values)) + "\n"

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "input_code": self.input_code,
            "result": self.result,
            "exception": self.exception,
            "console_output": self.console_output,
            "last_state_of_variables": dict(self.last_state_of_variables),
            "category": self.category.value,
            "guidance": self.guidance,
        }


def _line(span) -> str:
    return f"line {span[0]}"


def guidance_for_violation(v: Violation, policy: PolicyConfig | None = None) -> str:
    name = show_name(v.offending)
    where = _line(v.span)
    base = explain_violation(v)
    rule = v.rule
    if rule is Rule.call and v.category is RiskCategory.ToolNotAllowed:
        tools = ", ".join(sorted(policy.tool_names)) if policy and policy.tools else "none"
        fix = f"Call only declared tools (declared: {tools}) or remove the call to '{name}'."
    elif rule is Rule.call:
        fix = f"The call to '{name}' is not allowed; rewrite the code so it no longer calls '{name}'."
    elif rule is Rule.forward_reference:
        fix = f"Define '{name}' before the first call to it."
    elif rule is Rule.import_:
        fix = f"Importing '{name}' is not allowed; remove the import and anything that depends on it."
    elif rule is Rule.dunder:
        fix = f"Access to '{name}' is not allowed; use ordinary values and builtins instead of reflection."
    elif rule is Rule.infinite_loop:
        fix = "Give the loop a condition that becomes false, or a break that is reachable."
    elif rule is Rule.loop_nesting:
        fix = "Flatten the nested loops or move the inner work into a helper that does not loop."
    elif rule is Rule.syntax and v.category is RiskCategory.CodeInjection:
        fix = f"The construct {name} is not allowed; express the same logic with supported statements."
    elif rule is Rule.syntax:
        fix = "Fix the syntax error."
    else:
        fix = f"The syntax element {name} is not allowed by the policy; rewrite the code without it."
    return f"{base} {fix} ({where})"


_KIND_FIX: dict[ExceptionKind, str] = {
    EK.WhileTrueError: "Give the loop a condition that becomes false, or a break that is reachable.",
    EK.TimeoutException: "Reduce the amount of work so the program finishes within its time and step budget.",
    EK.KeyError: "Check that the key or name exists before using it.",
    EK.StackDepthException: "Bound the recursion depth or rewrite the recursion as a loop.",
    EK.TypeError: "Make sure every operation receives values of the types it expects.",
    EK.OverflowError: "Keep numbers and collections within the configured size limits.",
    EK.NodeNotAllowedError: "Rewrite the code without the disallowed syntax element.",
    EK.NestedLoopDepthThresholdReachedError: "Reduce how deeply loops nest, including loops inside called functions.",
    EK.DivideByZeroError: "Guard the division so the divisor is never zero.",
    EK.OutOfBoundsError: "Check indices against the container length before reading or writing.",
}


def guidance_for_outcome(outcome: ExecutionOutcome, category: RiskCategory) -> str:
    record = outcome.exception
    assert record is not None
    kind = record.kind
    where = _line(record.span)
    head = f"The code failed with {kind.value}: {record.message} (category: {category.display})."
    if kind is EK.FunctionNotAllowedError:
        name = show_name(_quoted_name(record.message))
        if category is RiskCategory.ToolNotAllowed:
            fix = f"'{name}' is not a declared tool; call only declared tools or remove the call."
        else:
            fix = f"The call to '{name}' is not allowed; rewrite the code so it no longer calls '{name}'."
    elif kind is EK.ImportNotAllowedError:
        m = _IMPORTED.search(record.message)
        fix = f"Importing '{m.group(1) if m else 'this module'}' is not allowed; remove the import."
    elif kind is EK.ToolError:
        failed = [r for r in outcome.tool_trace if not r.succeeded]
        tool = failed[-1].tool if failed else _quoted_name(record.message)
        if failed and failed[-1].final.get("reason") == "retries-exhausted":
            fix = (f"The tool '{tool}' failed on every attempt and the maximum retries reached; "
                   f"handle its unavailability or avoid calling '{tool}'.")
        else:
            fix = f"The tool '{tool}' did not return a usable result; check its arguments or avoid calling it."
    else:
        fix = _KIND_FIX[kind]
    return f"{head} {fix} ({where})"


def render_report(code: str, validation: ValidationReport | None, outcome: ExecutionOutcome,
                  policy: PolicyConfig | None = None) -> FeedbackReport:
    tool_names = policy.tool_names if policy else frozenset()
    table = policy.import_category_table() if policy else None
    category = classify(outcome, validation, tool_names, table)
    if outcome.status is Status.Completed:
        result, exception, guidance = RESULT_OK, "None", ""
    else:
        result = f"failed ({outcome.status.value.lower()})"
        exception = outcome.exception.last_line if outcome.exception else "None"
        if validation is not None and not validation.allowed and validation.violations:
            guidance = guidance_for_violation(validation.violations[0], policy)
        else:
            guidance = guidance_for_outcome(outcome, category)
    return FeedbackReport(
        input_code=code,
        result=result,
        exception=exception,
        console_output=outcome.console_output or "None",
        last_state_of_variables=dict(outcome.final_variables),
        category=category,
        guidance=guidance,
    )


# -- repair loop -------------------------------------------------------------

def load_repair_template() -> str:
    return (TEMPLATE_DIR / "repair_prompt.txt").read_text(encoding="utf-8")


def build_repair_prompt(code: str, report: FeedbackReport, template: str | None = None) -> str:
    template = template if template is not None else load_repair_template()
    feedback = f"{report.guidance}\n\n{report.to_text()}"
    return template.replace("{code}", code).replace("{feedback}", feedback)


Generator = Callable[[str], str]


@dataclass
class RepairAttempt:
    index: int
    code: str
    validation: ValidationReport | None
    outcome: ExecutionOutcome | None
    report: FeedbackReport
    generator_error: str | None = None

    @property
    def completed(self) -> bool:
        return self.outcome is not None and self.outcome.status is Status.Completed

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "attempt": self.index,
            "code": self.code,
            "validation": self.validation.to_json_obj() if self.validation else None,
            "outcome": self.outcome.to_json_obj(include_timing=False) if self.outcome else None,
            "feedback": self.report.to_json_obj(),
            "category": self.report.category.value,
            "generator_error": self.generator_error,
        }


@dataclass
class RepairSession:
    attempts: list[RepairAttempt] = field(default_factory=list)
    max_retries: int = 2
    terminal: str = "GaveUp"  # Repaired | GaveUp

    @property
    def repaired(self) -> bool:
        return self.terminal == "Repaired"

    @property
    def retries_used(self) -> int:
        return len(self.attempts) - 1

    def transcript_lines(self, session_id: str = "session") -> list[str]:
        lines = []
        for attempt in self.attempts:
            obj = {"session": session_id, "max_retries": self.max_retries, "terminal": self.terminal}
            obj.update(attempt.to_json_obj())
            lines.append(json.dumps(obj, ensure_ascii=False, sort_keys=True))
        return lines

    def write_transcript(self, path, session_id: str = "session") -> None:
        with open(path, "a", encoding="utf-8") as fh:
            for line in self.transcript_lines(session_id):
                fh.write(line + "\n")


def _generator_failure(index: int, code: str, error: str) -> RepairAttempt:
    report = FeedbackReport(
        input_code=code,
        result="failed (generator error)",
        exception=error,
        console_output="None",
        last_state_of_variables={},
        category=RiskCategory.OperationalError,
        guidance=f"The code generator failed: {error}. Try again.",
    )
    return RepairAttempt(index, code, None, None, report, generator_error=error)


def run_repair_loop(initial_code: str, policy: PolicyConfig, tools, generator: Generator,
                    max_retries: int = 2, *, rng_seed: int = 0, template: str | None = None) -> RepairSession:
    """Validate, execute and report; on failure ask ``generator`` for new code.

    Stops at the first Completed run or after ``max_retries`` regenerations.
    A generator exception is recorded as its own attempt and uses up a retry.
    """
    if max_retries < 0:
        raise ValueError("max_retries must be >= 0")
    session = RepairSession(max_retries=max_retries)
    code = initial_code
    last_report: FeedbackReport | None = None
    last_code = initial_code
    for index in range(max_retries + 1):
        if index > 0:
            assert last_report is not None
            prompt = build_repair_prompt(last_code, last_report, template)
            try:
                code = generator(prompt)
                if not isinstance(code, str):
                    raise TypeError(f"generator returned {type(code).__name__}, not str")
            except Exception as exc:  # any generator failure is recorded, not raised
                attempt = _generator_failure(index, last_code, f"{type(exc).__name__}: {exc}")
                session.attempts.append(attempt)
                continue
        result = run_source(code, policy, tools, rng_seed=rng_seed)
        report = render_report(code, result.validation, result.outcome, policy)
        attempt = RepairAttempt(index, code, result.validation, result.outcome, report)
        session.attempts.append(attempt)
        if attempt.completed:
            session.terminal = "Repaired"
            return session
        last_report, last_code = report, code
    return session


# -- scripted generators -----------------------------------------------------

_CODE_SECTION = re.compile(r"Unsafe Code:\n(.*?)\nFeedback for Improvement:", re.S)
_LINE_REF = re.compile(r"\(line (\d+)\)")


def extract_code(prompt: str) -> str:
    m = _CODE_SECTION.search(prompt)
    if not m:
        raise ValueError("prompt has no code section")
    return m.group(1)


def delete_line(code: str, line_no: int) -> str:
    """Remove ``line_no`` (1-based) and any block indented under it.

    If that empties an enclosing block, a ``pass`` keeps the code parseable.
    """
    lines = code.split("\n")
    if not 1 <= line_no <= len(lines):
        raise ValueError(f"line {line_no} is out of range")
    start = line_no - 1

    def indent(s: str) -> int:
        return len(s) - len(s.lstrip(" \t"))

    base = indent(lines[start])
    end = start + 1
    if lines[start].rstrip().endswith(":"):
        while end < len(lines) and (not lines[end].strip() or indent(lines[end]) > base):
            end += 1
    del lines[start:end]
    prev = start - 1
    while prev >= 0 and not lines[prev].strip():
        prev -= 1
    if prev >= 0 and lines[prev].rstrip().endswith(":"):
        following = next((ln for ln in lines[start:] if ln.strip()), None)
        if following is None or indent(following) <= indent(lines[prev]):
            lines.insert(start, " " * base + "pass")
    return "\n".join(lines)


class LineDeletingFixer:
    """Deletes the line named in the feedback; a deterministic stand-in for a model."""

    def __init__(self) -> None:
        self.prompts: list[str] = []

    def __call__(self, prompt: str) -> str:
        self.prompts.append(prompt)
        code = extract_code(prompt)
        feedback = prompt[prompt.index("Feedback for Improvement:"):]
        m = _LINE_REF.search(feedback)
        if not m:
            raise ValueError("feedback names no line")
        return delete_line(code, int(m.group(1)))


def identity_generator(prompt: str) -> str:
    return extract_code(prompt)
