"""Parse, validate and execute one program under a policy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .executor import ExceptionRecord, ExecutionOutcome, Status, execute
from .frontend import parse
from .frontend.nodes import SafexecSyntaxError, SyntaxTree
from .policy import PolicyConfig
from .validator import ValidationReport, Verdict, report_for_syntax_error, validate_tree


@dataclass
class RunResult:
    source: str
    tree: SyntaxTree | None
    validation: ValidationReport
    outcome: ExecutionOutcome


def blocked_outcome(report: ValidationReport) -> ExecutionOutcome:
    """Outcome for a program the validator rejected; nothing was executed."""
    first = report.violations[0]
    record = ExceptionRecord(first.exception_kind, first.detail, first.span, ("<module>",))
    return ExecutionOutcome(Status.Blocked, record, "", {}, 0, 0.0, [])


def run_source(source: str, policy: PolicyConfig, tools=None, *, validate: bool = True,
               rng_seed: int = 0, clock=None, trace: Callable[[str], None] | None = None) -> RunResult:
    try:
        tree = parse(source)
    except SafexecSyntaxError as err:
        report = report_for_syntax_error(err, policy)
        return RunResult(source, None, report, blocked_outcome(report))
    if validate:
        report = validate_tree(tree, policy)
        if report.verdict is Verdict.Blocked:
            return RunResult(source, tree, report, blocked_outcome(report))
    else:
        report = ValidationReport(Verdict.Allowed, (), policy.policy_id, tree.node_count)
    outcome = execute(tree, policy, tools, rng_seed=rng_seed, clock=clock, trace=trace)
    return RunResult(source, tree, report, outcome)
