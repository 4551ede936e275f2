"""Static checks of a syntax tree against a policy.

Every rule runs over the whole tree and all violations are collected; the
report is Blocked exactly when at least one violation was found.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

from .categories import ExceptionKind, RiskCategory, call_category, import_category
from .frontend.nodes import (
    STRUCTURAL_KINDS,
    AstNode,
    NodeKind,
    SafexecSyntaxError,
    Span,
    SyntaxTree,
)
from .policy import PolicyConfig
from .scopes import analyze

K = NodeKind


class Verdict(str, enum.Enum):
    Allowed = "Allowed"
    Blocked = "Blocked"

    def __str__(self) -> str:
        return self.value


class Rule(str, enum.Enum):
    node_kind = "node_kind"
    import_ = "import"
    call = "call"
    forward_reference = "forward_reference"
    dunder = "dunder"
    infinite_loop = "infinite_loop"
    loop_nesting = "loop_nesting"
    syntax = "syntax"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Violation:
    category: RiskCategory
    detail: str
    span: Span
    offending: str
    rule: Rule = Rule.node_kind
    exception_kind: ExceptionKind = ExceptionKind.NodeNotAllowedError

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "category": self.category.value,
            "detail": self.detail,
            "offending": self.offending,
            "span": list(self.span),
        }


@dataclass(frozen=True)
class ValidationReport:
    verdict: Verdict
    violations: tuple[Violation, ...] = field(default_factory=tuple)
    policy_id: str = ""
    node_count: int = 0

    @property
    def allowed(self) -> bool:
        return self.verdict is Verdict.Allowed

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "policy_id": self.policy_id,
            "violations": [v.to_json_obj() for v in self.violations],
        }


def is_dunder(name: str) -> bool:
    return len(name) > 4 and name.startswith("__") and name.endswith("__")


def is_constant_true_loop(node: AstNode) -> bool:
    """A While whose test is a truthy literal and whose body has no Break."""
    test = node.children[0]
    if test.kind is not K.Const or not test.payload:
        return False
    return not any(n.kind is K.Break for n in node.children[1].walk())


def show_name(name: str) -> str:
    """Printable form of an identifier; hidden characters become escapes."""
    if name.isprintable() and name.isascii():
        return name
    return "".join(ch if ch.isascii() and ch.isprintable() else ch.encode("unicode_escape").decode("ascii")
                   for ch in name)


def _sort_key(v: Violation) -> tuple:
    return (tuple(v.span), v.rule.value, v.offending)


def validate_tree(tree: SyntaxTree, policy: PolicyConfig) -> ValidationReport:
    violations: list[Violation] = []
    allowed_kinds = policy.allowed_node_kinds
    tool_names = policy.tool_names
    import_table = policy.import_category_table()

    # (a) node kinds, (b) imports, (d) dunder attributes
    for node in tree.root.walk():
        kind = node.kind
        if kind not in allowed_kinds and kind not in STRUCTURAL_KINDS:
            violations.append(Violation(
                RiskCategory.CodeInjection,
                f"syntax element {kind.value} is not in the allowed node kinds",
                node.span, kind.value, Rule.node_kind, ExceptionKind.NodeNotAllowedError))
        if kind is K.Import:
            for alias in node.children:
                module = alias.payload[0]
                if module not in policy.allowed_imports:
                    violations.append(_import_violation(module, alias.span, import_table))
        elif kind is K.ImportFrom:
            if node.payload not in policy.allowed_imports:
                violations.append(_import_violation(node.payload, node.span, import_table))
        elif kind is K.Attribute and not policy.allowed_dunder_access and is_dunder(node.payload):
            violations.append(Violation(
                RiskCategory.UnsafeReflection,
                f"access to dunder attribute {node.payload} is not allowed",
                node.span, node.payload, Rule.dunder, ExceptionKind.NodeNotAllowedError))
        elif kind is K.While and is_constant_true_loop(node):
            violations.append(Violation(
                RiskCategory.InfiniteLoop,
                "while loop with a constant true condition and no break",
                node.span, "while", Rule.infinite_loop, ExceptionKind.WhileTrueError))

    # (c) bare-name calls
    info = analyze(tree)
    for call, scope in info.calls:
        callee = call.children[0]
        if callee.kind is not K.Name:
            continue
        name = callee.payload
        if name in tool_names or name in policy.allowed_builtins:
            continue
        owner = scope.resolve(name)
        if owner is None:
            violations.append(Violation(
                call_category(name, tool_names),
                f"call to {name} is neither an allowed builtin, a declared tool, nor a function defined earlier",
                call.span, name, Rule.call, ExceptionKind.FunctionNotAllowedError))
        elif not any(pos < callee.span.start for pos in owner.bindings[name]):
            violations.append(Violation(
                RiskCategory.OperationalError,
                f"call to {name} precedes its definition",
                call.span, name, Rule.forward_reference, ExceptionKind.FunctionNotAllowedError))

    # (f) syntactic loop nesting
    limit = policy.limits.max_nested_loop_depth
    stack: list[tuple[AstNode, int]] = [(tree.root, 0)]
    while stack:
        node, depth = stack.pop()
        if node.kind in (K.FunctionDef, K.Lambda):
            depth = 0
        elif node.kind in (K.For, K.While):
            depth += 1
            if depth > limit:
                violations.append(Violation(
                    RiskCategory.ResourceExhaustion,
                    f"loop nesting depth {depth} exceeds the limit of {limit}",
                    node.span, node.kind.value, Rule.loop_nesting,
                    ExceptionKind.NestedLoopDepthThresholdReachedError))
        stack.extend((child, depth) for child in node.children)

    violations.sort(key=_sort_key)
    verdict = Verdict.Blocked if violations else Verdict.Allowed
    return ValidationReport(verdict, tuple(violations), policy.policy_id, tree.node_count)


def _import_violation(module: str, span: Span, table) -> Violation:
    return Violation(
        import_category(module, table),
        f"import of {module} is not in the allowed imports",
        span, module, Rule.import_, ExceptionKind.ImportNotAllowedError)


def report_for_syntax_error(error: SafexecSyntaxError, policy: PolicyConfig) -> ValidationReport:
    """Blocked report for source that does not parse.

    Constructs that exist in the host language but fall outside the
    supported grammar count as code injection; other syntax errors are
    ordinary operational errors.
    """
    violations = []
    for diag in error.diagnostics:
        if diag.excluded:
            category, offending = RiskCategory.CodeInjection, diag.excluded
        else:
            category, offending = RiskCategory.OperationalError, "syntax"
        violations.append(Violation(category, diag.message, diag.span, offending,
                                    Rule.syntax, ExceptionKind.NodeNotAllowedError))
    return ValidationReport(Verdict.Blocked, tuple(violations), policy.policy_id, 0)


def explain_violation(v: Violation) -> str:
    """One deterministic sentence naming the offending symbol, rule and category."""
    name = show_name(v.offending)
    cat = f"(category: {v.category.display})"
    rule = v.rule
    if rule is Rule.call:
        if v.category is RiskCategory.ToolNotAllowed:
            return f"Blocked: call to '{name}' does not match any declared tool or allowed builtin {cat}."
        return f"Blocked: call to '{name}' is not in the allowed builtins {cat}."
    if rule is Rule.forward_reference:
        return f"Blocked: call to '{name}' appears before '{name}' is defined {cat}."
    if rule is Rule.import_:
        return f"Blocked: import of '{name}' is not in the allowed imports {cat}."
    if rule is Rule.dunder:
        return f"Blocked: access to dunder attribute '{name}' is not permitted by the policy {cat}."
    if rule is Rule.infinite_loop:
        return f"Blocked: while loop with a constant true condition has no reachable break {cat}."
    if rule is Rule.loop_nesting:
        return f"Blocked: {v.detail}; loops may not nest that deeply {cat}."
    if rule is Rule.syntax:
        return f"Blocked: the code does not parse in the supported grammar ({v.detail}) {cat}."
    return f"Blocked: syntax element '{name}' is not in the allowed node kinds {cat}."
