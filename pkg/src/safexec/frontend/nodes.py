"""Syntax tree types for the restricted Python subset.

Child layout per kind (fixed; the parser, printer, validator and interpreter
all rely on it):

    Module          [stmt*]
    Block           [stmt+]
    FunctionDef     [Arguments, Block]                 payload: name
    Lambda          [Arguments, expr]
    Arguments       [Param*, returns-annotation?]
    Param           [annotation?]                      payload: name
    Return          [expr?]
    Assign          [target+, value]
    AugAssign       [target, value]                    payload: "+=" etc.
    ExprStmt        [expr]
    If              [test, Block, Block?]
    For             [target, iter, Block]
    While           [test, Block]
    Break/Continue/Pass  []
    Import          [Alias+]
    ImportFrom      [Alias+]                           payload: module
    Alias           []                                 payload: [name, asname|None]
    Raise           [expr?]
    Call            [func, arg*, Keyword*]
    Keyword         [value]                            payload: name
    Attribute       [value]                            payload: attr
    Subscript       [value, index-or-Slice]
    Slice           [lower?, upper?, step?]            payload: [has_lower, has_upper, has_step]
    BinOp           [left, right]                      payload: op
    UnaryOp         [operand]                          payload: "-" | "not"
    BoolOp          [value, value+]                    payload: "and" | "or"
    Compare         [left, comparator+]                payload: [op, ...]
    IfExp           [test, body, orelse]
    Name            []                                 payload: identifier
    Const           []                                 payload: int|float|bool|str|None
    List/Tuple/Set  [elt*]
    Dict            [k0, v0, k1, v1, ...]
    ListComp        [elt, Comprehension]
    DictComp        [key, value, Comprehension]
    Comprehension   [target, iter, cond?]
    FString         [Const|FormattedValue ...]
    FormattedValue  [value, FString?]                  payload: "r"|"s"|"a"|None
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, Iterator, NamedTuple


class Span(NamedTuple):
    """1-based source range; ``end_col`` is exclusive."""

    start_line: int
    start_col: int
    end_line: int
    end_col: int

    @property
    def start(self) -> tuple[int, int]:
        return (self.start_line, self.start_col)

    @property
    def end(self) -> tuple[int, int]:
        return (self.end_line, self.end_col)

    def cover(self, other: Span) -> Span:
        lo = min(self.start, other.start)
        hi = max(self.end, other.end)
        return Span(lo[0], lo[1], hi[0], hi[1])

    def encloses(self, other: Span) -> bool:
        return self.start <= other.start and other.end <= self.end

    def to_list(self) -> list[int]:
        return [self.start_line, self.start_col, self.end_line, self.end_col]


class NodeKind(str, enum.Enum):
    Module = "Module"
    Block = "Block"
    FunctionDef = "FunctionDef"
    Lambda = "Lambda"
    Arguments = "Arguments"
    Param = "Param"
    Return = "Return"
    Assign = "Assign"
    AugAssign = "AugAssign"
    ExprStmt = "ExprStmt"
    If = "If"
    For = "For"
    While = "While"
    Break = "Break"
    Continue = "Continue"
    Pass = "Pass"
    Import = "Import"
    ImportFrom = "ImportFrom"
    Alias = "Alias"
    Raise = "Raise"
    Call = "Call"
    Keyword = "Keyword"
    Attribute = "Attribute"
    Subscript = "Subscript"
    Slice = "Slice"
    BinOp = "BinOp"
    UnaryOp = "UnaryOp"
    BoolOp = "BoolOp"
    Compare = "Compare"
    IfExp = "IfExp"
    Name = "Name"
    Const = "Const"
    List = "List"
    Tuple = "Tuple"
    Dict = "Dict"
    Set = "Set"
    ListComp = "ListComp"
    DictComp = "DictComp"
    Comprehension = "Comprehension"
    FString = "FString"
    FormattedValue = "FormattedValue"

    def __str__(self) -> str:
        return self.value


# Parts of a parent construct; they cannot appear on their own, so policies
# never list them and the validator never reports them.
STRUCTURAL_KINDS = frozenset({
    NodeKind.Block,
    NodeKind.Arguments,
    NodeKind.Param,
    NodeKind.Alias,
    NodeKind.Keyword,
    NodeKind.Comprehension,
    NodeKind.FormattedValue,
})

POLICY_KINDS = frozenset(k for k in NodeKind if k not in STRUCTURAL_KINDS)

PAYLOAD_KINDS = frozenset({
    NodeKind.FunctionDef, NodeKind.Param, NodeKind.AugAssign,
    NodeKind.ImportFrom, NodeKind.Alias, NodeKind.Keyword,
    NodeKind.Attribute, NodeKind.Slice, NodeKind.BinOp, NodeKind.UnaryOp,
    NodeKind.BoolOp, NodeKind.Compare, NodeKind.Name, NodeKind.Const,
    NodeKind.FormattedValue,
})

STATEMENT_KINDS = frozenset({
    NodeKind.FunctionDef, NodeKind.Return, NodeKind.Assign,
    NodeKind.AugAssign, NodeKind.ExprStmt, NodeKind.If, NodeKind.For,
    NodeKind.While, NodeKind.Break, NodeKind.Continue, NodeKind.Pass,
    NodeKind.Import, NodeKind.ImportFrom, NodeKind.Raise,
})

# NodeKind -> class name in CPython's ``ast`` module.  ``None`` marks kinds
# with no counterpart there; CPython classes absent from the values
# (Load, Store, operator and context classes) are ignored when comparing.
KIND_MAPPING: dict[NodeKind, str | None] = {
    NodeKind.Module: "Module",
    NodeKind.Block: None,
    NodeKind.FunctionDef: "FunctionDef",
    NodeKind.Lambda: "Lambda",
    NodeKind.Arguments: "arguments",
    NodeKind.Param: "arg",
    NodeKind.Return: "Return",
    NodeKind.Assign: "Assign",
    NodeKind.AugAssign: "AugAssign",
    NodeKind.ExprStmt: "Expr",
    NodeKind.If: "If",
    NodeKind.For: "For",
    NodeKind.While: "While",
    NodeKind.Break: "Break",
    NodeKind.Continue: "Continue",
    NodeKind.Pass: "Pass",
    NodeKind.Import: "Import",
    NodeKind.ImportFrom: "ImportFrom",
    NodeKind.Alias: "alias",
    NodeKind.Raise: "Raise",
    NodeKind.Call: "Call",
    NodeKind.Keyword: "keyword",
    NodeKind.Attribute: "Attribute",
    NodeKind.Subscript: "Subscript",
    NodeKind.Slice: "Slice",
    NodeKind.BinOp: "BinOp",
    NodeKind.UnaryOp: "UnaryOp",
    NodeKind.BoolOp: "BoolOp",
    NodeKind.Compare: "Compare",
    NodeKind.IfExp: "IfExp",
    NodeKind.Name: "Name",
    NodeKind.Const: "Constant",
    NodeKind.List: "List",
    NodeKind.Tuple: "Tuple",
    NodeKind.Dict: "Dict",
    NodeKind.Set: "Set",
    NodeKind.ListComp: "ListComp",
    NodeKind.DictComp: "DictComp",
    NodeKind.Comprehension: "comprehension",
    NodeKind.FString: "JoinedStr",
    NodeKind.FormattedValue: "FormattedValue",
}


@dataclass(frozen=True, eq=False, slots=True)
class AstNode:
    kind: NodeKind
    children: tuple[AstNode, ...]
    payload: Any
    span: Span

    def walk(self) -> Iterator[AstNode]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def shape(self) -> tuple:
        """Span-free structural key; payload types are kept so 1 != True."""
        payload = self.payload
        if isinstance(payload, list):
            payload = tuple(payload)
        return (
            self.kind.value,
            type(self.payload).__name__,
            payload,
            tuple(child.shape() for child in self.children),
        )

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {"kind": self.kind.value}
        if self.kind in PAYLOAD_KINDS:
            payload = self.payload
            obj["payload"] = list(payload) if isinstance(payload, tuple) else payload
        obj["span"] = self.span.to_list()
        obj["children"] = [child.to_json_obj() for child in self.children]
        return obj


@dataclass(frozen=True, eq=False)
class SyntaxTree:
    root: AstNode
    node_count: int = field(init=False)
    kinds_present: frozenset[NodeKind] = field(init=False)

    def __post_init__(self) -> None:
        count = 0
        kinds = set()
        for node in self.root.walk():
            count += 1
            kinds.add(node.kind)
        object.__setattr__(self, "node_count", count)
        object.__setattr__(self, "kinds_present", frozenset(kinds))

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.root.to_json_obj(), ensure_ascii=False, indent=indent)

    def kind_counts(self) -> dict[NodeKind, int]:
        counts: dict[NodeKind, int] = {}
        for node in self.root.walk():
            counts[node.kind] = counts.get(node.kind, 0) + 1
        return counts


def collect_kinds(tree: SyntaxTree) -> frozenset[NodeKind]:
    return frozenset(node.kind for node in tree.root.walk())


@dataclass(frozen=True)
class SyntaxDiagnostic:
    message: str
    span: Span
    expected: str | None = None
    # Name of an excluded construct (e.g. "ClassDef") when the input is valid
    # Python that falls outside the supported grammar.
    excluded: str | None = None

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "message": self.message,
            "span": self.span.to_list(),
            "expected": self.expected,
            "excluded": self.excluded,
        }

    def __str__(self) -> str:
        return f"{self.span.start_line}:{self.span.start_col}: {self.message}"


class SafexecSyntaxError(Exception):
    """Raised by tokenize/parse; carries one or more diagnostics."""

    def __init__(self, diagnostics: list[SyntaxDiagnostic]) -> None:
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class SourceProgram:
    text: str
    origin: str = "<input>"
