"""Canonical source printer.

Output is not meant to preserve formatting; it only has to reparse to a tree
with the same kinds, payloads and child structure.
"""

from __future__ import annotations

import math

from .nodes import AstNode, NodeKind, SyntaxTree

K = NodeKind
INDENT = "    "

# Binding strength, loosest first.
_LAMBDA, _IFEXP, _OR, _AND, _NOT, _CMP, _ADD, _MUL, _UNARY, _POW, _PRIMARY, _ATOM = range(12)

_BINOP_LEVEL = {"+": _ADD, "-": _ADD, "*": _MUL, "/": _MUL, "//": _MUL, "%": _MUL, "**": _POW}

_SIMPLE_ESCAPES = {"\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _escape(text: str, quote: str) -> str:
    out = []
    for ch in text:
        if ch in _SIMPLE_ESCAPES:
            out.append(_SIMPLE_ESCAPES[ch])
        elif ch == quote:
            out.append("\\" + ch)
        elif ch.isprintable():
            out.append(ch)
        else:
            code = ord(ch)
            if code < 0x100:
                out.append(f"\\x{code:02x}")
            elif code < 0x10000:
                out.append(f"\\u{code:04x}")
            else:
                out.append(f"\\U{code:08x}")
    return "".join(out)


def _const(value) -> str:
    if isinstance(value, str):
        return "'" + _escape(value, "'") + "'"
    if isinstance(value, float):
        if math.isinf(value):
            return "1e999"
        return repr(value)
    return repr(value)


def _level(node: AstNode) -> int:
    kind = node.kind
    if kind is K.Lambda:
        return _LAMBDA
    if kind is K.IfExp:
        return _IFEXP
    if kind is K.BoolOp:
        return _OR if node.payload == "or" else _AND
    if kind is K.UnaryOp:
        return _NOT if node.payload == "not" else _UNARY
    if kind is K.Compare:
        return _CMP
    if kind is K.BinOp:
        return _BINOP_LEVEL[node.payload]
    if kind in (K.Call, K.Attribute, K.Subscript):
        return _PRIMARY
    return _ATOM


class _Printer:
    def __init__(self) -> None:
        self.lines: list[str] = []

    # -- statements ------------------------------------------------------

    def stmt(self, node: AstNode, depth: int) -> None:
        pad = INDENT * depth
        kind = node.kind
        ch = node.children
        if kind is K.FunctionDef:
            self.lines.append(f"{pad}def {node.payload}({self.arguments(ch[0], lambda_form=False)}:")
            self.block(ch[1], depth + 1)
        elif kind is K.If:
            self.if_chain(node, depth, "if")
        elif kind is K.For:
            self.lines.append(f"{pad}for {self.expr(ch[0])} in {self.expr(ch[1])}:")
            self.block(ch[2], depth + 1)
        elif kind is K.While:
            self.lines.append(f"{pad}while {self.expr(ch[0])}:")
            self.block(ch[1], depth + 1)
        else:
            self.lines.append(pad + self.simple(node))

    def if_chain(self, node: AstNode, depth: int, keyword: str) -> None:
        pad = INDENT * depth
        ch = node.children
        self.lines.append(f"{pad}{keyword} {self.expr(ch[0])}:")
        self.block(ch[1], depth + 1)
        if len(ch) == 3:
            orelse = ch[2]
            if len(orelse.children) == 1 and orelse.children[0].kind is K.If:
                self.if_chain(orelse.children[0], depth, "elif")
            else:
                self.lines.append(f"{pad}else:")
                self.block(orelse, depth + 1)

    def block(self, node: AstNode, depth: int) -> None:
        for child in node.children:
            self.stmt(child, depth)

    def simple(self, node: AstNode) -> str:
        kind = node.kind
        ch = node.children
        if kind is K.Pass:
            return "pass"
        if kind is K.Break:
            return "break"
        if kind is K.Continue:
            return "continue"
        if kind is K.Return:
            return "return" if not ch else f"return {self.expr(ch[0])}"
        if kind is K.Raise:
            return "raise" if not ch else f"raise {self.expr(ch[0])}"
        if kind is K.ExprStmt:
            return self.expr(ch[0])
        if kind is K.Assign:
            return " = ".join(self.expr(c) for c in ch)
        if kind is K.AugAssign:
            return f"{self.expr(ch[0])} {node.payload} {self.expr(ch[1])}"
        if kind is K.Import:
            return "import " + ", ".join(self.alias(a) for a in ch)
        if kind is K.ImportFrom:
            return f"from {node.payload} import " + ", ".join(self.alias(a) for a in ch)
        raise ValueError(f"not a statement kind: {kind}")

    @staticmethod
    def alias(node: AstNode) -> str:
        name, asname = node.payload
        return name if asname is None else f"{name} as {asname}"

    def arguments(self, node: AstNode, lambda_form: bool) -> str:
        params = []
        returns = None
        for child in node.children:
            if child.kind is K.Param:
                text = child.payload
                if child.children:
                    text += ": " + self.expr(child.children[0])
                params.append(text)
            else:
                returns = child
        text = ", ".join(params)
        if lambda_form:
            return text
        text += ")"
        if returns is not None:
            text += " -> " + self.expr(returns)
        return text

    # -- expressions -----------------------------------------------------

    def sub(self, node: AstNode, minimum: int) -> str:
        text = self.expr(node)
        if _level(node) < minimum:
            return f"({text})"
        return text

    def expr(self, node: AstNode) -> str:
        kind = node.kind
        ch = node.children
        if kind is K.Name:
            return node.payload
        if kind is K.Const:
            return _const(node.payload)
        if kind is K.BinOp:
            level = _BINOP_LEVEL[node.payload]
            if node.payload == "**":
                return f"{self.sub(ch[0], _PRIMARY)} ** {self.sub(ch[1], _UNARY)}"
            return f"{self.sub(ch[0], level)} {node.payload} {self.sub(ch[1], level + 1)}"
        if kind is K.UnaryOp:
            if node.payload == "not":
                return "not " + self.sub(ch[0], _NOT)
            return "-" + self.sub(ch[0], _UNARY)
        if kind is K.BoolOp:
            level = _OR if node.payload == "or" else _AND
            return f" {node.payload} ".join(self.sub(c, level + 1) for c in ch)
        if kind is K.Compare:
            parts = [self.sub(ch[0], _ADD)]
            for op, comparator in zip(node.payload, ch[1:]):
                parts.append(op)
                parts.append(self.sub(comparator, _ADD))
            return " ".join(parts)
        if kind is K.IfExp:
            test, body, orelse = ch
            return f"{self.sub(body, _OR)} if {self.sub(test, _OR)} else {self.sub(orelse, _IFEXP)}"
        if kind is K.Lambda:
            params = self.arguments(ch[0], lambda_form=True)
            head = f"lambda {params}" if params else "lambda"
            return f"{head}: {self.expr(ch[1])}"
        if kind is K.Call:
            args = [self.expr(c) if c.kind is not K.Keyword
                    else f"{c.payload}={self.expr(c.children[0])}" for c in ch[1:]]
            return f"{self.primary_value(ch[0])}({', '.join(args)})"
        if kind is K.Attribute:
            return f"{self.primary_value(ch[0])}.{node.payload}"
        if kind is K.Subscript:
            index = ch[1]
            if index.kind is K.Slice:
                inner = self.slice(index)
            elif index.kind is K.Tuple and index.children:
                inner = ", ".join(self.expr(c) for c in index.children)
                if len(index.children) == 1:
                    inner += ","
            else:
                inner = self.expr(index)
            return f"{self.primary_value(ch[0])}[{inner}]"
        if kind is K.Tuple:
            if len(ch) == 1:
                return f"({self.expr(ch[0])},)"
            return "(" + ", ".join(self.expr(c) for c in ch) + ")"
        if kind is K.List:
            return "[" + ", ".join(self.expr(c) for c in ch) + "]"
        if kind is K.Set:
            return "{" + ", ".join(self.expr(c) for c in ch) + "}"
        if kind is K.Dict:
            pairs = [f"{self.expr(ch[i])}: {self.expr(ch[i + 1])}" for i in range(0, len(ch), 2)]
            return "{" + ", ".join(pairs) + "}"
        if kind is K.ListComp:
            return f"[{self.expr(ch[0])} {self.comprehension(ch[1])}]"
        if kind is K.DictComp:
            return f"{{{self.expr(ch[0])}: {self.expr(ch[1])} {self.comprehension(ch[2])}}}"
        if kind is K.FString:
            return self.fstring(node)
        raise ValueError(f"not an expression kind: {kind}")

    def primary_value(self, node: AstNode) -> str:
        # "1.real" would lex as a float
        if node.kind is K.Const and isinstance(node.payload, (int, float)) and not isinstance(node.payload, bool):
            return f"({self.expr(node)})"
        return self.sub(node, _PRIMARY)

    def slice(self, node: AstNode) -> str:
        has_lower, has_upper, has_step = node.payload
        parts = iter(node.children)
        lower = self.expr(next(parts)) if has_lower else ""
        upper = self.expr(next(parts)) if has_upper else ""
        text = f"{lower}:{upper}"
        if has_step:
            text += ":" + self.expr(next(parts))
        return text

    def comprehension(self, node: AstNode) -> str:
        ch = node.children
        text = f"for {self.expr(ch[0])} in {self.sub(ch[1], _OR)}"
        if len(ch) == 3:
            text += f" if {self.sub(ch[2], _OR)}"
        return text

    def fstring(self, node: AstNode) -> str:
        body = self.fstring_body(node)
        for quote in ('"', "'", '"""', "'''"):
            if quote not in body and not body.endswith(quote[0]):
                return f"f{quote}{body}{quote}"
        raise ValueError("f-string cannot be printed without quote conflicts")

    def fstring_body(self, node: AstNode) -> str:
        out = []
        for part in node.children:
            if part.kind is K.Const:
                text = _escape(part.payload, "")
                out.append(text.replace("{", "{{").replace("}", "}}"))
                continue
            value = part.children[0]
            text = self.sub(value, _OR)
            if "\\" in text:
                raise ValueError("f-string expression cannot contain a backslash")
            if text.startswith("{"):
                text = " " + text
            if text.endswith("}"):
                text += " "
            field = "{" + text
            if part.payload is not None:
                field += "!" + part.payload
            if len(part.children) == 2:
                field += ":" + self.fstring_body(part.children[1])
            out.append(field + "}")
        return "".join(out)


def to_source(tree: SyntaxTree | AstNode) -> str:
    """Render a tree back into source text in canonical layout."""
    root = tree.root if isinstance(tree, SyntaxTree) else tree
    printer = _Printer()
    if root.kind is K.Module:
        for stmt in root.children:
            printer.stmt(stmt, 0)
        return "".join(line + "\n" for line in printer.lines)
    return printer.expr(root)
