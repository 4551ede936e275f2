"""Recursive-descent parser for the Python subset.

Constructs that are valid Python but outside the supported grammar fail
with a diagnostic whose ``excluded`` field names the construct, so callers
can tell "not allowed" apart from "not Python".
"""

from __future__ import annotations

import sys
from typing import Any

from .lexer import FStringBody, Token, TokenType, decode_escapes, tokenize, tokenize_expression
from .nodes import (
    AstNode,
    NodeKind,
    SafexecSyntaxError,
    SourceProgram,
    Span,
    SyntaxDiagnostic,
    SyntaxTree,
)

T = TokenType
K = NodeKind

MAX_NESTING = 100
# Each nesting level costs roughly a dozen host frames.
_RECURSION_FLOOR = 10_000

KEYWORDS = frozenset({
    "False", "None", "True", "and", "as", "assert", "async", "await", "break",
    "class", "continue", "def", "del", "elif", "else", "except", "finally",
    "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
})

_EXCLUDED_STATEMENTS = {
    "class": "ClassDef",
    "try": "Try",
    "except": "Try",
    "finally": "Try",
    "with": "With",
    "async": "AsyncConstruct",
    "await": "Await",
    "global": "Global",
    "nonlocal": "Nonlocal",
    "del": "Delete",
    "assert": "Assert",
    "yield": "Yield",
}

_AUG_OPS = {
    T.PLUSEQ: "+=", T.MINUSEQ: "-=", T.STAREQ: "*=", T.DSLASHEQ: "//=",
}
_UNSUPPORTED_AUG = {T.SLASHEQ, T.PERCENTEQ, T.DSTAREQ, T.ATEQ, T.AMPEREQ,
                    T.VBAREQ, T.CIRCUMFLEXEQ, T.LSHIFTEQ, T.RSHIFTEQ}
_COMPARE_OPS = {T.EQ: "==", T.NE: "!=", T.LT: "<", T.LE: "<=", T.GT: ">", T.GE: ">="}
_TERM_OPS = {T.STAR: "*", T.SLASH: "/", T.DSLASH: "//", T.PERCENT: "%"}
_BITWISE = {T.AMPER, T.VBAR, T.CIRCUMFLEX, T.LSHIFT, T.RSHIFT}
_EXPR_END = {T.NEWLINE, T.SEMI, T.ASSIGN, T.RPAR, T.RSQB, T.RBRACE, T.COLON, T.EOF,
             *_AUG_OPS, *_UNSUPPORTED_AUG}


def _node(kind: NodeKind, children: list[AstNode] | tuple, payload: Any, span: Span) -> AstNode:
    return AstNode(kind, tuple(children), payload, span)


def _cover(nodes: list[AstNode], fallback: Span) -> Span:
    if not nodes:
        return fallback
    span = nodes[0].span
    for node in nodes[1:]:
        span = span.cover(node.span)
    return span


class _Parser:
    def __init__(self, tokens: list[Token], depth: int = 0) -> None:
        if tokens:
            last = tokens[-1].span
            eof_span = Span(last.end_line, last.end_col, last.end_line, last.end_col)
        else:
            eof_span = Span(1, 1, 1, 1)
        self.tokens = tokens + [Token(T.EOF, None, eof_span)]
        self.i = 0
        self.depth = depth
        self.function_depth = 0
        self.loop_depth = 0

    # -- token helpers ---------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def _peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def _advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.type is not T.EOF:
            self.i += 1
        return tok

    def _at(self, ttype: TokenType) -> bool:
        return self.tokens[self.i].type is ttype

    def _at_kw(self, word: str) -> bool:
        tok = self.tokens[self.i]
        return tok.type is T.NAME and tok.value == word

    def _fail(self, message: str, tok: Token | None = None, expected: str | None = None,
              excluded: str | None = None, span: Span | None = None):
        if span is None:
            span = (tok or self.tok).span
        raise SafexecSyntaxError([SyntaxDiagnostic(message, span, expected, excluded)])

    def _excluded(self, construct: str, tok: Token | None = None, span: Span | None = None):
        self._fail(f"{construct} is not part of the supported grammar", tok,
                   excluded=construct, span=span)

    def _expect(self, ttype: TokenType) -> Token:
        if self.tok.type is not ttype:
            self._unexpected(expected=ttype.value if ttype is not T.NEWLINE else "end of line")
        return self._advance()

    def _expect_kw(self, word: str) -> Token:
        if not self._at_kw(word):
            self._unexpected(expected=word)
        return self._advance()

    def _unexpected(self, expected: str | None = None):
        tok = self.tok
        if tok.type is T.EOF:
            what = "end of input"
        elif tok.type is T.NEWLINE:
            what = "end of line"
        elif tok.type is T.INDENT:
            self._fail("unexpected indent", tok)
        elif tok.type is T.DEDENT:
            what = "end of block"
        elif tok.type in (T.NAME, T.INT, T.FLOAT):
            what = repr(tok.value)
        elif tok.type in (T.STRING, T.FSTRING):
            what = "string literal"
        else:
            what = f"'{tok.type.value}'"
        message = f"invalid syntax: unexpected {what}"
        if expected:
            message += f", expected '{expected}'"
        self._fail(message, tok, expected=expected)

    def _enter(self, tok: Token) -> None:
        self.depth += 1
        if self.depth > MAX_NESTING:
            self._fail("too many nested levels", tok)

    def _leave(self) -> None:
        self.depth -= 1

    # -- module / statements ---------------------------------------------

    def parse_module(self) -> AstNode:
        body: list[AstNode] = []
        while not self._at(T.EOF):
            if self._at(T.NEWLINE):
                self._advance()
                continue
            body.extend(self._statement())
        if body:
            end = body[-1].span
            span = Span(1, 1, end.end_line, end.end_col)
        else:
            span = Span(1, 1, 1, 1)
        return _node(K.Module, body, None, span)

    def _statement(self) -> list[AstNode]:
        tok = self.tok
        if tok.type is T.NAME:
            word = tok.value
            if word == "if":
                return [self._if()]
            if word == "while":
                return [self._while()]
            if word == "for":
                return [self._for()]
            if word == "def":
                return [self._def()]
            if word in _EXCLUDED_STATEMENTS:
                self._excluded(_EXCLUDED_STATEMENTS[word], tok)
            if word == "match" and self._looks_like_match():
                self._excluded("Match", tok)
        elif tok.type is T.AT:
            self._excluded("Decorator", tok)
        elif tok.type is T.INDENT:
            self._fail("unexpected indent", tok)
        return self._simple_statements()

    def _looks_like_match(self) -> bool:
        nxt = self._peek()
        if nxt.type in (T.ASSIGN, T.DOT, T.NEWLINE, T.SEMI, T.COMMA, T.EOF) or nxt.type in _AUG_OPS:
            return False
        j = self.i
        while self.tokens[j].type not in (T.NEWLINE, T.EOF):
            j += 1
        return self.tokens[j - 1].type is T.COLON

    def _simple_statements(self) -> list[AstNode]:
        stmts = [self._simple()]
        while self._at(T.SEMI):
            self._advance()
            if self._at(T.NEWLINE):
                break
            stmts.append(self._simple())
        self._expect(T.NEWLINE)
        return stmts

    def _simple(self) -> AstNode:
        tok = self.tok
        if tok.type is T.NAME:
            word = tok.value
            if word == "pass":
                self._advance()
                return _node(K.Pass, [], None, tok.span)
            if word in ("break", "continue"):
                self._advance()
                if self.loop_depth == 0:
                    self._fail(f"'{word}' outside loop", tok)
                return _node(K.Break if word == "break" else K.Continue, [], None, tok.span)
            if word == "return":
                self._advance()
                if self.function_depth == 0:
                    self._fail("'return' outside function", tok)
                if self.tok.type in (T.NEWLINE, T.SEMI):
                    return _node(K.Return, [], None, tok.span)
                value = self._exprlist()
                return _node(K.Return, [value], None, tok.span.cover(value.span))
            if word == "raise":
                self._advance()
                if self.tok.type in (T.NEWLINE, T.SEMI):
                    return _node(K.Raise, [], None, tok.span)
                exc = self._expr()
                if self._at_kw("from"):
                    self._excluded("RaiseFrom", self.tok)
                return _node(K.Raise, [exc], None, tok.span.cover(exc.span))
            if word == "import":
                return self._import()
            if word == "from":
                return self._import_from()
            if word in _EXCLUDED_STATEMENTS:
                self._excluded(_EXCLUDED_STATEMENTS[word], tok)
        return self._expression_statement()

    def _dotted_name(self) -> tuple[str, Span]:
        first = self._expect(T.NAME)
        if first.value in KEYWORDS:
            self._unexpected_keyword(first)
        parts = [first.value]
        span = first.span
        while self._at(T.DOT):
            self._advance()
            part = self._expect(T.NAME)
            parts.append(part.value)
            span = span.cover(part.span)
        return ".".join(parts), span

    def _alias(self, dotted: bool) -> AstNode:
        if dotted:
            name, span = self._dotted_name()
        else:
            tok = self._expect(T.NAME)
            if tok.value in KEYWORDS:
                self._unexpected_keyword(tok)
            name, span = tok.value, tok.span
        asname = None
        if self._at_kw("as"):
            self._advance()
            as_tok = self._expect(T.NAME)
            if as_tok.value in KEYWORDS:
                self._unexpected_keyword(as_tok)
            asname = as_tok.value
            span = span.cover(as_tok.span)
        return _node(K.Alias, [], (name, asname), span)

    def _import(self) -> AstNode:
        start = self._advance()
        aliases = [self._alias(dotted=True)]
        while self._at(T.COMMA):
            self._advance()
            aliases.append(self._alias(dotted=True))
        return _node(K.Import, aliases, None, start.span.cover(aliases[-1].span))

    def _import_from(self) -> AstNode:
        start = self._advance()
        if self._at(T.DOT) or self._at(T.ELLIPSIS):
            self._excluded("RelativeImport", self.tok)
        module, _ = self._dotted_name()
        self._expect_kw("import")
        if self._at(T.STAR):
            self._excluded("ImportStar", self.tok)
        parenthesized = self._at(T.LPAR)
        if parenthesized:
            self._advance()
        aliases = [self._alias(dotted=False)]
        while self._at(T.COMMA):
            self._advance()
            if parenthesized and self._at(T.RPAR):
                break
            aliases.append(self._alias(dotted=False))
        end = aliases[-1].span
        if parenthesized:
            end = self._expect(T.RPAR).span
        return _node(K.ImportFrom, aliases, module, start.span.cover(end))

    def _expression_statement(self) -> AstNode:
        first = self._exprlist()
        tok = self.tok
        if tok.type is T.ASSIGN:
            targets = [first]
            while self._at(T.ASSIGN):
                self._advance()
                targets.append(self._exprlist())
            value = targets.pop()
            for target in targets:
                self._check_target(target)
            return _node(K.Assign, targets + [value], None, _cover(targets + [value], first.span))
        if tok.type in _AUG_OPS:
            self._advance()
            if first.kind not in (K.Name, K.Attribute, K.Subscript):
                self._fail("illegal expression for augmented assignment", span=first.span)
            value = self._exprlist()
            return _node(K.AugAssign, [first, value], _AUG_OPS[tok.type], first.span.cover(value.span))
        if tok.type in _UNSUPPORTED_AUG:
            self._excluded(f"AugAssign '{tok.type.value}'", tok)
        if tok.type is T.COLON:
            self._excluded("AnnAssign", tok)
        if tok.type is T.WALRUS:
            self._excluded("NamedExpr", tok)
        return _node(K.ExprStmt, [first], None, first.span)

    def _check_target(self, node: AstNode) -> None:
        if node.kind in (K.Name, K.Attribute, K.Subscript):
            if node.kind is K.Name and node.payload in KEYWORDS:
                self._fail(f"cannot assign to {node.payload}", span=node.span)
            return
        if node.kind in (K.Tuple, K.List):
            for child in node.children:
                self._check_target(child)
            return
        self._fail(f"cannot assign to {node.kind.value}", span=node.span)

    def _block(self) -> AstNode:
        colon = self._expect(T.COLON)
        self._enter(colon)
        if self._at(T.NEWLINE):
            self._advance()
            if not self._at(T.INDENT):
                self._fail("expected an indented block", self.tok, expected="INDENT")
            self._advance()
            stmts: list[AstNode] = []
            while not self._at(T.DEDENT) and not self._at(T.EOF):
                stmts.extend(self._statement())
            self._expect(T.DEDENT)
        else:
            stmts = self._simple_statements()
        self._leave()
        return _node(K.Block, stmts, None, _cover(stmts, colon.span))

    def _if(self) -> AstNode:
        start = self._advance()
        test = self._expr()
        body = self._block()
        children = [test, body]
        if self._at_kw("elif"):
            nested = self._if()
            children.append(_node(K.Block, [nested], None, nested.span))
        elif self._at_kw("else"):
            self._advance()
            children.append(self._block())
        return _node(K.If, children, None, start.span.cover(children[-1].span))

    def _loop_body(self) -> AstNode:
        self.loop_depth += 1
        try:
            return self._block()
        finally:
            self.loop_depth -= 1

    def _while(self) -> AstNode:
        start = self._advance()
        test = self._expr()
        body = self._loop_body()
        if self._at_kw("else"):
            self._excluded("LoopElse", self.tok)
        return _node(K.While, [test, body], None, start.span.cover(body.span))

    def _for(self) -> AstNode:
        start = self._advance()
        target = self._target_list()
        self._expect_kw("in")
        iterable = self._exprlist()
        body = self._loop_body()
        if self._at_kw("else"):
            self._excluded("LoopElse", self.tok)
        return _node(K.For, [target, iterable, body], None, start.span.cover(body.span))

    def _def(self) -> AstNode:
        start = self._advance()
        name_tok = self._expect(T.NAME)
        if name_tok.value in KEYWORDS:
            self._unexpected_keyword(name_tok)
        lpar = self._expect(T.LPAR)
        params: list[AstNode] = []
        seen: set[str] = set()
        while not self._at(T.RPAR):
            tok = self.tok
            if tok.type in (T.STAR, T.DSTAR):
                self._excluded("Starred", tok)
            if tok.type is T.SLASH:
                self._excluded("PositionalOnlyMarker", tok)
            param_tok = self._expect(T.NAME)
            if param_tok.value in KEYWORDS:
                self._unexpected_keyword(param_tok)
            if param_tok.value in seen:
                self._fail(f"duplicate argument '{param_tok.value}' in function definition", param_tok)
            seen.add(param_tok.value)
            children = []
            span = param_tok.span
            if self._at(T.COLON):
                self._advance()
                annotation = self._expr()
                children.append(annotation)
                span = span.cover(annotation.span)
            if self._at(T.ASSIGN):
                self._excluded("DefaultArgument", self.tok)
            params.append(_node(K.Param, children, param_tok.value, span))
            if not self._at(T.COMMA):
                break
            self._advance()
        rpar = self._expect(T.RPAR)
        arg_children = list(params)
        arg_span = lpar.span.cover(rpar.span)
        if self._at(T.ARROW):
            self._advance()
            returns = self._expr()
            arg_children.append(returns)
            arg_span = arg_span.cover(returns.span)
        arguments = _node(K.Arguments, arg_children, None, arg_span)
        saved_loops = self.loop_depth
        self.loop_depth = 0
        self.function_depth += 1
        try:
            body = self._block()
        finally:
            self.function_depth -= 1
            self.loop_depth = saved_loops
        return _node(K.FunctionDef, [arguments, body], name_tok.value, start.span.cover(body.span))

    def _unexpected_keyword(self, tok: Token):
        self._fail(f"invalid syntax: '{tok.value}' is a reserved keyword", tok)

    # -- targets ---------------------------------------------------------

    def _target_list(self) -> AstNode:
        first = self._target()
        if not self._at(T.COMMA):
            return first
        elts = [first]
        while self._at(T.COMMA):
            self._advance()
            if self._at_kw("in") or self._at(T.ASSIGN):
                break
            elts.append(self._target())
        return _node(K.Tuple, elts, None, _cover(elts, first.span))

    def _target(self) -> AstNode:
        if self._at(T.STAR):
            self._excluded("Starred", self.tok)
        node = self._primary()
        self._check_target(node)
        return node

    # -- expressions -----------------------------------------------------

    def _exprlist(self) -> AstNode:
        first = self._expr()
        if not self._at(T.COMMA):
            return first
        elts = [first]
        while self._at(T.COMMA):
            self._advance()
            if self.tok.type in _EXPR_END:
                break
            elts.append(self._expr())
        return _node(K.Tuple, elts, None, _cover(elts, first.span))

    def _expr(self) -> AstNode:
        tok = self.tok
        if tok.type is T.NAME:
            if tok.value == "lambda":
                self._enter(tok)
                node = self._lambda()
                self._leave()
                return node
            if tok.value == "yield":
                self._excluded("Yield", tok)
            if tok.value == "await":
                self._excluded("Await", tok)
        if tok.type is T.STAR:
            self._excluded("Starred", tok)
        node = self._disjunction()
        if self._at_kw("if"):
            self._advance()
            test = self._disjunction()
            else_tok = self._expect_kw("else")
            self._enter(else_tok)
            orelse = self._expr()
            self._leave()
            node = _node(K.IfExp, [test, node, orelse], None, node.span.cover(orelse.span))
        if self._at(T.WALRUS):
            self._excluded("NamedExpr", self.tok)
        return node

    def _lambda(self) -> AstNode:
        start = self._advance()
        params: list[AstNode] = []
        seen: set[str] = set()
        while not self._at(T.COLON):
            tok = self.tok
            if tok.type in (T.STAR, T.DSTAR):
                self._excluded("Starred", tok)
            param_tok = self._expect(T.NAME)
            if param_tok.value in KEYWORDS:
                self._unexpected_keyword(param_tok)
            if param_tok.value in seen:
                self._fail(f"duplicate argument '{param_tok.value}' in function definition", param_tok)
            seen.add(param_tok.value)
            if self._at(T.ASSIGN):
                self._excluded("DefaultArgument", self.tok)
            params.append(_node(K.Param, [], param_tok.value, param_tok.span))
            if not self._at(T.COMMA):
                break
            self._advance()
        colon = self._expect(T.COLON)
        arguments = _node(K.Arguments, params, None, _cover(params, start.span))
        saved = (self.function_depth, self.loop_depth)
        body = self._expr()
        self.function_depth, self.loop_depth = saved
        del colon
        return _node(K.Lambda, [arguments, body], None, start.span.cover(body.span))

    def _disjunction(self) -> AstNode:
        first = self._conjunction()
        if not self._at_kw("or"):
            return first
        values = [first]
        while self._at_kw("or"):
            self._advance()
            values.append(self._conjunction())
        return _node(K.BoolOp, values, "or", _cover(values, first.span))

    def _conjunction(self) -> AstNode:
        first = self._inversion()
        if not self._at_kw("and"):
            return first
        values = [first]
        while self._at_kw("and"):
            self._advance()
            values.append(self._inversion())
        return _node(K.BoolOp, values, "and", _cover(values, first.span))

    def _inversion(self) -> AstNode:
        if self._at_kw("not"):
            tok = self._advance()
            self._enter(tok)
            operand = self._inversion()
            self._leave()
            return _node(K.UnaryOp, [operand], "not", tok.span.cover(operand.span))
        return self._comparison()

    def _comparison(self) -> AstNode:
        left = self._arith()
        ops: list[str] = []
        comparators: list[AstNode] = []
        while True:
            tok = self.tok
            if tok.type in _BITWISE:
                self._excluded(f"BitwiseOperator '{tok.type.value}'", tok)
            if tok.type in _COMPARE_OPS:
                self._advance()
                ops.append(_COMPARE_OPS[tok.type])
            elif self._at_kw("in"):
                self._advance()
                ops.append("in")
            elif self._at_kw("not") and self._peek().type is T.NAME and self._peek().value == "in":
                self._advance()
                self._advance()
                ops.append("not in")
            elif self._at_kw("is"):
                self._advance()
                if self._at_kw("not"):
                    self._advance()
                    ops.append("is not")
                else:
                    ops.append("is")
            else:
                break
            comparators.append(self._arith())
        if not ops:
            return left
        return _node(K.Compare, [left] + comparators, tuple(ops),
                     left.span.cover(comparators[-1].span))

    def _arith(self) -> AstNode:
        left = self._term()
        while self.tok.type in (T.PLUS, T.MINUS):
            op = self._advance().type.value
            right = self._term()
            left = _node(K.BinOp, [left, right], op, left.span.cover(right.span))
        return left

    def _term(self) -> AstNode:
        left = self._factor()
        while True:
            tok = self.tok
            if tok.type is T.AT:
                self._excluded("MatMult", tok)
            if tok.type not in _TERM_OPS:
                return left
            self._advance()
            right = self._factor()
            left = _node(K.BinOp, [left, right], _TERM_OPS[tok.type], left.span.cover(right.span))

    def _factor(self) -> AstNode:
        tok = self.tok
        if tok.type is T.MINUS:
            self._advance()
            self._enter(tok)
            operand = self._factor()
            self._leave()
            return _node(K.UnaryOp, [operand], "-", tok.span.cover(operand.span))
        if tok.type is T.PLUS:
            self._fail("unary '+' is not supported", tok)
        if tok.type is T.TILDE:
            self._excluded("BitwiseOperator '~'", tok)
        return self._power()

    def _power(self) -> AstNode:
        base = self._primary()
        if self._at(T.DSTAR):
            self._advance()
            exponent = self._factor()
            return _node(K.BinOp, [base, exponent], "**", base.span.cover(exponent.span))
        return base

    def _primary(self) -> AstNode:
        node = self._atom()
        while True:
            tok = self.tok
            if tok.type is T.LPAR:
                node = self._call(node)
            elif tok.type is T.LSQB:
                node = self._subscript(node)
            elif tok.type is T.DOT:
                self._advance()
                name = self._expect(T.NAME)
                if name.value in KEYWORDS:
                    self._unexpected_keyword(name)
                node = _node(K.Attribute, [node], name.value, node.span.cover(name.span))
            else:
                return node

    def _call(self, func: AstNode) -> AstNode:
        lpar = self._advance()
        self._enter(lpar)
        args: list[AstNode] = []
        keywords: list[AstNode] = []
        seen: set[str] = set()
        while not self._at(T.RPAR):
            tok = self.tok
            if tok.type in (T.STAR, T.DSTAR):
                self._excluded("Starred", tok)
            if tok.type is T.NAME and self._peek().type is T.ASSIGN:
                if tok.value in KEYWORDS:
                    self._unexpected_keyword(tok)
                if tok.value in seen:
                    self._fail(f"keyword argument repeated: {tok.value}", tok)
                seen.add(tok.value)
                self._advance()
                self._advance()
                value = self._expr()
                keywords.append(_node(K.Keyword, [value], tok.value, tok.span.cover(value.span)))
            else:
                if keywords:
                    self._fail("positional argument follows keyword argument", tok)
                arg = self._expr()
                if self._at_kw("for"):
                    self._excluded("GeneratorExp", self.tok)
                args.append(arg)
            if not self._at(T.COMMA):
                break
            self._advance()
        rpar = self._expect(T.RPAR)
        self._leave()
        return _node(K.Call, [func] + args + keywords, None, func.span.cover(rpar.span))

    def _subscript(self, value: AstNode) -> AstNode:
        lsqb = self._advance()
        self._enter(lsqb)
        first_tok = self.tok
        lower = None
        if not self._at(T.COLON):
            lower = self._expr()
        if self._at(T.COLON):
            index = self._slice(lower, first_tok)
        elif self._at(T.COMMA):
            elts = [lower]
            while self._at(T.COMMA):
                self._advance()
                if self._at(T.RSQB):
                    break
                elts.append(self._expr())
                if self._at(T.COLON):
                    self._excluded("ExtendedSlice", self.tok)
            index = _node(K.Tuple, elts, None, _cover(elts, first_tok.span))
        else:
            index = lower
        rsqb = self._expect(T.RSQB)
        self._leave()
        return _node(K.Subscript, [value, index], None, value.span.cover(rsqb.span))

    def _slice(self, lower: AstNode | None, first_tok: Token) -> AstNode:
        colon = self._advance()
        last_span = colon.span
        upper = step = None
        if self.tok.type not in (T.COLON, T.RSQB, T.COMMA):
            upper = self._expr()
            last_span = upper.span
        if self._at(T.COLON):
            last_span = self._advance().span
            if self.tok.type not in (T.RSQB, T.COMMA):
                step = self._expr()
                last_span = step.span
        if self._at(T.COMMA):
            self._excluded("ExtendedSlice", self.tok)
        parts = [p for p in (lower, upper, step) if p is not None]
        start = lower.span if lower is not None else first_tok.span
        return _node(K.Slice, parts, (lower is not None, upper is not None, step is not None),
                     start.cover(last_span))

    def _atom(self) -> AstNode:
        tok = self.tok
        ttype = tok.type
        if ttype is T.NAME:
            word = tok.value
            if word in ("True", "False", "None"):
                self._advance()
                value = {"True": True, "False": False, "None": None}[word]
                return _node(K.Const, [], value, tok.span)
            if word in ("yield", "await", "lambda"):
                return self._expr()
            if word in KEYWORDS:
                self._unexpected_keyword(tok)
            self._advance()
            return _node(K.Name, [], word, tok.span)
        if ttype in (T.INT, T.FLOAT):
            self._advance()
            return _node(K.Const, [], tok.value, tok.span)
        if ttype in (T.STRING, T.FSTRING):
            return self._strings()
        if ttype is T.LPAR:
            return self._paren()
        if ttype is T.LSQB:
            return self._list()
        if ttype is T.LBRACE:
            return self._brace()
        if ttype is T.STAR:
            self._excluded("Starred", tok)
        if ttype is T.ELLIPSIS:
            self._excluded("Ellipsis", tok)
        self._unexpected(expected="expression")

    def _paren(self) -> AstNode:
        lpar = self._advance()
        self._enter(lpar)
        if self._at(T.RPAR):
            rpar = self._advance()
            self._leave()
            return _node(K.Tuple, [], None, lpar.span.cover(rpar.span))
        first = self._expr()
        if self._at_kw("for"):
            self._excluded("GeneratorExp", self.tok)
        if not self._at(T.COMMA):
            self._expect(T.RPAR)
            self._leave()
            return first
        elts = [first]
        while self._at(T.COMMA):
            self._advance()
            if self._at(T.RPAR):
                break
            elts.append(self._expr())
        rpar = self._expect(T.RPAR)
        self._leave()
        return _node(K.Tuple, elts, None, lpar.span.cover(rpar.span))

    def _list(self) -> AstNode:
        lsqb = self._advance()
        self._enter(lsqb)
        elts: list[AstNode] = []
        if not self._at(T.RSQB):
            first = self._expr()
            if self._at_kw("for"):
                comp = self._comprehension()
                rsqb = self._expect(T.RSQB)
                self._leave()
                return _node(K.ListComp, [first, comp], None, lsqb.span.cover(rsqb.span))
            elts.append(first)
            while self._at(T.COMMA):
                self._advance()
                if self._at(T.RSQB):
                    break
                elts.append(self._expr())
        rsqb = self._expect(T.RSQB)
        self._leave()
        return _node(K.List, elts, None, lsqb.span.cover(rsqb.span))

    def _brace(self) -> AstNode:
        lbrace = self._advance()
        self._enter(lbrace)
        if self._at(T.RBRACE):
            rbrace = self._advance()
            self._leave()
            return _node(K.Dict, [], None, lbrace.span.cover(rbrace.span))
        if self._at(T.DSTAR):
            self._excluded("DictUnpack", self.tok)
        first = self._expr()
        if self._at(T.COLON):
            self._advance()
            value = self._expr()
            if self._at_kw("for"):
                comp = self._comprehension()
                rbrace = self._expect(T.RBRACE)
                self._leave()
                return _node(K.DictComp, [first, value, comp], None, lbrace.span.cover(rbrace.span))
            items = [first, value]
            while self._at(T.COMMA):
                self._advance()
                if self._at(T.RBRACE):
                    break
                if self._at(T.DSTAR):
                    self._excluded("DictUnpack", self.tok)
                key = self._expr()
                self._expect(T.COLON)
                items.extend([key, self._expr()])
            rbrace = self._expect(T.RBRACE)
            self._leave()
            return _node(K.Dict, items, None, lbrace.span.cover(rbrace.span))
        if self._at_kw("for"):
            self._excluded("SetComp", self.tok)
        elts = [first]
        while self._at(T.COMMA):
            self._advance()
            if self._at(T.RBRACE):
                break
            elts.append(self._expr())
        rbrace = self._expect(T.RBRACE)
        self._leave()
        return _node(K.Set, elts, None, lbrace.span.cover(rbrace.span))

    def _comprehension(self) -> AstNode:
        start = self._advance()
        target = self._target_list()
        self._expect_kw("in")
        iterable = self._disjunction()
        children = [target, iterable]
        if self._at_kw("if"):
            self._advance()
            children.append(self._disjunction())
        if self._at_kw("if"):
            self._excluded("MultipleComprehensionConditions", self.tok)
        if self._at_kw("for") or self._at_kw("async"):
            self._excluded("NestedComprehension", self.tok)
        return _node(K.Comprehension, children, None, start.span.cover(children[-1].span))

    # -- strings ---------------------------------------------------------

    def _strings(self) -> AstNode:
        toks: list[Token] = []
        while self.tok.type in (T.STRING, T.FSTRING):
            toks.append(self._advance())
        span = toks[0].span.cover(toks[-1].span)
        if all(t.type is T.STRING for t in toks):
            return _node(K.Const, [], "".join(t.value for t in toks), span)
        parts: list[AstNode] = []
        for t in toks:
            if t.type is T.STRING:
                parts.append(_node(K.Const, [], t.value, t.span))
            else:
                parts.extend(_FStringParser(t.value, self).parse_top())
        return _node(K.FString, _merge_constants(parts), None, span)


def _merge_constants(parts: list[AstNode]) -> list[AstNode]:
    merged: list[AstNode] = []
    for part in parts:
        if part.kind is K.Const:
            if part.payload == "":
                continue
            if merged and merged[-1].kind is K.Const:
                prev = merged.pop()
                part = _node(K.Const, [], prev.payload + part.payload, prev.span.cover(part.span))
        merged.append(part)
    return merged


class _FStringParser:
    """Splits an f-string body into literal and replacement-field nodes."""

    def __init__(self, body: FStringBody, outer: _Parser) -> None:
        self.raw = body.raw
        self.is_raw = body.is_raw
        self.outer = outer
        # (line, col) for every index, plus one past the end
        positions = []
        line, col = body.start_line, body.start_col
        for ch in self.raw:
            positions.append((line, col))
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
        positions.append((line, col))
        self.positions = positions

    def _span(self, start: int, end: int) -> Span:
        a = self.positions[start]
        b = self.positions[end]
        return Span(a[0], a[1], b[0], b[1])

    def _fail(self, message: str, index: int, excluded: str | None = None):
        raise SafexecSyntaxError([SyntaxDiagnostic(
            f"f-string: {message}", self._span(index, min(index + 1, len(self.raw))),
            excluded=excluded)])

    def parse_top(self) -> list[AstNode]:
        parts, end = self._parse_parts(0, nested=False)
        assert end == len(self.raw)
        return parts

    def _parse_parts(self, i: int, nested: bool) -> tuple[list[AstNode], int]:
        raw = self.raw
        n = len(raw)
        parts: list[AstNode] = []
        buf: list[str] = []
        buf_start = i

        def flush(end: int) -> None:
            if buf:
                text = "".join(buf)
                if not self.is_raw:
                    text = decode_escapes(text, lambda k: self._span(buf_start, buf_start + 1))
                parts.append(_node(K.Const, [], text, self._span(buf_start, end)))
                buf.clear()

        while i < n:
            ch = raw[i]
            if ch == "{":
                if not nested and raw.startswith("{{", i):
                    if not buf:
                        buf_start = i
                    buf.append("{")
                    i += 2
                    continue
                flush(i)
                field, i = self._replacement_field(i)
                parts.append(field)
                buf_start = i
            elif ch == "}":
                if nested:
                    break
                if raw.startswith("}}", i):
                    if not buf:
                        buf_start = i
                    buf.append("}")
                    i += 2
                    continue
                self._fail("single '}' is not allowed", i)
            else:
                if not buf:
                    buf_start = i
                if ch == "\\" and i + 1 < n and not self.is_raw:
                    buf.append(raw[i:i + 2])
                    i += 2
                else:
                    buf.append(ch)
                    i += 1
        flush(i)
        return parts, i

    def _replacement_field(self, start: int) -> tuple[AstNode, int]:
        raw = self.raw
        n = len(raw)
        i = start + 1
        depth = 0
        quote: str | None = None
        while i < n:
            ch = raw[i]
            if quote:
                if raw.startswith(quote, i):
                    i += len(quote)
                    quote = None
                    continue
                i += 1
                continue
            if ch in "'\"":
                quote = ch * 3 if raw.startswith(ch * 3, i) else ch
                i += len(quote)
                continue
            if ch in "([{":
                depth += 1
            elif ch in ")]}":
                if depth == 0:
                    break
                depth -= 1
            elif depth == 0 and ch == "!" and not raw.startswith("!=", i):
                break
            elif depth == 0 and ch == ":":
                break
            elif depth == 0 and ch == "=" and not raw.startswith("==", i) and raw[i - 1] not in "=!<>":
                self._fail("self-documenting expressions are not supported", i,
                           excluded="FStringDebugExpression")
            i += 1
        if i >= n:
            self._fail("expecting '}'", start)
        expr_text = raw[start + 1:i]
        if "\\" in expr_text:
            self._fail("expression part cannot include a backslash", start)
        if not expr_text.strip():
            self._fail("empty expression not allowed", start)
        line, col = self.positions[start + 1]
        tokens = tokenize_expression(expr_text, line, col)
        sub = _Parser(tokens, depth=self.outer.depth)
        value = sub._exprlist()
        if not sub._at(T.EOF):
            sub._unexpected()
        conversion = None
        if raw[i] == "!":
            conversion = raw[i + 1:i + 2]
            if conversion not in ("r", "s", "a"):
                self._fail("invalid conversion character: expected 's', 'r', or 'a'", i)
            i += 2
        children = [value]
        if i < n and raw[i] == ":":
            spec_start = i + 1
            spec_parts, i = self._parse_parts(spec_start, nested=True)
            children.append(_node(K.FString, _merge_constants(spec_parts), None,
                                  self._span(spec_start, i)))
        if i >= n or raw[i] != "}":
            self._fail("expecting '}'", start)
        i += 1
        return _node(K.FormattedValue, children, conversion, self._span(start, i)), i


def parse(src: SourceProgram | str) -> SyntaxTree:
    """Parse source into a SyntaxTree; raises SafexecSyntaxError."""
    if isinstance(src, str):
        src = SourceProgram(src)
    tokens = tokenize(src)
    if sys.getrecursionlimit() < _RECURSION_FLOOR:
        sys.setrecursionlimit(_RECURSION_FLOOR)
    try:
        root = _Parser(tokens).parse_module()
    except RecursionError:
        raise SafexecSyntaxError([SyntaxDiagnostic(
            "too many nested levels", Span(1, 1, 1, 1))]) from None
    return SyntaxTree(root)
