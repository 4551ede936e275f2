"""Indentation-aware tokenizer for the Python subset."""

from __future__ import annotations

import enum
import re
import unicodedata
from dataclasses import dataclass
from typing import Any

from .nodes import SafexecSyntaxError, SourceProgram, Span, SyntaxDiagnostic


class TokenType(str, enum.Enum):
    NAME = "NAME"
    INT = "INT"
    FLOAT = "FLOAT"
    STRING = "STRING"
    FSTRING = "FSTRING"
    NEWLINE = "NEWLINE"
    INDENT = "INDENT"
    DEDENT = "DEDENT"
    EOF = "EOF"
    # operators
    ASSIGN = "="
    PLUS = "+"
    MINUS = "-"
    STAR = "*"
    SLASH = "/"
    DSLASH = "//"
    PERCENT = "%"
    DSTAR = "**"
    EQ = "=="
    NE = "!="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="
    LPAR = "("
    RPAR = ")"
    LSQB = "["
    RSQB = "]"
    LBRACE = "{"
    RBRACE = "}"
    COMMA = ","
    COLON = ":"
    SEMI = ";"
    DOT = "."
    ARROW = "->"
    PLUSEQ = "+="
    MINUSEQ = "-="
    STAREQ = "*="
    SLASHEQ = "/="
    DSLASHEQ = "//="
    PERCENTEQ = "%="
    DSTAREQ = "**="
    # lexed so the parser can name them; none are in the grammar
    AT = "@"
    AMPER = "&"
    VBAR = "|"
    CIRCUMFLEX = "^"
    TILDE = "~"
    LSHIFT = "<<"
    RSHIFT = ">>"
    WALRUS = ":="
    ELLIPSIS = "..."
    ATEQ = "@="
    AMPEREQ = "&="
    VBAREQ = "|="
    CIRCUMFLEXEQ = "^="
    LSHIFTEQ = "<<="
    RSHIFTEQ = ">>="

    def __repr__(self) -> str:
        return self.name


_OPERATORS = sorted(
    [t for t in TokenType if t.name not in {"NAME", "INT", "FLOAT", "STRING", "FSTRING",
                                            "NEWLINE", "INDENT", "DEDENT", "EOF"}],
    key=lambda t: -len(t.value),
)

_OPENERS = {"(": ")", "[": "]", "{": "}"}
_CLOSERS = {")": "(", "]": "[", "}": "{"}

_NAME_RE = re.compile(r"[^\W\d]\w*")
_NUMBER_RE = re.compile(r"([0-9]+\.[0-9]*|\.[0-9]+|[0-9]+)([eE][+-]?[0-9]+)?")
_DIGITS = frozenset("0123456789")
_STRING_PREFIXES = {"", "r", "u", "f", "rf", "fr", "b", "br", "rb"}


@dataclass(frozen=True)
class Token:
    type: TokenType
    value: Any
    span: Span

    def __repr__(self) -> str:
        if self.type in (TokenType.NAME, TokenType.INT, TokenType.FLOAT, TokenType.STRING):
            return f"{self.type.name}({self.value!r})"
        return self.type.name


@dataclass(frozen=True)
class FStringBody:
    """Raw f-string contents, sub-parsed by the parser."""

    raw: str
    is_raw: bool
    start_line: int
    start_col: int


def decode_escapes(body: str, span_of, offset: int = 0) -> str:
    """Interpret backslash escapes of a non-raw string body.

    ``span_of(i)`` maps an index in ``body`` to a Span for diagnostics.
    """
    if "\\" not in body:
        return body
    out = []
    i = 0
    n = len(body)
    simple = {"\\": "\\", "'": "'", '"': '"', "a": "\a", "b": "\b", "f": "\f",
              "n": "\n", "r": "\r", "t": "\t", "v": "\v", "\n": ""}
    while i < n:
        ch = body[i]
        if ch != "\\" or i + 1 >= n:
            out.append(ch)
            i += 1
            continue
        nxt = body[i + 1]
        if nxt in simple:
            out.append(simple[nxt])
            i += 2
        elif nxt in "01234567":
            j = i + 1
            while j < n and j < i + 4 and body[j] in "01234567":
                j += 1
            out.append(chr(int(body[i + 1:j], 8)))
            i = j
        elif nxt in "xuU":
            width = {"x": 2, "u": 4, "U": 8}[nxt]
            digits = body[i + 2:i + 2 + width]
            if len(digits) != width or not all(c in "0123456789abcdefABCDEF" for c in digits):
                raise SafexecSyntaxError([SyntaxDiagnostic(
                    f"truncated \\{nxt} escape", span_of(i + offset))])
            code = int(digits, 16)
            if code > 0x10FFFF:
                raise SafexecSyntaxError([SyntaxDiagnostic(
                    "illegal Unicode character", span_of(i + offset))])
            out.append(chr(code))
            i += 2 + width
        elif nxt == "N" and i + 2 < n and body[i + 2] == "{":
            end = body.find("}", i + 3)
            try:
                if end < 0:
                    raise KeyError
                out.append(unicodedata.lookup(body[i + 3:end]))
            except KeyError:
                raise SafexecSyntaxError([SyntaxDiagnostic(
                    "malformed \\N character escape", span_of(i + offset))]) from None
            i = end + 1
        else:
            out.append("\\")
            out.append(nxt)
            i += 2
    return "".join(out)


class _Lexer:
    def __init__(self, src: SourceProgram, line: int = 1, col: int = 1,
                 expression_only: bool = False) -> None:
        self.text = src.text
        self.pos = 0
        self.line = line
        self.col = col
        self.tokens: list[Token] = []
        self.indents = [0]
        # An expression embedded in an f-string behaves as if bracketed:
        # newlines are insignificant and no indentation is tracked.
        self.brackets: list[Token] = []
        self.expression_only = expression_only
        if expression_only:
            self.brackets.append(Token(TokenType.LPAR, None, Span(line, col, line, col)))

    # -- position helpers ------------------------------------------------

    def _advance(self, count: int) -> None:
        text = self.text
        for _ in range(count):
            if text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _error(self, message: str, span: Span | None = None, expected: str | None = None):
        if span is None:
            span = Span(self.line, self.col, self.line, self.col + 1)
        raise SafexecSyntaxError([SyntaxDiagnostic(message, span, expected)])

    def _emit(self, ttype: TokenType, value: Any, line: int, col: int) -> None:
        self.tokens.append(Token(ttype, value, Span(line, col, self.line, self.col)))

    # -- main loop -------------------------------------------------------

    def run(self) -> list[Token]:
        text = self.text
        at_line_start = True
        while self.pos < len(text):
            if at_line_start and not self.brackets:
                at_line_start = False
                if self._indentation():
                    at_line_start = True
                    continue
            ch = text[self.pos]
            if ch == "\n":
                if not self.brackets and self.tokens and self.tokens[-1].type not in (
                        TokenType.NEWLINE, TokenType.INDENT, TokenType.DEDENT):
                    self._emit_newline()
                else:
                    self._advance(1)
                at_line_start = not self.brackets
            elif ch in " \t\r\f":
                self._advance(1)
            elif ch == "#":
                while self.pos < len(text) and text[self.pos] != "\n":
                    self._advance(1)
            elif ch == "\\":
                if text.startswith("\\\n", self.pos):
                    self._advance(2)
                elif text.startswith("\\\r\n", self.pos):
                    self._advance(3)
                else:
                    self._error("unexpected character after line continuation character")
            elif ch in _DIGITS or (ch == "." and text[self.pos + 1:self.pos + 2] in _DIGITS):
                self._number()
            elif ch in "'\"":
                self._string("")
            else:
                m = _NAME_RE.match(text, self.pos)
                if m:
                    word = m.group()
                    nxt = text[m.end():m.end() + 1]
                    if nxt and nxt in "'\"" and word.lower() in _STRING_PREFIXES:
                        self._string(word)
                        continue
                    if not word.isidentifier():
                        self._error(f"invalid identifier '{word}'")
                    line, col = self.line, self.col
                    self._advance(len(word))
                    self._emit(TokenType.NAME, word, line, col)
                else:
                    self._operator()
        return self._finish()

    def _emit_newline(self) -> None:
        line, col = self.line, self.col
        self._advance(1)
        self.tokens.append(Token(TokenType.NEWLINE, None, Span(line, col, line, col + 1)))

    def _indentation(self) -> bool:
        """Measure indentation; returns True if the line was blank/comment."""
        text = self.text
        width = 0
        while self.pos < len(text) and text[self.pos] in " \t\f":
            if text[self.pos] == "\t":
                self._error("tab characters are not allowed in indentation")
            if text[self.pos] == " ":
                width += 1
            self._advance(1)
        if self.pos >= len(text):
            return True
        ch = text[self.pos]
        if ch in "\n#" or text.startswith("\r\n", self.pos):
            while self.pos < len(text) and text[self.pos] != "\n":
                self._advance(1)
            if self.pos < len(text):
                self._advance(1)
            return True
        if ch == "\\":
            return False
        span = Span(self.line, self.col, self.line, self.col)
        if width > self.indents[-1]:
            if not self.tokens:
                self._error("unexpected indent", span)
            self.indents.append(width)
            self.tokens.append(Token(TokenType.INDENT, None, span))
        elif width < self.indents[-1]:
            while width < self.indents[-1]:
                self.indents.pop()
                self.tokens.append(Token(TokenType.DEDENT, None, span))
            if width != self.indents[-1]:
                self._error("inconsistent indentation: unindent does not match any outer level", span)
        return False

    def _number(self) -> None:
        text = self.text
        m = _NUMBER_RE.match(text, self.pos)
        assert m is not None
        literal = m.group()
        end = m.end()
        line, col = self.line, self.col
        trailing = text[end:end + 1]
        if trailing and (trailing.isalnum() or trailing in "_."):
            self._error("invalid numeric literal (only decimal int and float literals are supported)",
                        Span(line, col, line, col + end - self.pos + 1))
        is_float = "." in literal or "e" in literal or "E" in literal
        if not is_float and len(literal) > 1 and literal[0] == "0" and literal.strip("0"):
            self._error("leading zeros in decimal integer literals are not permitted",
                        Span(line, col, line, col + len(literal)))
        self._advance(len(literal))
        if is_float:
            self._emit(TokenType.FLOAT, float(literal), line, col)
        else:
            try:
                value = int(literal)
            except ValueError:
                # the host refuses to convert very long digit strings
                self._error("integer literal is too large",
                            Span(line, col, line, col + len(literal)))
            self._emit(TokenType.INT, value, line, col)

    def _string(self, prefix: str) -> None:
        text = self.text
        line, col = self.line, self.col
        lower = prefix.lower()
        if "b" in lower:
            self._error("bytes literals are not supported",
                        Span(line, col, line, col + len(prefix) + 1))
        self._advance(len(prefix))
        quote = text[self.pos]
        triple = text.startswith(quote * 3, self.pos)
        delim = quote * 3 if triple else quote
        self._advance(len(delim))
        body_line, body_col = self.line, self.col
        body_start = self.pos
        while True:
            if self.pos >= len(text):
                self._error("unterminated string literal", Span(line, col, line, col + 1),
                            expected=delim)
            ch = text[self.pos]
            if ch == "\\":
                if self.pos + 1 >= len(text):
                    self._error("unterminated string literal", Span(line, col, line, col + 1),
                                expected=delim)
                self._advance(2)
                continue
            if ch == "\n" and not triple:
                self._error("unterminated string literal", Span(line, col, line, col + 1),
                            expected=delim)
            if text.startswith(delim, self.pos):
                break
            self._advance(1)
        body = text[body_start:self.pos]
        self._advance(len(delim))
        is_raw = "r" in lower
        if "f" in lower:
            value = FStringBody(body, is_raw, body_line, body_col)
            self._emit(TokenType.FSTRING, value, line, col)
            return
        if not is_raw:
            body = decode_escapes(body, self._body_span(body_line, body_col, text[body_start:]))
        self._emit(TokenType.STRING, body, line, col)

    @staticmethod
    def _body_span(line: int, col: int, body: str):
        def span_of(index: int) -> Span:
            ln, cl = line, col
            for ch in body[:index]:
                if ch == "\n":
                    ln, cl = ln + 1, 1
                else:
                    cl += 1
            return Span(ln, cl, ln, cl + 1)
        return span_of

    def _operator(self) -> None:
        text = self.text
        line, col = self.line, self.col
        for ttype in _OPERATORS:
            if text.startswith(ttype.value, self.pos):
                break
        else:
            ch = text[self.pos]
            shown = ch if ch.isprintable() else ch.encode("unicode_escape").decode("ascii")
            self._error(f"illegal character '{shown}'")
        value = ttype.value
        self._advance(len(value))
        token = Token(ttype, None, Span(line, col, self.line, self.col))
        if value in _OPENERS:
            self.brackets.append(token)
        elif value in _CLOSERS:
            if not self.brackets or (self.expression_only and len(self.brackets) == 1):
                self._error(f"unmatched '{value}'", token.span)
            opener = self.brackets.pop()
            if _OPENERS[opener.type.value] != value:
                self._error(
                    f"closing parenthesis '{value}' does not match opening parenthesis "
                    f"'{opener.type.value}'", token.span, expected=_OPENERS[opener.type.value])
        self.tokens.append(token)

    def _finish(self) -> list[Token]:
        if self.expression_only:
            if len(self.brackets) == 1:
                return self.tokens
            self.brackets = self.brackets[1:]
        if self.brackets:
            opener = self.brackets[-1]
            self._error("unterminated parenthesis", opener.span,
                        expected=_OPENERS[opener.type.value])
        if self.tokens and self.tokens[-1].type not in (TokenType.NEWLINE, TokenType.DEDENT):
            line, col = self.line, self.col
            self.tokens.append(Token(TokenType.NEWLINE, None, Span(line, col, line, col)))
        span = Span(self.line, self.col, self.line, self.col)
        while len(self.indents) > 1:
            self.indents.pop()
            self.tokens.append(Token(TokenType.DEDENT, None, span))
        return self.tokens


def tokenize(src: SourceProgram | str) -> list[Token]:
    """Tokenize source text; raises SafexecSyntaxError on lexical errors.

    The returned list carries no EOF marker; an empty program yields [].
    """
    if isinstance(src, str):
        src = SourceProgram(src)
    return _Lexer(src).run()


def tokenize_expression(text: str, line: int, col: int) -> list[Token]:
    """Tokenize an expression embedded at (line, col) of a larger source."""
    return _Lexer(SourceProgram(text), line, col, expression_only=True).run()
