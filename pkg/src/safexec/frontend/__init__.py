"""Lexing, parsing and printing for the supported Python subset."""

from __future__ import annotations

from .lexer import Token, TokenType, tokenize
from .nodes import (
    KIND_MAPPING,
    POLICY_KINDS,
    STRUCTURAL_KINDS,
    AstNode,
    NodeKind,
    SafexecSyntaxError,
    SourceProgram,
    Span,
    SyntaxDiagnostic,
    SyntaxTree,
    collect_kinds,
)
from .parser import parse
from .printer import to_source

__all__ = [
    "KIND_MAPPING",
    "POLICY_KINDS",
    "STRUCTURAL_KINDS",
    "AstNode",
    "NodeKind",
    "SafexecSyntaxError",
    "SourceProgram",
    "Span",
    "SyntaxDiagnostic",
    "SyntaxTree",
    "Token",
    "TokenType",
    "collect_kinds",
    "parse",
    "to_source",
    "tokenize",
]
