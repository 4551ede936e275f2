from __future__ import annotations

import ast
import json

import pytest
from hypothesis import given, settings, strategies as st

from safexec.frontend import (
    KIND_MAPPING,
    STRUCTURAL_KINDS,
    NodeKind,
    SafexecSyntaxError,
    TokenType,
    collect_kinds,
    parse,
    to_source,
    tokenize,
)
from safexec.paths import CORPUS_DIR

SAFE_SOURCES = sorted((CORPUS_DIR / "safe").glob("*.py"))


def kinds(tree):
    return {k.value for k in collect_kinds(tree) - STRUCTURAL_KINDS}


def cpython_shape(node):
    """Class names of a CPython ast in pre-order, skipping context/operator classes."""
    wanted = {v for v in KIND_MAPPING.values() if v}
    out = []
    stack = [node]
    while stack:
        n = stack.pop()
        name = type(n).__name__
        if name in wanted:
            out.append(name)
        if isinstance(n, ast.Dict):
            # our tree keeps key/value pairs adjacent
            children = [c for pair in zip(n.keys, n.values) for c in pair]
        else:
            children = list(ast.iter_child_nodes(n))
        stack.extend(reversed(children))
    return out


def our_shape(tree):
    return [KIND_MAPPING[n.kind] for n in tree.root.walk() if KIND_MAPPING.get(n.kind)]


def test_tokenize_assignment():
    toks = tokenize("x = 1 + 3")
    assert [t.type for t in toks] == [TokenType.NAME, TokenType.ASSIGN, TokenType.INT, TokenType.PLUS,
                                      TokenType.INT, TokenType.NEWLINE]
    assert [t.value for t in toks[:5:2]] == ["x", 1, 3]


def test_tokenize_empty():
    assert tokenize("") == []


def test_unterminated_paren_diagnostic():
    with pytest.raises(SafexecSyntaxError) as info:
        tokenize("def f(\n")
    diag = info.value.diagnostics[0]
    assert diag.message == "unterminated parenthesis"
    assert diag.expected == ")"
    # the reference interpreter rejects it as well
    with pytest.raises(SyntaxError):
        compile("def f(\n", "<t>", "exec")


def test_indent_tokens():
    types = [t.type for t in tokenize("if x:\n    y = 1\nz = 2\n")]
    assert TokenType.INDENT in types and TokenType.DEDENT in types


def test_inconsistent_dedent_is_diagnosed():
    with pytest.raises(SafexecSyntaxError):
        tokenize("if x:\n    y = 1\n  z = 2\n")


def test_parse_assignment_shape():
    tree = parse("x = 1 + 3")
    assert tree.root.shape() == (
        "Module", "NoneType", None,
        (("Assign", "NoneType", None,
          (("Name", "str", "x", ()),
           ("BinOp", "str", "+", (("Const", "int", 1, ()), ("Const", "int", 3, ()))))),),
    )


def test_parse_empty_module():
    tree = parse("")
    assert tree.root.kind is NodeKind.Module and tree.root.children == ()
    assert tree.node_count == 1


def test_parse_while_true_print():
    tree = parse('while True: print("Running forever")')
    (loop,) = tree.root.children
    assert loop.kind is NodeKind.While
    test = loop.children[0]
    assert test.kind is NodeKind.Const and test.payload is True
    assert our_shape(tree) == cpython_shape(ast.parse('while True: print("Running forever")'))


@pytest.mark.parametrize("src, expected", [
    ("x = 1", {"Module", "Assign", "Name", "Const"}),
    ("for i in range(3): pass", {"Module", "For", "Name", "Call", "Const", "Pass"}),
    ("", {"Module"}),
])
def test_collect_kinds(src, expected):
    tree = parse(src)
    assert kinds(tree) == expected
    assert collect_kinds(tree) == tree.kinds_present


@pytest.mark.parametrize("path", SAFE_SOURCES, ids=lambda p: p.stem)
def test_shape_matches_cpython(path):
    src = path.read_text()
    assert our_shape(parse(src)) == cpython_shape(ast.parse(src))


@pytest.mark.parametrize("path", SAFE_SOURCES, ids=lambda p: p.stem)
def test_printer_round_trip(path):
    tree = parse(path.read_text())
    printed = to_source(tree)
    again = parse(printed)
    assert again.root.shape() == tree.root.shape()
    assert to_source(again) == printed


def test_node_count_matches_walk():
    tree = parse((CORPUS_DIR / "safe" / SAFE_SOURCES[0].name).read_text())
    assert tree.node_count == sum(1 for _ in tree.root.walk())


@pytest.mark.parametrize("src", ["class A: pass", "x = (y for y in z)", "with f() as g: pass",
                                 "async def f(): pass", "try:\n    pass\nexcept E:\n    pass\n"])
def test_excluded_constructs_are_diagnosed(src):
    with pytest.raises(SafexecSyntaxError) as info:
        parse(src)
    assert any(d.excluded for d in info.value.diagnostics)


def test_dump_ast_is_json():
    obj = json.loads(parse("x = 1").to_json())
    assert obj["kind"] == "Module"


# -- properties -------------------------------------------------------------

names = st.sampled_from(["a", "b", "total", "x1"])
ints = st.integers(min_value=0, max_value=10**6)


@st.composite
def expressions(draw, depth=0):
    if depth > 2 or draw(st.booleans()):
        return draw(st.one_of(names, ints.map(str), st.text("abc xyz", max_size=5).map(repr)))
    op = draw(st.sampled_from(["+", "-", "*", "//", "%", "<", "==", "and", "or"]))
    left = draw(expressions(depth + 1))
    right = draw(expressions(depth + 1))
    return f"({left} {op} {right})"


@st.composite
def programs(draw):
    lines = []
    for _ in range(draw(st.integers(1, 5))):
        form = draw(st.sampled_from(["assign", "if", "for", "print"]))
        target = draw(names)
        expr = draw(expressions())
        if form == "assign":
            lines.append(f"{target} = {expr}")
        elif form == "if":
            lines.append(f"if {expr}:\n    {target} = {expr}\nelse:\n    pass")
        elif form == "for":
            lines.append(f"for {target} in range(3):\n    print({expr})")
        else:
            lines.append(f"print({expr}, sep='-')")
    return "\n".join(lines) + "\n"


@settings(max_examples=150, deadline=None)
@given(programs())
def test_generated_programs_match_cpython_and_round_trip(src):
    tree = parse(src)
    assert our_shape(tree) == cpython_shape(ast.parse(src))
    printed = to_source(tree)
    assert parse(printed).root.shape() == tree.root.shape()


@settings(max_examples=150, deadline=None)
@given(programs())
def test_spans_lie_within_source(src):
    lines = src.split("\n")
    for node in parse(src).root.walk():
        s = node.span
        assert 1 <= s.start_line <= s.end_line <= len(lines)


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=40))
def test_tokenize_total(text):
    try:
        tokenize(text)
    except SafexecSyntaxError as err:
        assert err.diagnostics and all(d.message for d in err.diagnostics)
