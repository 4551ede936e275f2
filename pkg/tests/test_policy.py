from __future__ import annotations

import json
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from safexec.frontend import POLICY_KINDS, NodeKind, SafexecSyntaxError, parse
from safexec.paths import POLICY_DIR
from safexec.policy import (
    PolicyConfig,
    PolicyLoadError,
    ResourceLimits,
    default_eval_policy,
    load_policy,
    load_policy_file,
    parse_tool_signature,
    serialize_policy,
    validate_policy,
)
from safexec.validator import Verdict, validate_tree

LIMIT_NAMES = ["wall_clock_timeout", "max_total_steps", "max_loop_iterations", "max_nested_loop_depth",
               "max_stack_depth", "max_collection_size", "max_int_magnitude"]


def test_minimal_text_takes_defaults():
    policy = load_policy('{"allowed_node_kinds": ["Module","Assign","Name","Const","BinOp"]}')
    assert policy.allowed_node_kinds == {NodeKind.Module, NodeKind.Assign, NodeKind.Name, NodeKind.Const,
                                         NodeKind.BinOp}
    assert policy.limits == ResourceLimits()
    assert policy.allowed_builtins == default_eval_policy().allowed_builtins


def test_tool_declaration_text():
    policy = load_policy('{"tools": ["search_wikipedia(query: string)"]}')
    (spec,) = policy.tools
    assert spec.name == "search_wikipedia"
    assert spec.params == (("query", "string"),)
    assert spec.required_count == 1


def test_zero_stack_depth_rejected():
    with pytest.raises(PolicyLoadError) as info:
        load_policy('{"limits": {"max_stack_depth": 0}}')
    assert "limits.max_stack_depth must be positive" in [str(e) for e in info.value.errors]


def test_all_problems_reported():
    text = json.dumps({"limits": {"max_stack_depth": 0, "max_loop_iterations": -1},
                       "allowed_node_kinds": ["Assign"], "bogus": 1})
    with pytest.raises(PolicyLoadError) as info:
        load_policy(text)
    messages = " | ".join(str(e) for e in info.value.errors)
    assert "max_stack_depth" in messages and "max_loop_iterations" in messages
    assert "Module" in messages and "bogus" in messages


def test_tool_clash_with_builtin_rejected():
    with pytest.raises(PolicyLoadError):
        load_policy('{"allowed_builtins": ["len"], "tools": ["len(x: any)"]}')


def test_duplicate_tool_rejected():
    with pytest.raises(PolicyLoadError):
        load_policy('{"tools": ["t(x: int)", "t(y: int)"]}')


def test_default_policy_behavior():
    policy = default_eval_policy()
    assert policy.policy_id == "eval-default"
    assert validate_policy(policy) == []
    assert validate_tree(parse("x = 1 + 3"), policy).verdict is Verdict.Allowed
    assert validate_tree(parse("eval(x)"), policy).verdict is Verdict.Blocked


def test_round_trip_default():
    policy = default_eval_policy()
    assert load_policy(serialize_policy(policy)) == policy
    assert serialize_policy(policy) == serialize_policy(default_eval_policy())


def test_bundled_files_are_canonical():
    for path in POLICY_DIR.glob("*.json"):
        text = path.read_text()
        assert serialize_policy(load_policy(text)) == text, path.name
    assert load_policy_file(str(POLICY_DIR / "eval-default.json")) == default_eval_policy()


def test_tools_serialized_sorted():
    policy = load_policy('{"tools": ["zeta(a: int)", "alpha(b: string)"]}')
    names = [t["name"] for t in json.loads(serialize_policy(policy))["tools"]]
    assert names == ["alpha", "zeta"]


def test_key_order_does_not_matter():
    a = '{"policy_id": "p", "allowed_imports": ["math"], "allowed_builtins": ["print", "len"]}'
    b = '{"allowed_builtins": ["len", "print"], "allowed_imports": ["math"], "policy_id": "p"}'
    assert serialize_policy(load_policy(a)) == serialize_policy(load_policy(b))


def test_signature_parsing_optional_params():
    spec = parse_tool_signature("add_to_db(record: dict)")
    assert spec.params == (("record", "dict"),)


# -- properties -------------------------------------------------------------

BUILTINS = sorted(default_eval_policy().allowed_builtins)
KINDS = sorted(POLICY_KINDS - {NodeKind.Module}, key=lambda k: k.value)


@st.composite
def policies(draw):
    limits = ResourceLimits(**{name: draw(st.integers(1, 10**6)) for name in LIMIT_NAMES})
    return PolicyConfig(
        allowed_node_kinds=frozenset(draw(st.sets(st.sampled_from(KINDS)))) | {NodeKind.Module},
        allowed_builtins=frozenset(draw(st.sets(st.sampled_from(BUILTINS)))),
        allowed_imports=frozenset(draw(st.sets(st.sampled_from(["math", "string"])))),
        allowed_dunder_access=draw(st.booleans()),
        limits=limits,
        policy_id=draw(st.text("abcdef-", min_size=1, max_size=8)),
    )


@settings(max_examples=100, deadline=None)
@given(policies())
def test_round_trip_property(policy):
    assert validate_policy(policy) == []
    text = serialize_policy(policy)
    assert load_policy(text) == policy
    assert serialize_policy(load_policy(text)) == text


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_shrinking_never_unblocks(corpus_entries, data):
    wide = default_eval_policy()
    narrow = replace(
        wide,
        allowed_builtins=frozenset(data.draw(st.sets(st.sampled_from(BUILTINS)))),
        allowed_imports=frozenset(data.draw(st.sets(st.sampled_from(["math", "string"])))),
        allowed_node_kinds=POLICY_KINDS - frozenset(data.draw(st.sets(st.sampled_from(KINDS), max_size=4))),
        limits=replace(wide.limits, max_nested_loop_depth=data.draw(st.integers(1, 4))),
    )
    for entry in corpus_entries:
        try:
            tree = parse(entry.source())
        except SafexecSyntaxError:
            continue
        if validate_tree(tree, wide).verdict is Verdict.Blocked:
            assert validate_tree(tree, narrow).verdict is Verdict.Blocked, entry.id
