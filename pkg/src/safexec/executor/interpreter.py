"""Guarded tree-walking interpreter.

Each statement, expression and loop iteration costs one step and checks the
deadline.  Every static validator rule is enforced again at run time, so a
tree that never went through validation still cannot escape the policy.
"""

from __future__ import annotations

import enum
import json
import math
import operator
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Callable

from ..categories import ExceptionKind
from ..frontend.nodes import STRUCTURAL_KINDS, AstNode, NodeKind, Span, SyntaxTree
from ..policy import PolicyConfig
from ..scopes import analyze
from ..validator import is_constant_true_loop, is_dunder
from .builtins import (
    BUILTINS,
    format_value,
    lookup_method,
    printf_format,
    render_limited,
    str_limited,
)
from .errors import HOST_ERRORS, RAISE_KINDS, ExceptionRecord, GuardError, host_error_message, kind_for_host_error
from .modules import make_module
from .values import (
    BoundMethod,
    BuiltinFunction,
    ExceptionVal,
    FunctionVal,
    IteratorVal,
    ModuleVal,
    TypingAlias,
    render_truncated,
    type_name,
)

K = NodeKind
EK = ExceptionKind

RECURSION_FLOOR = 12_000

_SIZED = (str, list, tuple, dict, set, frozenset)
_OPAQUE = (FunctionVal, BuiltinFunction, BoundMethod, ModuleVal, ExceptionVal, TypingAlias)
_NUMERIC = (int, float, bool)


class Status(str, enum.Enum):
    Completed = "Completed"
    Blocked = "Blocked"
    Failed = "Failed"

    def __str__(self) -> str:
        return self.value


@dataclass
class ExecutionOutcome:
    status: Status
    exception: ExceptionRecord | None
    console_output: str
    final_variables: dict[str, str]
    steps_used: int
    elapsed_ms: float
    tool_trace: list = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return self.status is Status.Completed

    @property
    def kind(self) -> ExceptionKind | None:
        return self.exception.kind if self.exception else None

    def to_json_obj(self, include_timing: bool = True) -> dict[str, Any]:
        obj: dict[str, Any] = {"status": self.status.value}
        if self.exception is not None:
            obj["exception"] = self.exception.to_json_obj()
        obj["console_output"] = self.console_output
        obj["final_variables"] = dict(self.final_variables)
        obj["steps_used"] = self.steps_used
        obj["elapsed_ms"] = round(self.elapsed_ms, 3) if include_timing else None
        obj["tool_trace"] = [r.to_json_obj(include_timing) for r in self.tool_trace]
        return obj

    def to_json(self, indent: int | None = 2, include_timing: bool = True) -> str:
        return json.dumps(self.to_json_obj(include_timing), indent=indent, ensure_ascii=False)


class _Signal:
    __slots__ = ("name",)

    def __init__(self, name: str) -> None:
        self.name = name


_BREAK = _Signal("break")
_CONTINUE = _Signal("continue")


class _Return:
    __slots__ = ("value",)

    def __init__(self, value: Any) -> None:
        self.value = value


class Env:
    """One scope's variables; ``local_names`` are the names the scope binds."""

    __slots__ = ("vars", "local_names", "parent", "is_module")

    def __init__(self, local_names: frozenset[str], parent: Env | None, is_module: bool = False) -> None:
        self.vars: dict[str, Any] = {}
        self.local_names = local_names
        self.parent = parent
        self.is_module = is_module


_COMPARE: dict[str, Callable[[Any, Any], Any]] = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "is": operator.is_,
    "is not": operator.is_not,
    "in": lambda a, b: a in b,
    "not in": lambda a, b: a not in b,
}

_ARITH: dict[str, Callable[[Any, Any], Any]] = {
    "+": operator.add,
    "-": operator.sub,
    "*": operator.mul,
    "/": operator.truediv,
    "//": operator.floordiv,
    "%": operator.mod,
    "**": operator.pow,
}


class ExecContext:
    """State of one execution; confined to the thread that runs it."""

    def __init__(self, tree: SyntaxTree, policy: PolicyConfig, tools=None, *,
                 rng_seed: int = 0, clock=None, trace: Callable[[str], None] | None = None) -> None:
        from ..tools import SystemClock, registry_for

        self.tree = tree
        self.policy = policy
        self.limits = policy.limits
        self.tools = tools if tools is not None else registry_for(policy)
        self.clock = clock or SystemClock()
        self.rng_seed = rng_seed
        self.trace = trace

        self.scopes = analyze(tree)
        self.globals_env = Env(self.scopes.module.local_names, None, is_module=True)
        self.globals = self.globals_env.vars
        self.env = self.globals_env
        self.frames: list[tuple[str, Env, Span]] = []
        self.step_count = 0
        self.loop_depth = 0
        self.tool_call_count = 0
        self.tool_trace: list = []
        self.console: list[str] = []
        self.console_size = 0
        self.deadline = self.clock.now_ms() + self.limits.wall_clock_timeout
        self.modules: dict[str, ModuleVal] = {}

        self.max_steps = self.limits.max_total_steps
        self.int_bound = 10 ** self.limits.max_int_magnitude
        self.allowed_kinds = frozenset(policy.allowed_node_kinds) | STRUCTURAL_KINDS
        self.tool_names = policy.tool_names
        self.builtins = {name: BUILTINS[name] for name in policy.allowed_builtins if name in BUILTINS}
        self._while_cache: dict[int, bool] = {}
        self._now = self.clock.now_ms

        self._expr = {
            K.Const: self._const,
            K.Name: self._name,
            K.BinOp: self._binop,
            K.UnaryOp: self._unaryop,
            K.BoolOp: self._boolop,
            K.Compare: self._compare,
            K.IfExp: self._ifexp,
            K.Call: self._call,
            K.Attribute: self._attribute,
            K.Subscript: self._subscript,
            K.Slice: self._slice,
            K.List: self._list,
            K.Tuple: self._tuple,
            K.Set: self._set,
            K.Dict: self._dict,
            K.ListComp: self._listcomp,
            K.DictComp: self._dictcomp,
            K.Lambda: self._lambda,
            K.FString: self._fstring,
        }
        self._stmt = {
            K.ExprStmt: self._s_expr,
            K.Assign: self._s_assign,
            K.AugAssign: self._s_augassign,
            K.If: self._s_if,
            K.For: self._s_for,
            K.While: self._s_while,
            K.FunctionDef: self._s_def,
            K.Return: self._s_return,
            K.Pass: self._s_pass,
            K.Break: self._s_break,
            K.Continue: self._s_continue,
            K.Import: self._s_import,
            K.ImportFrom: self._s_importfrom,
            K.Raise: self._s_raise,
        }

    # -- budget and guards ------------------------------------------------

    def tick(self, span: Span | None = None) -> None:
        self.step_count += 1
        if self.step_count > self.max_steps:
            raise GuardError(EK.TimeoutException, f"step budget of {self.max_steps} exhausted", span)
        if self._now() > self.deadline:
            raise GuardError(EK.TimeoutException,
                             f"wall-clock limit of {self.limits.wall_clock_timeout} ms exceeded", span)

    def charge(self, steps: int, span: Span | None) -> None:
        self.step_count += steps
        if self.step_count > self.max_steps:
            raise GuardError(EK.TimeoutException, f"step budget of {self.max_steps} exhausted", span)

    def remaining_ms(self) -> float:
        return self.deadline - self._now()

    def check_size(self, n: int, span: Span | None) -> None:
        if n > self.limits.max_collection_size:
            raise GuardError(EK.OverflowError,
                             f"size {n} exceeds the collection size limit of {self.limits.max_collection_size}",
                             span)

    def check_int(self, v: int, span: Span | None) -> None:
        if v >= self.int_bound or -v >= self.int_bound:
            raise GuardError(EK.OverflowError,
                             f"integer exceeds the limit of {self.limits.max_int_magnitude} digits", span)

    def check_value(self, v: Any, span: Span | None) -> None:
        t = type(v)
        if t is int:
            self.check_int(v, span)
        elif t in _SIZED:
            self.check_size(len(v), span)

    def check_value_deep(self, v: Any, span: Span | None) -> None:
        stack = [v]
        while stack:
            item = stack.pop()
            self.check_value(item, span)
            t = type(item)
            if t in (list, tuple, set, frozenset):
                stack.extend(item)
            elif t is dict:
                stack.extend(item.keys())
                stack.extend(item.values())

    def write_console(self, text: str, span: Span | None) -> None:
        self.console_size += len(text)
        if self.console_size > self.limits.max_collection_size:
            raise GuardError(EK.OverflowError, "console output exceeds the collection size limit", span)
        self.console.append(text)

    # -- iteration helpers used by builtins -------------------------------

    def iterable(self, v: Any):
        if isinstance(v, _OPAQUE) or type(v) in _NUMERIC or v is None:
            raise TypeError(f"'{type_name(v)}' object is not iterable")
        return iter(v)

    def iterate(self, v: Any, span: Span | None):
        it = self.iterable(v)
        tick = self.tick
        for item in it:
            tick(span)
            yield item

    def materialize(self, v: Any, span: Span | None) -> list:
        t = type(v)
        if t in _SIZED or t is range:
            n = len(v)
            self.check_size(n, span)
            self.charge(n, span)
            return list(v)
        if t is IteratorVal:
            self.charge(v.remaining(), span)
            return list(v)
        items = []
        limit = self.limits.max_collection_size
        for item in self.iterate(v, span):
            items.append(item)
            if len(items) > limit:
                self.check_size(len(items), span)
        return items

    def call(self, fn: Any, args: list, kwargs: dict, span: Span | None) -> Any:
        return self.call_value(fn, args, kwargs, span)

    def binop(self, op: str, a: Any, b: Any, span: Span | None) -> Any:
        ta, tb = type(a), type(b)
        if op == "+":
            if ta is tb and ta in (str, list, tuple):
                self.check_size(len(a) + len(b), span)
        elif op == "*":
            if ta in (str, list, tuple) and tb in (int, bool):
                self.check_size(len(a) * max(b, 0), span)
            elif tb in (str, list, tuple) and ta in (int, bool):
                self.check_size(len(b) * max(a, 0), span)
        elif op == "**":
            if ta in (int, bool) and tb in (int, bool) and b > 0 and abs(a) > 1:
                if b * math.log10(abs(a)) >= self.limits.max_int_magnitude + 1:
                    raise GuardError(EK.OverflowError,
                                     f"power result exceeds the limit of {self.limits.max_int_magnitude} digits",
                                     span)
        elif op == "%" and ta is str:
            return printf_format(self, a, b, span)
        if isinstance(a, _OPAQUE) or isinstance(b, _OPAQUE) or ta is IteratorVal or tb is IteratorVal:
            raise TypeError(f"unsupported operand type(s) for {op}: '{type_name(a)}' and '{type_name(b)}'")
        result = _ARITH[op](a, b)
        tr = type(result)
        if tr is int:
            if result >= self.int_bound or -result >= self.int_bound:
                self.check_int(result, span)
        elif tr is float:
            if math.isinf(result) and not (_is_inf(a) or _is_inf(b)):
                raise GuardError(EK.OverflowError, "float result out of range", span)
        elif tr is complex:
            raise TypeError("complex results are not supported")
        elif tr in _SIZED:
            self.check_size(len(result), span)
        return result

    # -- evaluation --------------------------------------------------------

    def eval(self, node: AstNode) -> Any:
        self.step_count += 1
        if self.step_count > self.max_steps:
            raise GuardError(EK.TimeoutException, f"step budget of {self.max_steps} exhausted", node.span)
        if self._now() > self.deadline:
            raise GuardError(EK.TimeoutException,
                             f"wall-clock limit of {self.limits.wall_clock_timeout} ms exceeded", node.span)
        kind = node.kind
        if kind not in self.allowed_kinds:
            raise GuardError(EK.NodeNotAllowedError, f"syntax element {kind.value} is not allowed", node.span)
        if self.trace is not None:
            self._emit(node)
        try:
            return self._expr[kind](node)
        except GuardError as exc:
            if exc.span is None:
                exc.span = node.span
            if exc.stack_summary is None:
                exc.stack_summary = self.stack_names()
            raise
        except HOST_ERRORS as exc:
            raise self._convert(exc, node) from None

    def exec_block(self, stmts) -> Any:
        for stmt in stmts:
            signal = self.exec_stmt(stmt)
            if signal is not None:
                return signal
        return None

    def exec_stmt(self, node: AstNode) -> Any:
        self.step_count += 1
        if self.step_count > self.max_steps:
            raise GuardError(EK.TimeoutException, f"step budget of {self.max_steps} exhausted", node.span)
        if self._now() > self.deadline:
            raise GuardError(EK.TimeoutException,
                             f"wall-clock limit of {self.limits.wall_clock_timeout} ms exceeded", node.span)
        kind = node.kind
        if kind not in self.allowed_kinds:
            raise GuardError(EK.NodeNotAllowedError, f"syntax element {kind.value} is not allowed", node.span)
        if self.trace is not None:
            self._emit(node)
        try:
            return self._stmt[kind](node)
        except GuardError as exc:
            if exc.span is None:
                exc.span = node.span
            if exc.stack_summary is None:
                exc.stack_summary = self.stack_names()
            raise
        except HOST_ERRORS as exc:
            raise self._convert(exc, node) from None

    def _convert(self, exc: BaseException, node: AstNode) -> GuardError:
        err = GuardError(kind_for_host_error(exc), host_error_message(exc), node.span)
        err.stack_summary = self.stack_names()
        return err

    def _emit(self, node: AstNode) -> None:
        s = node.span
        self.trace(f"step {self.step_count} depth {len(self.frames)} "
                   f"{node.kind.value} @{s.start_line}:{s.start_col}")

    def stack_names(self) -> list[str]:
        return ["<module>"] + [name for name, _, _ in self.frames]

    # expressions

    def _const(self, node: AstNode) -> Any:
        return node.payload

    def _name(self, node: AstNode) -> Any:
        return self.load(node.payload, node.span)

    def load(self, name: str, span: Span | None) -> Any:
        env = self.env
        while env is not None:
            if name in env.local_names:
                try:
                    return env.vars[name]
                except KeyError:
                    if not env.is_module:
                        raise GuardError(EK.KeyError,
                                         f"name '{name}' referenced before assignment", span) from None
            env = env.parent
        if name in self.tool_names:
            return self._tool_ref(name)
        value = self.builtins.get(name)
        if value is not None:
            return value
        raise GuardError(EK.KeyError, f"name '{name}' is not defined", span)

    def _tool_ref(self, name: str) -> BuiltinFunction:
        def impl(ctx, args, kwargs, span):
            return ctx.invoke_tool(name, args, kwargs, span)
        return BuiltinFunction(name, impl)

    def invoke_tool(self, name: str, args: list, kwargs: dict, span: Span | None) -> Any:
        if name not in self.tools:
            raise GuardError(EK.ToolError, f"tool '{name}' has no registered handler", span)
        return self.tools.invoke(name, args, kwargs, self, span)

    def _binop(self, node: AstNode) -> Any:
        left, right = node.children
        return self.binop(node.payload, self.eval(left), self.eval(right), node.span)

    def _unaryop(self, node: AstNode) -> Any:
        value = self.eval(node.children[0])
        if node.payload == "not":
            return not value
        if type(value) not in _NUMERIC:
            raise TypeError(f"bad operand type for unary -: '{type_name(value)}'")
        return -value

    def _boolop(self, node: AstNode) -> Any:
        is_and = node.payload == "and"
        value = None
        for child in node.children:
            value = self.eval(child)
            if (not value) if is_and else value:
                return value
        return value

    def _compare(self, node: AstNode) -> Any:
        children = node.children
        left = self.eval(children[0])
        for op, comparator in zip(node.payload, children[1:]):
            right = self.eval(comparator)
            if op in ("in", "not in") and (isinstance(right, _OPAQUE) or type(right) in _NUMERIC):
                raise TypeError(f"argument of type '{type_name(right)}' is not iterable")
            if not _COMPARE[op](left, right):
                return False
            left = right
        return True

    def _ifexp(self, node: AstNode) -> Any:
        test, body, orelse = node.children
        return self.eval(body) if self.eval(test) else self.eval(orelse)

    def _call(self, node: AstNode) -> Any:
        callee = node.children[0]
        args: list[Any] = []
        kwargs: dict[str, Any] = {}
        if callee.kind is K.Name:
            fn = self._resolve_callee(callee)
        else:
            fn = self.eval(callee)
        for child in node.children[1:]:
            if child.kind is K.Keyword:
                kwargs[child.payload] = self.eval(child.children[0])
            else:
                args.append(self.eval(child))
        return self.call_value(fn, args, kwargs, node.span)

    def _resolve_callee(self, callee: AstNode) -> Any:
        name = callee.payload
        self.tick(callee.span)
        env = self.env
        while env is not None:
            if name in env.local_names:
                if name in env.vars:
                    return env.vars[name]
                if not env.is_module:
                    raise GuardError(EK.KeyError, f"name '{name}' referenced before assignment", callee.span)
            env = env.parent
        if name in self.tool_names:
            return self._tool_ref(name)
        value = self.builtins.get(name)
        if value is not None:
            return value
        if name in self.scopes.all_bound:
            raise GuardError(EK.KeyError, f"name '{name}' is not defined", callee.span)
        raise GuardError(EK.FunctionNotAllowedError,
                         f"call to '{name}' is not an allowed builtin, declared tool or defined function",
                         callee.span)

    def call_value(self, fn: Any, args: list, kwargs: dict, span: Span | None) -> Any:
        t = type(fn)
        if t is FunctionVal:
            return self.call_user(fn, args, kwargs, span)
        if t is BuiltinFunction:
            return fn.impl(self, args, kwargs, span)
        if t is BoundMethod:
            return fn.impl(self, fn.owner, args, kwargs, span)
        raise TypeError(f"'{type_name(fn)}' object is not callable")

    def call_user(self, fn: FunctionVal, args: list, kwargs: dict, span: Span | None) -> Any:
        params = fn.params
        label = "<lambda>" if fn.is_lambda else fn.name
        if len(args) > len(params):
            raise TypeError(f"{label}() takes {len(params)} positional argument"
                            f"{'' if len(params) == 1 else 's'} but {len(args)} were given")
        values = dict(zip(params, args))
        for key, value in kwargs.items():
            if key not in params:
                raise TypeError(f"{label}() got an unexpected keyword argument '{key}'")
            if key in values:
                raise TypeError(f"{label}() got multiple values for argument '{key}'")
            values[key] = value
        if len(values) != len(params):
            missing = [p for p in params if p not in values]
            raise TypeError(f"{label}() missing {len(missing)} required positional argument"
                            f"{'' if len(missing) == 1 else 's'}: " + ", ".join(f"'{m}'" for m in missing))
        if len(self.frames) >= self.limits.max_stack_depth:
            raise GuardError(EK.StackDepthException,
                             f"call depth limit of {self.limits.max_stack_depth} frames exceeded calling {label}",
                             span)
        env = Env(fn.local_names, fn.env)
        env.vars.update(values)
        self.frames.append((label, env, span))
        saved = self.env
        self.env = env
        try:
            if fn.is_lambda:
                return self.eval(fn.body)
            signal = self.exec_block(fn.body.children)
            return signal.value if type(signal) is _Return else None
        finally:
            self.env = saved
            self.frames.pop()

    def _attribute(self, node: AstNode) -> Any:
        name = node.payload
        if is_dunder(name) and not self.policy.allowed_dunder_access:
            raise GuardError(EK.NodeNotAllowedError, f"access to dunder attribute {name} is not allowed",
                             node.span)
        owner = self.eval(node.children[0])
        return self.get_attribute(owner, name)

    def get_attribute(self, owner: Any, name: str) -> Any:
        if type(owner) is ModuleVal:
            try:
                return owner.attrs[name]
            except KeyError:
                raise TypeError(f"module '{owner.name}' has no attribute '{name}'") from None
        method = lookup_method(owner, name)
        if method is None:
            raise TypeError(f"'{type_name(owner)}' object has no attribute '{name}'")
        return method

    def _subscript(self, node: AstNode) -> Any:
        container = self.eval(node.children[0])
        index = self.eval(node.children[1])
        if type(container) is TypingAlias:
            return container
        if isinstance(container, _OPAQUE) or type(container) in _NUMERIC or container is None:
            raise TypeError(f"'{type_name(container)}' object is not subscriptable")
        return container[index]

    def _slice(self, node: AstNode) -> slice:
        has_lower, has_upper, has_step = node.payload
        parts = iter(node.children)
        lower = self.eval(next(parts)) if has_lower else None
        upper = self.eval(next(parts)) if has_upper else None
        step = self.eval(next(parts)) if has_step else None
        return slice(lower, upper, step)

    def _list(self, node: AstNode) -> list:
        return [self.eval(c) for c in node.children]

    def _tuple(self, node: AstNode) -> tuple:
        return tuple([self.eval(c) for c in node.children])

    def _set(self, node: AstNode) -> set:
        return {self.eval(c) for c in node.children}

    def _dict(self, node: AstNode) -> dict:
        ch = node.children
        result = {}
        for i in range(0, len(ch), 2):
            key = self.eval(ch[i])
            result[key] = self.eval(ch[i + 1])
        return result

    def _comprehension(self, node: AstNode, emit: Callable[[], None]) -> None:
        comp = node.children[-1]
        target, iter_node = comp.children[0], comp.children[1]
        cond = comp.children[2] if len(comp.children) > 2 else None
        source = self.eval(iter_node)
        env = Env(self.scopes.scope_for(node).local_names, self.env)
        saved = self.env
        self.env = env
        try:
            for item in self.iterable(source):
                self.tick(node.span)
                self.assign(target, item)
                if cond is None or self.eval(cond):
                    emit()
        finally:
            self.env = saved

    def _listcomp(self, node: AstNode) -> list:
        out: list = []
        elt = node.children[0]
        limit = self.limits.max_collection_size

        def emit() -> None:
            out.append(self.eval(elt))
            if len(out) > limit:
                self.check_size(len(out), node.span)
        self._comprehension(node, emit)
        return out

    def _dictcomp(self, node: AstNode) -> dict:
        out: dict = {}
        key_node, value_node = node.children[0], node.children[1]
        limit = self.limits.max_collection_size

        def emit() -> None:
            key = self.eval(key_node)
            out[key] = self.eval(value_node)
            if len(out) > limit:
                self.check_size(len(out), node.span)
        self._comprehension(node, emit)
        return out

    def _lambda(self, node: AstNode) -> FunctionVal:
        arguments, body = node.children
        params = tuple(p.payload for p in arguments.children if p.kind is K.Param)
        return FunctionVal("<lambda>", params, body, self.env,
                           self.scopes.scope_for(node).local_names, is_lambda=True)

    def _fstring(self, node: AstNode) -> str:
        parts: list[str] = []
        total = 0
        for child in node.children:
            if child.kind is K.Const:
                text = child.payload
            else:
                text = self._formatted(child)
            total += len(text)
            self.check_size(total, child.span)
            parts.append(text)
        return "".join(parts)

    def _formatted(self, node: AstNode) -> str:
        self.tick(node.span)
        value = self.eval(node.children[0])
        conversion = node.payload
        if conversion == "r":
            value = render_limited(self, value, node.span)
        elif conversion == "a":
            value = render_limited(self, value, node.span).encode("ascii", "backslashreplace").decode("ascii")
        elif conversion == "s":
            value = str_limited(self, value, node.span)
        spec = self.eval(node.children[1]) if len(node.children) > 1 else ""
        return format_value(self, value, spec, node.span)

    # statements

    def _s_expr(self, node: AstNode) -> None:
        self.eval(node.children[0])

    def _s_assign(self, node: AstNode) -> None:
        value = self.eval(node.children[-1])
        for target in node.children[:-1]:
            self.assign(target, value)

    def assign(self, target: AstNode, value: Any) -> None:
        kind = target.kind
        if kind is K.Name:
            self.env.vars[target.payload] = value
        elif kind is K.Subscript:
            container = self.eval(target.children[0])
            index = self.eval(target.children[1])
            self.store_item(container, index, value, target.span)
        elif kind in (K.Tuple, K.List):
            items = self.materialize(value, target.span)
            if len(items) != len(target.children):
                raise TypeError(f"cannot unpack {len(items)} values into {len(target.children)} targets")
            for child, item in zip(target.children, items):
                self.assign(child, item)
        elif kind is K.Attribute:
            raise TypeError("attribute assignment is not supported")
        else:
            raise TypeError(f"cannot assign to {kind.value}")

    def store_item(self, container: Any, index: Any, value: Any, span: Span) -> None:
        t = type(container)
        if t is list:
            if type(index) is slice:
                items = self.materialize(value, span)
                start, stop, step = index.indices(len(container))
                removed = len(range(start, stop, step)) if step != 1 else max(stop - start, 0)
                self.check_size(len(container) - removed + len(items), span)
                container[index] = items
            else:
                container[index] = value
        elif t is dict:
            if index not in container:
                self.check_size(len(container) + 1, span)
            container[index] = value
        else:
            raise TypeError(f"'{type_name(container)}' object does not support item assignment")

    def _s_augassign(self, node: AstNode) -> None:
        target, value_node = node.children
        op = node.payload[:-1]
        if target.kind is K.Name:
            current = self.load(target.payload, target.span)
            value = self.eval(value_node)
            self.env.vars[target.payload] = self._inplace(op, current, value, node.span)
        elif target.kind is K.Subscript:
            container = self.eval(target.children[0])
            index = self.eval(target.children[1])
            if isinstance(container, _OPAQUE) or type(container) in _NUMERIC or container is None:
                raise TypeError(f"'{type_name(container)}' object is not subscriptable")
            current = container[index]
            value = self.eval(value_node)
            self.store_item(container, index, self._inplace(op, current, value, node.span), node.span)
        else:
            raise TypeError("attribute assignment is not supported")

    def _inplace(self, op: str, current: Any, value: Any, span: Span) -> Any:
        if type(current) is list:
            if op == "+":
                items = self.materialize(value, span)
                self.check_size(len(current) + len(items), span)
                current.extend(items)
                return current
            if op == "*" and type(value) in (int, bool):
                self.check_size(len(current) * max(value, 0), span)
                current *= value
                return current
        return self.binop(op, current, value, span)

    def _s_if(self, node: AstNode) -> Any:
        ch = node.children
        if self.eval(ch[0]):
            return self.exec_block(ch[1].children)
        if len(ch) > 2:
            return self.exec_block(ch[2].children)
        return None

    def _enter_loop(self, node: AstNode) -> None:
        self.loop_depth += 1
        if self.loop_depth > self.limits.max_nested_loop_depth:
            raise GuardError(EK.NestedLoopDepthThresholdReachedError,
                             f"loop nesting depth {self.loop_depth} exceeds the limit of "
                             f"{self.limits.max_nested_loop_depth}", node.span)

    def _s_for(self, node: AstNode) -> Any:
        target, iter_node, body = node.children
        source = self.eval(iter_node)
        iterator = self.iterable(source)
        stmts = body.children
        limit = self.limits.max_loop_iterations
        self._enter_loop(node)
        try:
            count = 0
            for item in iterator:
                count += 1
                if count > limit:
                    raise GuardError(EK.TimeoutException, "loop iteration budget exhausted", node.span)
                self.tick(node.span)
                self.assign(target, item)
                signal = self.exec_block(stmts)
                if signal is not None:
                    if signal is _BREAK:
                        break
                    if signal is _CONTINUE:
                        continue
                    return signal
        finally:
            self.loop_depth -= 1
        return None

    def _s_while(self, node: AstNode) -> Any:
        key = id(node)
        constant = self._while_cache.get(key)
        if constant is None:
            constant = self._while_cache[key] = is_constant_true_loop(node)
        if constant:
            raise GuardError(EK.WhileTrueError, "while loop with a constant true condition and no break",
                             node.span)
        test, body = node.children
        stmts = body.children
        limit = self.limits.max_loop_iterations
        self._enter_loop(node)
        try:
            count = 0
            while self.eval(test):
                count += 1
                if count > limit:
                    raise GuardError(EK.TimeoutException, "loop iteration budget exhausted", node.span)
                self.tick(node.span)
                signal = self.exec_block(stmts)
                if signal is not None:
                    if signal is _BREAK:
                        break
                    if signal is _CONTINUE:
                        continue
                    return signal
        finally:
            self.loop_depth -= 1
        return None

    def _s_def(self, node: AstNode) -> None:
        arguments, body = node.children
        params = tuple(p.payload for p in arguments.children if p.kind is K.Param)
        fn = FunctionVal(node.payload, params, body, self.env, self.scopes.scope_for(node).local_names)
        self.env.vars[node.payload] = fn

    def _s_return(self, node: AstNode) -> _Return:
        return _Return(self.eval(node.children[0]) if node.children else None)

    def _s_pass(self, node: AstNode) -> None:
        return None

    def _s_break(self, node: AstNode) -> _Signal:
        return _BREAK

    def _s_continue(self, node: AstNode) -> _Signal:
        return _CONTINUE

    def _module(self, name: str, span: Span) -> ModuleVal:
        if name not in self.policy.allowed_imports:
            raise GuardError(EK.ImportNotAllowedError, f"import of {name} is not allowed", span)
        module = self.modules.get(name)
        if module is None:
            module = make_module(name, self.rng_seed)
            if module is None:
                raise GuardError(EK.ImportNotAllowedError, f"module {name} is not available in the sandbox", span)
            self.modules[name] = module
        return module

    def _s_import(self, node: AstNode) -> None:
        for alias in node.children:
            name, asname = alias.payload
            root = name.split(".", 1)[0]
            if name != root:
                self._module(root, alias.span)
                raise GuardError(EK.ImportNotAllowedError, f"import of {name} is not allowed", alias.span)
            self.env.vars[asname or name] = self._module(name, alias.span)

    def _s_importfrom(self, node: AstNode) -> None:
        module = self._module(node.payload, node.span)
        for alias in node.children:
            name, asname = alias.payload
            if name not in module.attrs:
                raise TypeError(f"cannot import name '{name}' from '{module.name}'")
            self.env.vars[asname or name] = module.attrs[name]

    def _s_raise(self, node: AstNode) -> None:
        if not node.children:
            raise GuardError(EK.TypeError, "no active exception to re-raise", node.span)
        value = self.eval(node.children[0])
        if type(value) is BuiltinFunction and value.is_exception:
            value = ExceptionVal(value.name, ())
        if type(value) is not ExceptionVal:
            raise GuardError(EK.TypeError, "exceptions must derive from BaseException", node.span)
        detail = str_limited(self, value, node.span)
        message = f"{value.type_name}: {detail}" if detail else value.type_name
        raise GuardError(RAISE_KINDS.get(value.type_name, EK.TypeError), message, node.span)

    # -- entry point --------------------------------------------------------

    def run(self) -> None:
        self.exec_block(self.tree.root.children)

    def snapshot(self) -> dict[str, str]:
        return {name: render_truncated(value) for name, value in self.globals.items()}


def _is_inf(v: Any) -> bool:
    return type(v) is float and math.isinf(v)


def _ensure_recursion_headroom() -> None:
    if sys.getrecursionlimit() < RECURSION_FLOOR:
        sys.setrecursionlimit(RECURSION_FLOOR)


def execute(tree: SyntaxTree, policy: PolicyConfig, tools=None, *, rng_seed: int = 0, clock=None,
            trace: Callable[[str], None] | None = None) -> ExecutionOutcome:
    """Run ``tree`` under ``policy``; never raises for anything the program does."""
    _ensure_recursion_headroom()
    started = time.perf_counter()
    ctx = ExecContext(tree, policy, tools, rng_seed=rng_seed, clock=clock, trace=trace)
    record: ExceptionRecord | None = None
    try:
        ctx.run()
    except GuardError as exc:
        record = _record(exc, tree)
    except RecursionError:
        record = ExceptionRecord(EK.StackDepthException, "host recursion limit reached",
                                 tree.root.span, tuple(ctx.stack_names()))
    except HOST_ERRORS as exc:
        record = ExceptionRecord(kind_for_host_error(exc), host_error_message(exc),
                                 tree.root.span, tuple(ctx.stack_names()))
    elapsed = (time.perf_counter() - started) * 1000.0
    if record is None:
        status = Status.Completed
    elif record.kind in policy.failed_kinds:
        status = Status.Failed
    else:
        status = Status.Blocked
    return ExecutionOutcome(
        status=status,
        exception=record,
        console_output="".join(ctx.console),
        final_variables=ctx.snapshot(),
        # the step that tripped the budget was refused, not performed
        steps_used=min(ctx.step_count, ctx.max_steps),
        elapsed_ms=elapsed,
        tool_trace=list(ctx.tool_trace),
    )


def _record(exc: GuardError, tree: SyntaxTree) -> ExceptionRecord:
    span = exc.span if exc.span is not None else tree.root.span
    return ExceptionRecord(exc.kind, exc.message, span, tuple(exc.stack_summary or ["<module>"]))
