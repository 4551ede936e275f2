"""Runtime value wrappers and the deterministic renderer.

Plain data uses native host objects (int, float, bool, str, None, list,
tuple, dict, set, range).  Callables, modules and lazily computed iterators
get small wrapper classes so user code can never reach host internals.

The renderer also accepts host functions, modules and types so that the
reference-interpreter oracle can render its own globals with the same rules.
"""

from __future__ import annotations

import types
from dataclasses import dataclass, field
from typing import Any, Callable

TRUNCATE_AT = 256
TRUNCATION_SUFFIX = "…(truncated)"


@dataclass(eq=False)
class FunctionVal:
    name: str
    params: tuple[str, ...]
    body: Any  # Block node for def, expression node for lambda
    env: Any  # defining environment
    local_names: frozenset[str]
    is_lambda: bool = False


@dataclass(eq=False)
class BuiltinFunction:
    name: str
    impl: Callable[..., Any]
    host_type: type | None = None
    # exception constructors produce ExceptionVal
    is_exception: bool = False


@dataclass(eq=False)
class BoundMethod:
    owner: Any
    name: str
    impl: Callable[..., Any]


@dataclass(eq=False)
class ModuleVal:
    name: str
    attrs: dict[str, Any] = field(default_factory=dict)


@dataclass(eq=False)
class ExceptionVal:
    type_name: str
    args: tuple


@dataclass(eq=False)
class TypingAlias:
    name: str


class IteratorVal:
    """One-shot iterator over precomputed items (map, filter results)."""

    def __init__(self, type_name: str, items: list) -> None:
        self.type_name = type_name
        self._items = items
        self._pos = 0

    def __iter__(self) -> IteratorVal:
        return self

    def __next__(self) -> Any:
        if self._pos >= len(self._items):
            raise StopIteration
        item = self._items[self._pos]
        self._pos += 1
        return item

    def remaining(self) -> int:
        return len(self._items) - self._pos


class RenderLimitExceeded(Exception):
    pass


_VIEW_TYPES = {
    type({}.keys()): "dict_keys",
    type({}.values()): "dict_values",
    type({}.items()): "dict_items",
}


class _Renderer:
    def __init__(self, limit: int | None) -> None:
        self.limit = limit
        self.parts: list[str] = []
        self.length = 0
        self.active: set[int] = set()

    def emit(self, text: str) -> None:
        self.parts.append(text)
        self.length += len(text)
        if self.limit is not None and self.length > self.limit:
            raise RenderLimitExceeded

    def seq(self, items, open_: str, close: str, trailing_comma: bool = False) -> None:
        self.emit(open_)
        first = True
        count = 0
        for item in items:
            if not first:
                self.emit(", ")
            first = False
            self.value(item)
            count += 1
        if trailing_comma and count == 1:
            self.emit(",")
        self.emit(close)

    def value(self, v: Any) -> None:
        t = type(v)
        if v is None or t is bool or t is float:
            self.emit(repr(v))
        elif t is int:
            try:
                self.emit(repr(v))
            except ValueError:
                # past the host's digit limit for str(int)
                self.emit(f"<int with {v.bit_length()} bits>")
        elif t is str:
            self.emit(repr(v))
        elif t in (list, dict, tuple, set, frozenset):
            key = id(v)
            if key in self.active:
                self.emit("[...]" if t is list else "{...}" if t is dict else "(...)")
                return
            self.active.add(key)
            try:
                if t is list:
                    self.seq(v, "[", "]")
                elif t is tuple:
                    self.seq(v, "(", ")", trailing_comma=True)
                elif t is dict:
                    self.emit("{")
                    first = True
                    for k, item in v.items():
                        if not first:
                            self.emit(", ")
                        first = False
                        self.value(k)
                        self.emit(": ")
                        self.value(item)
                    self.emit("}")
                elif t is set:
                    if v:
                        self.seq(v, "{", "}")
                    else:
                        self.emit("set()")
                else:
                    if v:
                        self.emit("frozenset(")
                        self.seq(v, "{", "}")
                        self.emit(")")
                    else:
                        self.emit("frozenset()")
            finally:
                self.active.discard(key)
        elif t is range:
            self.emit(repr(v))
        elif t in _VIEW_TYPES:
            self.emit(_VIEW_TYPES[t] + "(")
            self.seq(v, "[", "]")
            self.emit(")")
        else:
            self.emit(describe(v))


def describe(v: Any) -> str:
    """Text for values with no literal form (callables, modules, iterators)."""
    if isinstance(v, FunctionVal):
        return f"<function {'<lambda>' if v.is_lambda else v.name}>"
    if isinstance(v, types.FunctionType):
        return f"<function {v.__name__}>"
    if isinstance(v, BuiltinFunction):
        if v.host_type is not None or v.is_exception:
            return f"<class '{v.name}'>"
        return f"<built-in function {v.name}>"
    if isinstance(v, type):
        return f"<class '{v.__name__}'>"
    if isinstance(v, BoundMethod):
        return f"<built-in method {v.name} of {type(v.owner).__name__} object>"
    if isinstance(v, types.BuiltinMethodType):
        owner = getattr(v, "__self__", None)
        if owner is None or isinstance(owner, types.ModuleType):
            return f"<built-in function {v.__name__}>"
        return f"<built-in method {v.__name__} of {type(owner).__name__} object>"
    if isinstance(v, (ModuleVal, types.ModuleType)):
        return f"<module '{v.__name__ if isinstance(v, types.ModuleType) else v.name}'>"
    if isinstance(v, IteratorVal):
        return f"<{v.type_name} object>"
    if isinstance(v, ExceptionVal):
        return v.type_name + render(v.args)
    if isinstance(v, BaseException):
        return type(v).__name__ + render(v.args)
    if isinstance(v, TypingAlias):
        return f"typing.{v.name}"
    return f"<{type(v).__name__} object>"


def render(v: Any, limit: int | None = None) -> str:
    """Deterministic repr-like text; raises RenderLimitExceeded past ``limit`` chars."""
    r = _Renderer(limit)
    r.value(v)
    return "".join(r.parts)


def render_truncated(v: Any, width: int = TRUNCATE_AT) -> str:
    try:
        return render(v, limit=width)
    except RenderLimitExceeded:
        return render_prefix(v, width) + TRUNCATION_SUFFIX
    except RecursionError:
        return "<value nested too deeply to render>"


def render_prefix(v: Any, width: int) -> str:
    r = _Renderer(width)
    try:
        r.value(v)
    except RenderLimitExceeded:
        pass
    return "".join(r.parts)[:width]


def to_str(v: Any, limit: int | None = None) -> str:
    """``str()`` semantics: strings pass through, everything else renders."""
    if type(v) is str:
        return v
    if isinstance(v, (ExceptionVal, BaseException)):
        args = v.args
        if not args:
            return ""
        if len(args) == 1:
            return to_str(args[0], limit)
        return render(tuple(args), limit)
    return render(v, limit)


def type_name(v: Any) -> str:
    if isinstance(v, (FunctionVal,)):
        return "function"
    if isinstance(v, BuiltinFunction):
        return "builtin_function_or_method" if v.host_type is None else "type"
    if isinstance(v, BoundMethod):
        return "builtin_function_or_method"
    if isinstance(v, ModuleVal):
        return "module"
    if isinstance(v, IteratorVal):
        return v.type_name
    if isinstance(v, ExceptionVal):
        return v.type_name
    return type(v).__name__
