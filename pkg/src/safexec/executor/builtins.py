"""Builtin functions and per-type method tables available inside the sandbox.

Every implementation takes ``(ctx, args, kwargs, span)``; methods also get
the receiver.  Anything that can grow a value is checked against the
context's limits before or immediately after the host does the work.
"""

from __future__ import annotations

import re
from typing import Any, Callable

from ..capabilities import SUPPORTED_BUILTINS
from ..categories import ExceptionKind
from .errors import GuardError
from .values import (
    BoundMethod,
    BuiltinFunction,
    ExceptionVal,
    IteratorVal,
    RenderLimitExceeded,
    render,
    to_str,
    type_name,
)

EK = ExceptionKind

_MISSING = object()


def _check_kwargs(fname: str, kwargs: dict, allowed: tuple[str, ...] = ()) -> None:
    for key in kwargs:
        if key not in allowed:
            raise TypeError(f"{fname}() got an unexpected keyword argument '{key}'")


def _arity(fname: str, args: list, lo: int, hi: int | None = None) -> None:
    hi = lo if hi is None else hi
    if not lo <= len(args) <= hi:
        if lo == hi:
            raise TypeError(f"{fname}() takes exactly {lo} argument{'s' if lo != 1 else ''} ({len(args)} given)")
        raise TypeError(f"{fname}() takes from {lo} to {hi} arguments ({len(args)} given)")


def render_limited(ctx, value: Any, span) -> str:
    try:
        return render(value, limit=ctx.limits.max_collection_size)
    except RenderLimitExceeded:
        raise GuardError(EK.OverflowError, "rendered value exceeds the collection size limit", span) from None


def str_limited(ctx, value: Any, span) -> str:
    try:
        return to_str(value, limit=ctx.limits.max_collection_size)
    except RenderLimitExceeded:
        raise GuardError(EK.OverflowError, "rendered value exceeds the collection size limit", span) from None


# -- format specs ----------------------------------------------------------

_SPEC_RE = re.compile(r"(?:.?[<>=^])?[+\- ]?z?#?0?(\d*)[,_]?(?:\.(\d+))?[a-zA-Z%]?\Z", re.S)
_PRINTF_RE = re.compile(r"%(?:\([^)]*\))?[#0\- +]*(\*|\d*)(?:\.(\*|\d*))?[hlL]?[a-zA-Z%]")


def check_spec_widths(ctx, spec: str, span) -> None:
    m = _SPEC_RE.match(spec)
    if not m:
        return  # the host will reject it
    for group in m.groups():
        if group and (len(group) > 9 or int(group) > ctx.limits.max_collection_size):
            raise GuardError(EK.OverflowError, f"format width {group} exceeds the collection size limit", span)


def format_value(ctx, value: Any, spec: str, span) -> str:
    if not spec:
        return str_limited(ctx, value, span)
    if type(value) not in (int, float, str, bool):
        raise TypeError(f"unsupported format string passed to {type_name(value)}.__format__")
    check_spec_widths(ctx, spec, span)
    result = format(value, spec)
    ctx.check_size(len(result), span)
    return result


class _Shown:
    """Stand-in passed to printf-style formatting for non-primitive values."""

    __slots__ = ("text",)

    def __init__(self, text: str) -> None:
        self.text = text

    def __str__(self) -> str:
        return self.text

    __repr__ = __str__


def _printf_arg(ctx, value: Any, span) -> Any:
    if value is None or type(value) in (int, float, str, bool):
        return value
    return _Shown(render_limited(ctx, value, span))


def printf_format(ctx, template: str, args: Any, span) -> str:
    for m in _PRINTF_RE.finditer(template):
        for group in m.groups():
            if group == "*":
                raise TypeError("'*' widths are not supported")
            if group and (len(group) > 9 or int(group) > ctx.limits.max_collection_size):
                raise GuardError(EK.OverflowError, f"format width {group} exceeds the collection size limit", span)
    if type(args) is tuple:
        converted: Any = tuple(_printf_arg(ctx, a, span) for a in args)
    elif type(args) is dict:
        converted = {k: _printf_arg(ctx, v, span) for k, v in args.items()}
    else:
        converted = _printf_arg(ctx, args, span)
    result = template % converted
    ctx.check_size(len(result), span)
    return result


# -- builtin functions -----------------------------------------------------

def b_print(ctx, args, kwargs, span):
    _check_kwargs("print", kwargs, ("sep", "end"))
    sep = kwargs.get("sep", " ")
    end = kwargs.get("end", "\n")
    if sep is None:
        sep = " "
    if end is None:
        end = "\n"
    if type(sep) is not str or type(end) is not str:
        raise TypeError("sep and end must be None or a string")
    text = sep.join(str_limited(ctx, a, span) for a in args) + end
    ctx.write_console(text, span)


def b_len(ctx, args, kwargs, span):
    _check_kwargs("len", kwargs)
    _arity("len", args, 1)
    value = args[0]
    if isinstance(value, (IteratorVal, BuiltinFunction, BoundMethod, ExceptionVal)):
        raise TypeError(f"object of type '{type_name(value)}' has no len()")
    return len(value)


def _int_arg(fname: str, value: Any) -> int:
    if type(value) not in (int, bool):
        raise TypeError(f"'{type_name(value)}' object cannot be interpreted as an integer")
    return value


def b_range(ctx, args, kwargs, span):
    _check_kwargs("range", kwargs)
    _arity("range", args, 1, 3)
    return range(*[_int_arg("range", a) for a in args])


def b_abs(ctx, args, kwargs, span):
    _check_kwargs("abs", kwargs)
    _arity("abs", args, 1)
    if type(args[0]) not in (int, float, bool):
        raise TypeError(f"bad operand type for abs(): '{type_name(args[0])}'")
    return abs(args[0])


def _extreme(fname: str, pick_greater: bool):
    def impl(ctx, args, kwargs, span):
        _check_kwargs(fname, kwargs, ("key", "default"))
        key = kwargs.get("key")
        default = kwargs.get("default", _MISSING)
        if not args:
            raise TypeError(f"{fname} expected at least 1 argument, got 0")
        if len(args) == 1:
            items = ctx.materialize(args[0], span)
        else:
            if default is not _MISSING:
                raise TypeError(f"Cannot specify a default for {fname}() with multiple positional arguments")
            items = list(args)
        if not items:
            if default is not _MISSING:
                return default
            raise ValueError(f"{fname}() arg is an empty sequence")
        best = items[0]
        best_key = ctx.call(key, [best], {}, span) if key is not None else best
        for item in items[1:]:
            ctx.tick(span)
            k = ctx.call(key, [item], {}, span) if key is not None else item
            if (k > best_key) if pick_greater else (k < best_key):
                best, best_key = item, k
        return best
    return impl


def b_sum(ctx, args, kwargs, span):
    _check_kwargs("sum", kwargs, ("start",))
    _arity("sum", args, 1, 2)
    start = args[1] if len(args) == 2 else kwargs.get("start", 0)
    if type(start) is str:
        raise TypeError("sum() can't sum strings [use ''.join(seq) instead]")
    acc = start
    for item in ctx.iterate(args[0], span):
        acc = ctx.binop("+", acc, item, span)
    return acc


def sort_items(ctx, items: list, key, reverse, span) -> list:
    if key is None:
        return sorted(items, reverse=bool(reverse))
    keys = [ctx.call(key, [item], {}, span) for item in items]
    order = sorted(range(len(items)), key=keys.__getitem__, reverse=bool(reverse))
    return [items[i] for i in order]


def b_sorted(ctx, args, kwargs, span):
    _check_kwargs("sorted", kwargs, ("key", "reverse"))
    _arity("sorted", args, 1)
    items = ctx.materialize(args[0], span)
    return sort_items(ctx, items, kwargs.get("key"), kwargs.get("reverse", False), span)


def b_enumerate(ctx, args, kwargs, span):
    _check_kwargs("enumerate", kwargs, ("start",))
    _arity("enumerate", args, 1, 2)
    start = args[1] if len(args) == 2 else kwargs.get("start", 0)
    return enumerate(ctx.iterable(args[0]), _int_arg("enumerate", start))


def b_zip(ctx, args, kwargs, span):
    _check_kwargs("zip", kwargs)
    return zip(*[ctx.iterable(a) for a in args])


def b_int(ctx, args, kwargs, span):
    _check_kwargs("int", kwargs, ("base",))
    _arity("int", args, 0, 2)
    if not args:
        return 0
    value = args[0]
    base = args[1] if len(args) == 2 else kwargs.get("base", _MISSING)
    if type(value) is str:
        if len(value.strip()) > ctx.limits.max_int_magnitude + 2:
            raise GuardError(EK.OverflowError, "integer string exceeds the integer size limit", span)
        result = int(value) if base is _MISSING else int(value, _int_arg("int", base))
    else:
        if base is not _MISSING:
            raise TypeError("int() can't convert non-string with explicit base")
        if type(value) not in (int, float, bool):
            raise TypeError(f"int() argument must be a string or a number, not '{type_name(value)}'")
        result = int(value)
    ctx.check_int(result, span)
    return result


def b_float(ctx, args, kwargs, span):
    _check_kwargs("float", kwargs)
    _arity("float", args, 0, 1)
    if not args:
        return 0.0
    value = args[0]
    if type(value) not in (int, float, bool, str):
        raise TypeError(f"float() argument must be a string or a number, not '{type_name(value)}'")
    return float(value)


def b_str(ctx, args, kwargs, span):
    _check_kwargs("str", kwargs)
    _arity("str", args, 0, 1)
    return str_limited(ctx, args[0], span) if args else ""


def b_repr(ctx, args, kwargs, span):
    _check_kwargs("repr", kwargs)
    _arity("repr", args, 1)
    return render_limited(ctx, args[0], span)


def b_bool(ctx, args, kwargs, span):
    _check_kwargs("bool", kwargs)
    _arity("bool", args, 0, 1)
    return bool(args[0]) if args else False


def _collection(fname: str, build: Callable[[list], Any]):
    def impl(ctx, args, kwargs, span):
        _check_kwargs(fname, kwargs)
        _arity(fname, args, 0, 1)
        if not args:
            return build([])
        return build(ctx.materialize(args[0], span))
    return impl


def b_dict(ctx, args, kwargs, span):
    _arity("dict", args, 0, 1)
    result: dict = {}
    if args:
        source = args[0]
        if type(source) is dict:
            result.update(source)
        else:
            for index, pair in enumerate(ctx.materialize(source, span)):
                items = ctx.materialize(pair, span)
                if len(items) != 2:
                    raise ValueError(f"dictionary update sequence element #{index} has length {len(items)}; 2 is required")
                result[items[0]] = items[1]
    result.update(kwargs)
    ctx.check_size(len(result), span)
    return result


def b_round(ctx, args, kwargs, span):
    _check_kwargs("round", kwargs, ("ndigits",))
    _arity("round", args, 1, 2)
    value = args[0]
    if type(value) not in (int, float, bool):
        raise TypeError(f"type {type_name(value)} doesn't define __round__ method")
    ndigits = args[1] if len(args) == 2 else kwargs.get("ndigits")
    if ndigits is None:
        return round(value)
    return round(value, _int_arg("round", ndigits))


def b_isinstance(ctx, args, kwargs, span):
    _check_kwargs("isinstance", kwargs)
    _arity("isinstance", args, 2)
    value, spec = args
    specs = spec if type(spec) is tuple else (spec,)
    host_types = []
    for s in specs:
        if not isinstance(s, BuiltinFunction) or s.host_type is None:
            raise TypeError("isinstance() arg 2 must be a type or tuple of types")
        host_types.append(s.host_type)
    return isinstance(value, tuple(host_types))


def b_reversed(ctx, args, kwargs, span):
    _check_kwargs("reversed", kwargs)
    _arity("reversed", args, 1)
    value = args[0]
    if type(value) not in (list, tuple, str, range, dict):
        raise TypeError(f"'{type_name(value)}' object is not reversible")
    return reversed(value)


def b_any(ctx, args, kwargs, span):
    _check_kwargs("any", kwargs)
    _arity("any", args, 1)
    for item in ctx.iterate(args[0], span):
        if item:
            return True
    return False


def b_all(ctx, args, kwargs, span):
    _check_kwargs("all", kwargs)
    _arity("all", args, 1)
    for item in ctx.iterate(args[0], span):
        if not item:
            return False
    return True


def b_map(ctx, args, kwargs, span):
    _check_kwargs("map", kwargs)
    if len(args) < 2:
        raise TypeError("map() must have at least two arguments.")
    fn = args[0]
    columns = [ctx.materialize(a, span) for a in args[1:]]
    items = [ctx.call(fn, list(group), {}, span) for group in zip(*columns)]
    return IteratorVal("map", items)


def b_filter(ctx, args, kwargs, span):
    _check_kwargs("filter", kwargs)
    _arity("filter", args, 2)
    fn, source = args
    items = []
    for item in ctx.materialize(source, span):
        keep = item if fn is None else ctx.call(fn, [item], {}, span)
        if keep:
            items.append(item)
    return IteratorVal("filter", items)


def _host_scalar(fname: str, host: Callable[..., Any], lo: int, hi: int | None = None,
                 accepted: tuple[type, ...] = (int, bool)):
    def impl(ctx, args, kwargs, span):
        _check_kwargs(fname, kwargs)
        _arity(fname, args, lo, hi)
        for a in args:
            if type(a) not in accepted:
                raise TypeError(f"{fname}() does not accept '{type_name(a)}'")
        result = host(*args)
        ctx.check_value(result, span)
        return result
    return impl


def b_pow(ctx, args, kwargs, span):
    _check_kwargs("pow", kwargs)
    _arity("pow", args, 2, 3)
    if len(args) == 3:
        for a in args:
            _int_arg("pow", a)
        return pow(*args)
    return ctx.binop("**", args[0], args[1], span)


def b_format(ctx, args, kwargs, span):
    _check_kwargs("format", kwargs)
    _arity("format", args, 1, 2)
    spec = args[1] if len(args) == 2 else ""
    if type(spec) is not str:
        raise TypeError("format() argument 2 must be str")
    return format_value(ctx, args[0], spec, span)


def _exception_ctor(name: str) -> BuiltinFunction:
    def impl(ctx, args, kwargs, span):
        _check_kwargs(name, kwargs)
        return ExceptionVal(name, tuple(args))
    return BuiltinFunction(name, impl, is_exception=True)


def _type_builtin(name: str, impl, host_type: type) -> BuiltinFunction:
    return BuiltinFunction(name, impl, host_type=host_type)


def _build_table() -> dict[str, BuiltinFunction]:
    table: dict[str, BuiltinFunction] = {
        "print": BuiltinFunction("print", b_print),
        "len": BuiltinFunction("len", b_len),
        "range": _type_builtin("range", b_range, range),
        "abs": BuiltinFunction("abs", b_abs),
        "min": BuiltinFunction("min", _extreme("min", pick_greater=False)),
        "max": BuiltinFunction("max", _extreme("max", pick_greater=True)),
        "sum": BuiltinFunction("sum", b_sum),
        "sorted": BuiltinFunction("sorted", b_sorted),
        "enumerate": _type_builtin("enumerate", b_enumerate, enumerate),
        "zip": _type_builtin("zip", b_zip, zip),
        "int": _type_builtin("int", b_int, int),
        "float": _type_builtin("float", b_float, float),
        "str": _type_builtin("str", b_str, str),
        "bool": _type_builtin("bool", b_bool, bool),
        "list": _type_builtin("list", _collection("list", list), list),
        "tuple": _type_builtin("tuple", _collection("tuple", tuple), tuple),
        "set": _type_builtin("set", _collection("set", set), set),
        "frozenset": _type_builtin("frozenset", _collection("frozenset", frozenset), frozenset),
        "dict": _type_builtin("dict", b_dict, dict),
        "round": BuiltinFunction("round", b_round),
        "isinstance": BuiltinFunction("isinstance", b_isinstance),
        "reversed": _type_builtin("reversed", b_reversed, reversed),
        "any": BuiltinFunction("any", b_any),
        "all": BuiltinFunction("all", b_all),
        "map": _type_builtin("map", b_map, IteratorVal),
        "filter": _type_builtin("filter", b_filter, IteratorVal),
        "chr": BuiltinFunction("chr", _host_scalar("chr", chr, 1)),
        "ord": BuiltinFunction("ord", _host_scalar("ord", ord, 1, accepted=(str,))),
        "hex": BuiltinFunction("hex", _host_scalar("hex", hex, 1)),
        "bin": BuiltinFunction("bin", _host_scalar("bin", bin, 1)),
        "oct": BuiltinFunction("oct", _host_scalar("oct", oct, 1)),
        "divmod": BuiltinFunction("divmod", _host_scalar("divmod", divmod, 2, accepted=(int, float, bool))),
        "pow": BuiltinFunction("pow", b_pow),
        "repr": BuiltinFunction("repr", b_repr),
        "format": BuiltinFunction("format", b_format),
    }
    for name in ("Exception", "ValueError", "TypeError", "KeyError", "IndexError",
                 "ZeroDivisionError", "RuntimeError", "OverflowError", "AssertionError"):
        table[name] = _exception_ctor(name)
    return table


BUILTINS: dict[str, BuiltinFunction] = _build_table()
assert set(BUILTINS) == SUPPORTED_BUILTINS, set(BUILTINS) ^ SUPPORTED_BUILTINS


# -- methods ---------------------------------------------------------------

Method = Callable[[Any, Any, list, dict, Any], Any]


def _host_method(name: str, iterable_args: tuple[int, ...] = (), kw: tuple[str, ...] = ()) -> Method:
    """Call the host method; positions in ``iterable_args`` are materialized first."""
    def impl(ctx, owner, args, kwargs, span):
        _check_kwargs(name, kwargs, kw)
        if iterable_args:
            args = [ctx.materialize(a, span) if i in iterable_args or -1 in iterable_args else a
                    for i, a in enumerate(args)]
        result = getattr(owner, name)(*args, **kwargs)
        ctx.check_value(result, span)
        return result
    return impl


def _str_only(fname: str, values) -> None:
    for v in values:
        if v is not None and type(v) is not str:
            raise TypeError(f"{fname}() argument must be str, not {type_name(v)}")


def m_str_replace(ctx, owner: str, args, kwargs, span):
    _check_kwargs("replace", kwargs)
    _arity("replace", args, 2, 3)
    old, new = args[0], args[1]
    _str_only("replace", (old, new))
    count = owner.count(old) if old else len(owner) + 1
    if len(args) == 3:
        count = min(count, _int_arg("replace", args[2])) if args[2] >= 0 else count
    ctx.check_size(len(owner) + count * (len(new) - len(old)), span)
    return owner.replace(*args)


def m_str_join(ctx, owner: str, args, kwargs, span):
    _check_kwargs("join", kwargs)
    _arity("join", args, 1)
    items = ctx.materialize(args[0], span)
    total = 0
    for i, item in enumerate(items):
        if type(item) is not str:
            raise TypeError(f"sequence item {i}: expected str instance, {type_name(item)} found")
        total += len(item)
    ctx.check_size(total + len(owner) * max(len(items) - 1, 0), span)
    return owner.join(items)


def _str_width(name: str) -> Method:
    def impl(ctx, owner, args, kwargs, span):
        _check_kwargs(name, kwargs)
        if args:
            ctx.check_size(_int_arg(name, args[0]), span)
        return getattr(owner, name)(*args)
    return impl


def m_str_expandtabs(ctx, owner: str, args, kwargs, span):
    _check_kwargs("expandtabs", kwargs, ("tabsize",))
    size = args[0] if args else kwargs.get("tabsize", 8)
    ctx.check_size(len(owner) + owner.count("\t") * max(_int_arg("expandtabs", size), 0), span)
    return owner.expandtabs(size)


def m_list_append(ctx, owner: list, args, kwargs, span):
    _check_kwargs("append", kwargs)
    _arity("append", args, 1)
    ctx.check_size(len(owner) + 1, span)
    owner.append(args[0])


def m_list_insert(ctx, owner: list, args, kwargs, span):
    _check_kwargs("insert", kwargs)
    _arity("insert", args, 2)
    ctx.check_size(len(owner) + 1, span)
    owner.insert(_int_arg("insert", args[0]), args[1])


def m_list_extend(ctx, owner: list, args, kwargs, span):
    _check_kwargs("extend", kwargs)
    _arity("extend", args, 1)
    items = ctx.materialize(args[0], span)
    ctx.check_size(len(owner) + len(items), span)
    owner.extend(items)


def m_list_sort(ctx, owner: list, args, kwargs, span):
    _check_kwargs("sort", kwargs, ("key", "reverse"))
    if args:
        raise TypeError("sort() takes no positional arguments")
    owner[:] = sort_items(ctx, list(owner), kwargs.get("key"), kwargs.get("reverse", False), span)


def m_dict_setdefault(ctx, owner: dict, args, kwargs, span):
    _check_kwargs("setdefault", kwargs)
    _arity("setdefault", args, 1, 2)
    if args[0] not in owner:
        ctx.check_size(len(owner) + 1, span)
    return owner.setdefault(*args)


def m_dict_update(ctx, owner: dict, args, kwargs, span):
    _arity("update", args, 0, 1)
    incoming = b_dict(ctx, args, kwargs, span)
    ctx.check_size(len(owner) + len(incoming), span)
    owner.update(incoming)


def m_set_add(ctx, owner: set, args, kwargs, span):
    _check_kwargs("add", kwargs)
    _arity("add", args, 1)
    if args[0] not in owner:
        ctx.check_size(len(owner) + 1, span)
    owner.add(args[0])


_ALL = (-1,)

STR_METHODS: dict[str, Method] = {
    name: _host_method(name) for name in (
        "upper", "lower", "casefold", "strip", "lstrip", "rstrip", "startswith",
        "endswith", "find", "rfind", "index", "rindex", "count", "isdigit",
        "isalpha", "isalnum", "isspace", "isupper", "islower", "istitle",
        "isdecimal", "isnumeric", "isidentifier", "isascii", "isprintable",
        "title", "capitalize", "swapcase", "partition", "rpartition",
        "removeprefix", "removesuffix",
    )
}
STR_METHODS.update({
    "split": _host_method("split", kw=("sep", "maxsplit")),
    "rsplit": _host_method("rsplit", kw=("sep", "maxsplit")),
    "splitlines": _host_method("splitlines", kw=("keepends",)),
    "replace": m_str_replace,
    "join": m_str_join,
    "center": _str_width("center"),
    "ljust": _str_width("ljust"),
    "rjust": _str_width("rjust"),
    "zfill": _str_width("zfill"),
    "expandtabs": m_str_expandtabs,
})

LIST_METHODS: dict[str, Method] = {
    name: _host_method(name) for name in ("pop", "remove", "index", "count", "reverse", "copy", "clear")
}
LIST_METHODS.update({
    "append": m_list_append,
    "insert": m_list_insert,
    "extend": m_list_extend,
    "sort": m_list_sort,
})

TUPLE_METHODS: dict[str, Method] = {name: _host_method(name) for name in ("count", "index")}

DICT_METHODS: dict[str, Method] = {
    name: _host_method(name) for name in ("get", "keys", "values", "items", "pop", "popitem", "copy", "clear")
}
DICT_METHODS.update({"setdefault": m_dict_setdefault, "update": m_dict_update})

_SET_READ = ("union", "intersection", "difference", "symmetric_difference",
             "issubset", "issuperset", "isdisjoint")
SET_METHODS: dict[str, Method] = {name: _host_method(name, iterable_args=_ALL) for name in _SET_READ}
SET_METHODS.update({name: _host_method(name) for name in ("remove", "discard", "pop", "clear", "copy")})
SET_METHODS.update({
    name: _host_method(name, iterable_args=_ALL)
    for name in ("update", "intersection_update", "difference_update", "symmetric_difference_update")
})
SET_METHODS["add"] = m_set_add

FROZENSET_METHODS: dict[str, Method] = {name: SET_METHODS[name] for name in _SET_READ + ("copy",)}

INT_METHODS: dict[str, Method] = {"bit_length": _host_method("bit_length")}
FLOAT_METHODS: dict[str, Method] = {"is_integer": _host_method("is_integer")}

METHODS: dict[type, dict[str, Method]] = {
    str: STR_METHODS,
    list: LIST_METHODS,
    tuple: TUPLE_METHODS,
    dict: DICT_METHODS,
    set: SET_METHODS,
    frozenset: FROZENSET_METHODS,
    int: INT_METHODS,
    bool: INT_METHODS,
    float: FLOAT_METHODS,
}


def lookup_method(value: Any, name: str) -> BoundMethod | None:
    table = METHODS.get(type(value))
    if table is None or name not in table:
        return None
    return BoundMethod(value, name, table[name])
