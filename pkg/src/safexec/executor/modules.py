"""Sandboxed stand-ins for the importable modules.

Each module is rebuilt per execution so that ``random`` state is private to
one run and seeded from the execution's rng_seed.
"""

from __future__ import annotations

import math
import random
import string
from typing import Any, Callable

from ..categories import ExceptionKind
from .errors import GuardError
from .values import BuiltinFunction, ModuleVal, TypingAlias

EK = ExceptionKind

_LOG10_E = 1 / math.log(10)


def _digits_of_factorial(n: int) -> float:
    return math.lgamma(n + 1) * _LOG10_E if n > 1 else 1


def _fn(name: str, impl: Callable[..., Any]) -> BuiltinFunction:
    def call(ctx, args, kwargs, span):
        return impl(ctx, *args, **kwargs)
    return BuiltinFunction(name, call)


def _plain(name: str, host: Callable[..., Any]) -> BuiltinFunction:
    def call(ctx, args, kwargs, span):
        result = host(*args, **kwargs)
        ctx.check_value(result, span)
        return result
    return BuiltinFunction(name, call)


def _require_int(value: Any, fname: str) -> int:
    if type(value) not in (int, bool):
        raise TypeError(f"{fname}() argument must be an integer")
    return int(value)


def _factorial(ctx, n):
    n = _require_int(n, "factorial")
    if n >= 0 and _digits_of_factorial(n) > ctx.limits.max_int_magnitude:
        raise GuardError(EK.OverflowError, f"factorial({n}) exceeds the integer size limit")
    return math.factorial(n)


def _comb(ctx, n, k):
    n = _require_int(n, "comb")
    k = _require_int(k, "comb")
    if 0 <= k <= n:
        digits = (_digits_of_factorial(n) - _digits_of_factorial(k) - _digits_of_factorial(n - k))
        if digits > ctx.limits.max_int_magnitude:
            raise GuardError(EK.OverflowError, f"comb({n}, {k}) exceeds the integer size limit")
    return math.comb(n, k)


def _perm(ctx, n, k=None):
    n = _require_int(n, "perm")
    k = n if k is None else _require_int(k, "perm")
    if 0 <= k <= n:
        digits = _digits_of_factorial(n) - _digits_of_factorial(n - k)
        if digits > ctx.limits.max_int_magnitude:
            raise GuardError(EK.OverflowError, f"perm({n}, {k}) exceeds the integer size limit")
    return math.perm(n, k)


def _prod(ctx, iterable, start=1):
    acc = start
    for item in ctx.iterate(iterable, None):
        acc = ctx.binop("*", acc, item, None)
    return acc


def _fsum(ctx, iterable):
    return math.fsum(ctx.materialize(iterable, None))


def _float_fn(name: str) -> BuiltinFunction:
    return _plain(name, getattr(math, name))


_MATH_FLOAT_FUNCS = (
    "sqrt", "exp", "log", "log2", "log10", "log1p", "expm1", "sin", "cos", "tan",
    "asin", "acos", "atan", "atan2", "sinh", "cosh", "tanh", "hypot", "degrees",
    "radians", "fabs", "copysign", "fmod", "pow", "ldexp", "frexp", "modf",
    "isclose", "isfinite", "isinf", "isnan", "floor", "ceil", "trunc", "gcd",
    "isqrt", "lcm", "dist",
)


def make_math() -> ModuleVal:
    attrs: dict[str, Any] = {name: _float_fn(name) for name in _MATH_FLOAT_FUNCS}
    attrs["dist"] = _fn("dist", lambda ctx, p, q: math.dist(ctx.materialize(p, None), ctx.materialize(q, None)))
    attrs["factorial"] = _fn("factorial", _factorial)
    attrs["comb"] = _fn("comb", _comb)
    attrs["perm"] = _fn("perm", _perm)
    attrs["prod"] = _fn("prod", _prod)
    attrs["fsum"] = _fn("fsum", _fsum)
    attrs.update(pi=math.pi, e=math.e, tau=math.tau, inf=math.inf, nan=math.nan)
    return ModuleVal("math", attrs)


def make_string() -> ModuleVal:
    attrs: dict[str, Any] = {
        name: getattr(string, name)
        for name in ("ascii_letters", "ascii_lowercase", "ascii_uppercase", "digits",
                     "hexdigits", "octdigits", "punctuation", "printable", "whitespace")
    }

    def capwords(ctx, s, sep=None):
        if type(s) is not str or (sep is not None and type(sep) is not str):
            raise TypeError("capwords() arguments must be str")
        result = string.capwords(s, sep)
        ctx.check_value(result, None)
        return result

    attrs["capwords"] = _fn("capwords", capwords)
    return ModuleVal("string", attrs)


def make_random(seed: int) -> ModuleVal:
    rng = random.Random(seed)

    def seed_fn(ctx, a=None):
        if a is not None and type(a) not in (int, float, str, bool):
            raise TypeError("seed must be int, float, str or None")
        rng.seed(a)

    def sequence(ctx, seq):
        if type(seq) not in (list, tuple, str, range):
            raise TypeError(f"'{type(seq).__name__}' object is not a sequence")
        return seq

    def choice(ctx, seq):
        return rng.choice(sequence(ctx, seq))

    def shuffle(ctx, seq):
        if type(seq) is not list:
            raise TypeError("shuffle() requires a list")
        rng.shuffle(seq)

    def sample(ctx, population, k):
        population = sequence(ctx, population)
        k = _require_int(k, "sample")
        ctx.check_size(k, None)
        return rng.sample(population, k)

    def randint(ctx, a, b):
        return rng.randint(_require_int(a, "randint"), _require_int(b, "randint"))

    def randrange(ctx, *args):
        return rng.randrange(*[_require_int(a, "randrange") for a in args])

    attrs = {
        "seed": _fn("seed", seed_fn),
        "random": _fn("random", lambda ctx: rng.random()),
        "uniform": _fn("uniform", lambda ctx, a, b: rng.uniform(a, b)),
        "randint": _fn("randint", randint),
        "randrange": _fn("randrange", randrange),
        "choice": _fn("choice", choice),
        "shuffle": _fn("shuffle", shuffle),
        "sample": _fn("sample", sample),
    }
    return ModuleVal("random", attrs)


_TYPING_NAMES = ("Any", "Callable", "Dict", "FrozenSet", "Iterable", "Iterator", "List",
                 "Optional", "Sequence", "Set", "Tuple", "Union")


def make_typing() -> ModuleVal:
    return ModuleVal("typing", {name: TypingAlias(name) for name in _TYPING_NAMES})


def make_module(name: str, seed: int) -> ModuleVal | None:
    if name == "math":
        return make_math()
    if name == "string":
        return make_string()
    if name == "random":
        return make_random(seed)
    if name == "typing":
        return make_typing()
    return None
