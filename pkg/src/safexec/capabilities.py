"""Names the interpreter can provide safely.

Policies may only grant builtins and modules listed here; granting anything
else would let the validator allow a call the interpreter cannot serve.
"""

from __future__ import annotations

SUPPORTED_BUILTINS = frozenset({
    "abs", "all", "any", "bin", "bool", "chr", "dict", "divmod", "enumerate",
    "filter", "float", "format", "frozenset", "hex", "int", "isinstance", "len",
    "list", "map", "max", "min", "oct", "ord", "pow", "print", "range", "repr",
    "reversed", "round", "set", "sorted", "str", "sum", "tuple", "zip",
    # exception constructors, for ``raise``
    "Exception", "ValueError", "TypeError", "KeyError", "IndexError",
    "ZeroDivisionError", "RuntimeError", "OverflowError", "AssertionError",
})

SUPPORTED_MODULES = frozenset({"math", "string", "random", "typing"})
