"""Risk categories, exception kinds, and the lookup tables tying them together."""

from __future__ import annotations

import builtins
import enum


class RiskCategory(str, enum.Enum):
    ToolNotAllowed = "ToolNotAllowed"
    ToolError = "ToolError"
    CodeInjection = "CodeInjection"
    InfiniteLoop = "InfiniteLoop"
    UnsafeReflection = "UnsafeReflection"
    Deserialization = "Deserialization"
    ResourceExhaustion = "ResourceExhaustion"
    OutOfBoundsWrite = "OutOfBoundsWrite"
    TypeConfusion = "TypeConfusion"
    Deadlock = "Deadlock"
    FileAccess = "FileAccess"
    UntrustedInclusion = "UntrustedInclusion"
    ResourceLeak = "ResourceLeak"
    OperationalError = "OperationalError"
    None_ = "None"

    @property
    def display(self) -> str:
        return CATEGORY_DISPLAY[self]

    def __str__(self) -> str:
        return self.value


CATEGORY_DISPLAY: dict[RiskCategory, str] = {
    RiskCategory.ToolNotAllowed: "Tool Not Allowed",
    RiskCategory.ToolError: "Tool Error",
    RiskCategory.CodeInjection: "Code Injection",
    RiskCategory.InfiniteLoop: "Infinite Loop",
    RiskCategory.UnsafeReflection: "Unsafe Reflection",
    RiskCategory.Deserialization: "Deserialization",
    RiskCategory.ResourceExhaustion: "Resource Exhaustion",
    RiskCategory.OutOfBoundsWrite: "Out-of-bounds Write",
    RiskCategory.TypeConfusion: "Type Confusion",
    RiskCategory.Deadlock: "Deadlock",
    RiskCategory.FileAccess: "File Access",
    RiskCategory.UntrustedInclusion: "Untrusted Inclusion",
    RiskCategory.ResourceLeak: "Resource Leak",
    RiskCategory.OperationalError: "Operational Error",
    RiskCategory.None_: "None",
}

CATEGORY_DESCRIPTIONS: dict[RiskCategory, str] = {
    RiskCategory.ToolNotAllowed: "the called tool is not declared in the configuration",
    RiskCategory.ToolError: "an external tool failed at runtime",
    RiskCategory.CodeInjection: "the code generates or runs code dynamically",
    RiskCategory.InfiniteLoop: "a loop cannot terminate within the configured limits",
    RiskCategory.UnsafeReflection: "the code inspects or selects code through reflection",
    RiskCategory.Deserialization: "the code deserializes data from an untrusted source",
    RiskCategory.ResourceExhaustion: "the code consumes time, memory or stack without bound",
    RiskCategory.OutOfBoundsWrite: "the code indexes outside a container's bounds",
    RiskCategory.TypeConfusion: "a value is used with an incompatible type",
    RiskCategory.Deadlock: "the code uses locks or threads that may block forever",
    RiskCategory.FileAccess: "the code touches the file system",
    RiskCategory.UntrustedInclusion: "the code pulls in functionality over the network",
    RiskCategory.ResourceLeak: "the code acquires a resource without releasing it",
    RiskCategory.OperationalError: "the program failed with an ordinary runtime error",
    RiskCategory.None_: "no problem detected",
}


class ExceptionKind(str, enum.Enum):
    FunctionNotAllowedError = "FunctionNotAllowedError"
    WhileTrueError = "WhileTrueError"
    ImportNotAllowedError = "ImportNotAllowedError"
    TimeoutException = "TimeoutException"
    KeyError = "KeyError"
    StackDepthException = "StackDepthException"
    TypeError = "TypeError"
    OverflowError = "OverflowError"
    NodeNotAllowedError = "NodeNotAllowedError"
    NestedLoopDepthThresholdReachedError = "NestedLoopDepthThresholdReachedError"
    DivideByZeroError = "DivideByZeroError"
    ToolError = "ToolError"
    OutOfBoundsError = "OutOfBoundsError"

    def __str__(self) -> str:
        return self.value


# Kinds decided entirely by static rules under the supported grammar.
STATIC_KINDS = frozenset({
    ExceptionKind.FunctionNotAllowedError,
    ExceptionKind.WhileTrueError,
    ExceptionKind.ImportNotAllowedError,
    ExceptionKind.NodeNotAllowedError,
})

KIND_CATEGORY: dict[ExceptionKind, RiskCategory] = {
    ExceptionKind.WhileTrueError: RiskCategory.InfiniteLoop,
    ExceptionKind.TimeoutException: RiskCategory.ResourceExhaustion,
    ExceptionKind.NestedLoopDepthThresholdReachedError: RiskCategory.ResourceExhaustion,
    ExceptionKind.OverflowError: RiskCategory.ResourceExhaustion,
    ExceptionKind.StackDepthException: RiskCategory.ResourceExhaustion,
    ExceptionKind.OutOfBoundsError: RiskCategory.OutOfBoundsWrite,
    ExceptionKind.TypeError: RiskCategory.TypeConfusion,
    ExceptionKind.KeyError: RiskCategory.OperationalError,
    ExceptionKind.DivideByZeroError: RiskCategory.OperationalError,
    ExceptionKind.ToolError: RiskCategory.ToolError,
    ExceptionKind.NodeNotAllowedError: RiskCategory.CodeInjection,
}

DEFAULT_IMPORT_CATEGORIES: dict[str, RiskCategory] = {
    "pickle": RiskCategory.Deserialization,
    "marshal": RiskCategory.Deserialization,
    "shelve": RiskCategory.Deserialization,
    "dill": RiskCategory.Deserialization,
    "yaml": RiskCategory.Deserialization,
    "socket": RiskCategory.UntrustedInclusion,
    "requests": RiskCategory.UntrustedInclusion,
    "urllib": RiskCategory.UntrustedInclusion,
    "http": RiskCategory.UntrustedInclusion,
    "ftplib": RiskCategory.UntrustedInclusion,
    "os": RiskCategory.FileAccess,
    "shutil": RiskCategory.FileAccess,
    "pathlib": RiskCategory.FileAccess,
    "io": RiskCategory.FileAccess,
    "tempfile": RiskCategory.FileAccess,
    "glob": RiskCategory.FileAccess,
    "threading": RiskCategory.Deadlock,
    "_thread": RiskCategory.Deadlock,
    "multiprocessing": RiskCategory.ResourceExhaustion,
    "subprocess": RiskCategory.CodeInjection,
    "importlib": RiskCategory.UnsafeReflection,
    "inspect": RiskCategory.UnsafeReflection,
    "ctypes": RiskCategory.UnsafeReflection,
}

CALL_CATEGORIES: dict[str, RiskCategory] = {
    "eval": RiskCategory.CodeInjection,
    "exec": RiskCategory.CodeInjection,
    "compile": RiskCategory.CodeInjection,
    "__import__": RiskCategory.CodeInjection,
    "getattr": RiskCategory.UnsafeReflection,
    "setattr": RiskCategory.UnsafeReflection,
    "delattr": RiskCategory.UnsafeReflection,
    "hasattr": RiskCategory.UnsafeReflection,
    "globals": RiskCategory.UnsafeReflection,
    "locals": RiskCategory.UnsafeReflection,
    "vars": RiskCategory.UnsafeReflection,
    "dir": RiskCategory.UnsafeReflection,
    "type": RiskCategory.UnsafeReflection,
    "input": RiskCategory.UnsafeReflection,
    "open": RiskCategory.FileAccess,
}

HOST_BUILTIN_NAMES = frozenset(name for name in dir(builtins) if not name.startswith("_")) | {"__import__"}


def import_category(module: str, table: dict[str, RiskCategory] | None = None) -> RiskCategory:
    """Category for a disallowed import, looked up by its top-level package."""
    table = DEFAULT_IMPORT_CATEGORIES if table is None else table
    if module in table:
        return table[module]
    root = module.split(".", 1)[0]
    return table.get(root, RiskCategory.CodeInjection)


def call_category(name: str, tool_names: frozenset[str] | set[str] = frozenset()) -> RiskCategory:
    """Category for a call to a name that the policy does not allow.

    Host builtins fall back to CodeInjection; names that are not builtins of
    the host language look like hallucinated tools.
    """
    if name in CALL_CATEGORIES:
        return CALL_CATEGORIES[name]
    if name in HOST_BUILTIN_NAMES and name not in tool_names:
        return RiskCategory.CodeInjection
    return RiskCategory.ToolNotAllowed
