"""Guard exceptions raised inside the interpreter and their records."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..categories import ExceptionKind
from ..frontend.nodes import Span

EK = ExceptionKind

_HOST_KINDS: tuple[tuple[type[BaseException], ExceptionKind], ...] = (
    (ZeroDivisionError, EK.DivideByZeroError),
    (IndexError, EK.OutOfBoundsError),
    (KeyError, EK.KeyError),
    (RecursionError, EK.StackDepthException),
    (OverflowError, EK.OverflowError),
    (MemoryError, EK.OverflowError),
    (TypeError, EK.TypeError),
    (ValueError, EK.TypeError),
    (AttributeError, EK.TypeError),
    (RuntimeError, EK.TypeError),
)

# Host exception classes the interpreter converts; anything else is a bug.
HOST_ERRORS = tuple(cls for cls, _ in _HOST_KINDS)

# User-raised exception class name -> kind
RAISE_KINDS: dict[str, ExceptionKind] = {
    "KeyError": EK.KeyError,
    "IndexError": EK.OutOfBoundsError,
    "ZeroDivisionError": EK.DivideByZeroError,
    "OverflowError": EK.OverflowError,
    "TypeError": EK.TypeError,
    "ValueError": EK.TypeError,
    "RecursionError": EK.StackDepthException,
}


def kind_for_host_error(exc: BaseException) -> ExceptionKind:
    for cls, kind in _HOST_KINDS:
        if isinstance(exc, cls):
            return kind
    return EK.TypeError


def host_error_message(exc: BaseException) -> str:
    if isinstance(exc, KeyError) and exc.args:
        from .values import render
        return render(exc.args[0], limit=200)
    text = str(exc)
    return f"{type(exc).__name__}: {text}" if text else type(exc).__name__


class GuardError(Exception):
    """A terminal condition inside the sandbox: a guard trip or a program error."""

    def __init__(self, kind: ExceptionKind, message: str, span: Span | None = None) -> None:
        super().__init__(message)
        self.kind = kind
        self.message = message
        self.span = span
        self.stack_summary: list[str] | None = None
        # tool records attached by the tool layer
        self.tool_record: Any = None


@dataclass(frozen=True)
class ExceptionRecord:
    kind: ExceptionKind
    message: str
    span: Span
    stack_summary: tuple[str, ...] = field(default_factory=tuple)

    @property
    def last_line(self) -> str:
        return f"{self.kind.value}: {self.message}"

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "message": self.message,
            "span": list(self.span),
            "stack_summary": list(self.stack_summary),
        }
