"""Guarded interpretation of validated syntax trees."""

from __future__ import annotations

from .errors import ExceptionRecord, GuardError
from .interpreter import ExecContext, ExecutionOutcome, Status, execute
from .values import render, render_truncated

__all__ = [
    "ExceptionRecord",
    "ExecContext",
    "ExecutionOutcome",
    "GuardError",
    "Status",
    "execute",
    "render",
    "render_truncated",
]
