"""Policy-guarded parsing, validation and execution of untrusted Python code."""

from __future__ import annotations

__version__ = "0.1.0"
