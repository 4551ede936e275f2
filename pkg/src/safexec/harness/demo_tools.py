"""Deterministic stand-in tools used by the bundled corpus policy."""

from __future__ import annotations

import threading
import time
from typing import Any, Callable

from ..policy import PolicyConfig
from ..tools import ToolRegistry, registry_for

_ARTICLES = {
    "ada lovelace": "Ada Lovelace wrote the first published algorithm for a computing machine.",
    "alan turing": "Alan Turing formalised computation with the Turing machine.",
}

# Seconds the slow tool sleeps; longer than any default wall-clock limit.
SLOW_TOOL_SLEEP = 3.0


class DemoTools:
    """Handler set with per-instance state so parallel executions stay independent."""

    def __init__(self) -> None:
        self.records: list[dict] = []
        self._lock = threading.Lock()

    def search_wikipedia(self, query: str) -> str:
        return _ARTICLES.get(query.strip().lower(), f"No article found for {query!r}.")

    def add_to_db(self, record: dict) -> int:
        with self._lock:
            self.records.append(dict(record))
            return len(self.records)

    def flaky_api(self, endpoint: str) -> Any:
        raise ConnectionError(f"service at {endpoint} is unavailable")

    def slow_report(self, topic: str) -> str:
        time.sleep(SLOW_TOOL_SLEEP)
        return f"report on {topic}"

    def handlers(self) -> dict[str, Callable[..., Any]]:
        return {
            "search_wikipedia": self.search_wikipedia,
            "add_to_db": self.add_to_db,
            "flaky_api": self.flaky_api,
            "slow_report": self.slow_report,
        }


def demo_registry(policy: PolicyConfig, **kwargs) -> ToolRegistry:
    """Registry for ``policy`` with the demo handlers bound where names match."""
    return registry_for(policy, DemoTools().handlers(), **kwargs)
