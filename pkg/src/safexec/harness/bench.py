"""Latency of guarded execution relative to plain host execution.

Each program is run once to warm caches, then ``reps`` times under the guard
(parse, validate and execute in this process) and ``reps`` times in the
baseline process, which reports its own per-run durations so process start-up
never enters the comparison.  Timing is strictly serial.
"""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

from ..pipeline import run_source
from ..paths import BENCH_DIR
from ..policy import PolicyConfig
from .corpus import CorpusEntry
from .demo_tools import demo_registry
from .reference import time_reference

STATEMENT_CLASSES = (
    "Variable Assignment",
    "Conditional Statement",
    "For Loop",
    "While Loop",
    "Function Call",
    "List Comprehension",
    "Dictionary Comprehension",
    "Module Import",
)


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    median: float
    std: float
    iqr: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "SummaryStats":
        if not values:
            raise ValueError("no samples")
        # One sample has no spread; report zero rather than failing.
        std = statistics.stdev(values) if len(values) > 1 else 0.0
        if len(values) > 1:
            q1, _, q3 = statistics.quantiles(values, n=4, method="inclusive")
            iqr = q3 - q1
        else:
            iqr = 0.0
        return cls(statistics.fmean(values), statistics.median(values), std, iqr)

    def to_json_obj(self) -> dict[str, float]:
        return {"mean": self.mean, "median": self.median, "std": self.std, "iqr": self.iqr}


@dataclass(frozen=True)
class LatencyStats:
    per_program: SummaryStats
    per_statement_class: dict[str, float]
    repetitions: int
    program_increases: dict[str, float]

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "per_program": self.per_program.to_json_obj(),
            "per_statement_class": dict(self.per_statement_class),
            "repetitions": self.repetitions,
        }


def bundled_micro_programs() -> dict[str, Path]:
    index = json.loads((BENCH_DIR / "classes.json").read_text(encoding="utf-8"))
    return {name: BENCH_DIR / index[name] for name in STATEMENT_CLASSES}


def time_guarded(source: str, policy: PolicyConfig, reps: int,
                 registry_factory: Callable[[PolicyConfig], Any] = demo_registry) -> list[float]:
    durations = []
    for _ in range(reps):
        tools = registry_factory(policy)
        start = time.perf_counter()
        run_source(source, policy, tools)
        durations.append((time.perf_counter() - start) * 1000.0)
    return durations


def increase_ms(path: Path, policy: PolicyConfig, reps: int, baseline_cmd: list[str] | str | None) -> float:
    """Mean guarded time minus mean baseline time for one program."""
    source = path.read_text(encoding="utf-8")
    time_guarded(source, policy, 1)
    guarded = time_guarded(source, policy, reps)
    # The child runs one extra warm-up pass that is discarded here.
    baseline = time_reference(str(path), reps + 1, baseline_cmd)[1:]
    return statistics.fmean(guarded) - statistics.fmean(baseline)


def bench_latency(entries: list[CorpusEntry], policy: PolicyConfig, reps: int = 30,
                  baseline_cmd: list[str] | str | None = None,
                  micro_programs: dict[str, Path] | None = None) -> LatencyStats:
    """Per-program and per-statement-class increases in ms.

    Only Safe entries are timed: running unsafe programs on the unguarded
    baseline would execute the very behavior the guard exists to stop.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    per_program = {e.id: increase_ms(e.path, policy, reps, baseline_cmd) for e in entries if not e.unsafe}
    if not per_program:
        raise ValueError("no Safe entries to time")
    micro = micro_programs if micro_programs is not None else bundled_micro_programs()
    per_class = {name: increase_ms(path, policy, reps, baseline_cmd) for name, path in micro.items()}
    return LatencyStats(SummaryStats.of(list(per_program.values())), per_class, reps, per_program)
