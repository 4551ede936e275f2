"""Corpus runner: block/allow rates, exception counts and output checks."""

from __future__ import annotations

import json
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from ..executor import Status
from ..frontend.nodes import SafexecSyntaxError
from ..frontend import parse
from ..pipeline import RunResult, run_source
from ..policy import PolicyConfig
from .demo_tools import demo_registry
from .schemas import schema_errors


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    path: Path
    label: str  # Safe | Unsafe
    cwe: str | None = None
    expected_exception: str | None = None
    expected_stdout: str | None = None

    @property
    def unsafe(self) -> bool:
        return self.label == "Unsafe"

    def source(self) -> str:
        return self.path.read_text(encoding="utf-8")


def load_manifest(path: str | os.PathLike) -> list[CorpusEntry]:
    """Parse and check a manifest; any problem aborts before anything runs."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    problems = schema_errors("manifest", data)
    entries = []
    seen: set[str] = set()
    for raw in data.get("entries", []) if isinstance(data, dict) else []:
        if not isinstance(raw, dict) or "id" not in raw:
            continue
        if raw["id"] in seen:
            problems.append(f"duplicate id {raw['id']!r}")
        seen.add(raw["id"])
        if "path" in raw:
            file = (path.parent / raw["path"]).resolve()
            if not file.is_file():
                problems.append(f"{raw['id']}: missing file {raw['path']}")
        else:
            file = path.parent
        entries.append(CorpusEntry(raw["id"], file, raw.get("label", ""), raw.get("cwe"),
                                   raw.get("expected_exception"), raw.get("expected_stdout")))
    if problems:
        raise ManifestError("invalid manifest: " + "; ".join(problems))
    return entries


@dataclass
class EntryResult:
    entry: CorpusEntry
    run: RunResult | None
    skipped: bool = False
    stdout_match: bool | None = None

    @property
    def status(self) -> Status | None:
        return self.run.outcome.status if self.run else None

    def to_json_obj(self, include_timing: bool = True) -> dict[str, Any]:
        e = self.entry
        obj: dict[str, Any] = {"id": e.id, "label": e.label, "cwe": e.cwe, "skipped": self.skipped}
        if self.run is not None:
            outcome = self.run.outcome
            obj["status"] = outcome.status.value
            obj["kind"] = outcome.kind.value if outcome.kind else None
            obj["expected_exception"] = e.expected_exception
            obj["stdout_match"] = self.stdout_match
            obj["validation"] = self.run.validation.to_json_obj()
            obj["outcome"] = outcome.to_json_obj(include_timing)
        return obj


@dataclass
class CorpusSummary:
    policy_id: str
    results: list[EntryResult] = field(default_factory=list)

    def _counted(self) -> list[EntryResult]:
        return [r for r in self.results if not r.skipped]

    @property
    def tbr(self) -> float | None:
        unsafe = [r for r in self._counted() if r.entry.unsafe]
        if not unsafe:
            return None
        return sum(r.status is not Status.Completed for r in unsafe) / len(unsafe)

    @property
    def tar(self) -> float | None:
        safe = [r for r in self._counted() if not r.entry.unsafe]
        if not safe:
            return None
        return sum(r.status is Status.Completed for r in safe) / len(safe)

    @property
    def exception_counts(self) -> dict[str, int]:
        counts = Counter(r.run.outcome.kind.value for r in self._counted() if r.status is not Status.Completed)
        return dict(sorted(counts.items()))

    @property
    def per_cwe(self) -> dict[str, dict[str, int]]:
        table: dict[str, dict[str, int]] = {}
        for r in self._counted():
            if r.entry.unsafe and r.entry.cwe:
                row = table.setdefault(r.entry.cwe, {"blocked": 0, "total": 0})
                row["total"] += 1
                row["blocked"] += r.status is not Status.Completed
        return dict(sorted(table.items(), key=lambda kv: int(kv[0].split("-")[1])))

    @property
    def correctness(self) -> dict[str, int]:
        checked = [r for r in self._counted() if r.stdout_match is not None]
        return {"passed": sum(r.stdout_match for r in checked), "total": len(checked)}

    def to_json_obj(self, latency: dict | None = None) -> dict[str, Any]:
        return {
            "policy_id": self.policy_id,
            "tbr": self.tbr,
            "tar": self.tar,
            "exception_counts": self.exception_counts,
            "per_cwe": self.per_cwe,
            "correctness": self.correctness,
            "skipped": [r.entry.id for r in self.results if r.skipped],
            "latency": latency,
        }


def _is_unsupported(source: str) -> bool:
    try:
        parse(source)
    except SafexecSyntaxError as err:
        return any(d.excluded for d in err.diagnostics)
    return False


def run_entry(entry: CorpusEntry, policy: PolicyConfig, *, rng_seed: int = 0, skip_unsupported: bool = False,
              registry_factory: Callable[[PolicyConfig], Any] = demo_registry,
              validate: bool = True) -> EntryResult:
    source = entry.source()
    if skip_unsupported and _is_unsupported(source):
        return EntryResult(entry, None, skipped=True)
    run = run_source(source, policy, registry_factory(policy), rng_seed=rng_seed, validate=validate)
    match = None
    if entry.expected_stdout is not None:
        match = run.outcome.status is Status.Completed and run.outcome.console_output == entry.expected_stdout
    return EntryResult(entry, run, stdout_match=match)


def run_corpus(entries: list[CorpusEntry], policy: PolicyConfig, *, rng_seed: int = 0, workers: int = 1,
               skip_unsupported: bool = False, validate: bool = True,
               registry_factory: Callable[[PolicyConfig], Any] = demo_registry) -> CorpusSummary:
    def one(entry: CorpusEntry) -> EntryResult:
        return run_entry(entry, policy, rng_seed=rng_seed, skip_unsupported=skip_unsupported,
                         registry_factory=registry_factory, validate=validate)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, entries))
    else:
        results = [one(e) for e in entries]
    return CorpusSummary(policy.policy_id, results)


def write_results(summary: CorpusSummary, out_dir: str | os.PathLike, latency: dict | None = None) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results_path = out / "results.json"
    summary_path = out / "summary.json"
    results_path.write_text(json.dumps([r.to_json_obj() for r in summary.results], indent=2,
                                       ensure_ascii=False) + "\n", encoding="utf-8")
    summary_path.write_text(json.dumps(summary.to_json_obj(latency), indent=2, ensure_ascii=False) + "\n",
                            encoding="utf-8")
    return results_path, summary_path


def rates_from_results(results: list[dict[str, Any]]) -> tuple[float | None, float | None]:
    """Recompute TBR and TAR from a results file, independent of CorpusSummary."""
    unsafe = [r for r in results if r["label"] == "Unsafe" and not r["skipped"]]
    safe = [r for r in results if r["label"] == "Safe" and not r["skipped"]]
    tbr = sum(r["status"] != "Completed" for r in unsafe) / len(unsafe) if unsafe else None
    tar = sum(r["status"] == "Completed" for r in safe) / len(safe) if safe else None
    return tbr, tar
