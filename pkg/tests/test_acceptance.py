"""Acceptance criteria, one test each; every test records a PASS/FAIL line.

The lines are printed at the end of the pytest run (see conftest.py) and also
when this file is executed directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import json
import time
from dataclasses import replace
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from safexec.categories import ExceptionKind
from safexec.executor import Status, execute
from safexec.feedback import LineDeletingFixer, run_repair_loop
from safexec.frontend import SafexecSyntaxError, parse
from safexec.harness import cli
from safexec.harness.demo_tools import demo_registry
from safexec.harness.reference import run_reference
from safexec.harness.schemas import schema_errors
from safexec.paths import CORPUS_DIR, POLICY_DIR
from safexec.pipeline import run_source
from safexec.policy import parse_tool_signature
from safexec.tools import ScriptedTransport, StubClock, ToolRegistry

GOLDEN = Path(__file__).parent / "golden"
MANIFEST = CORPUS_DIR / "manifest.json"
POLICY = str(POLICY_DIR / "eval-corpus.json")
ALL_KINDS = {k.value for k in ExceptionKind}

RESULTS: dict[int, str] = {}


def record(number: int, name: str, ok: bool, detail: str) -> None:
    RESULTS[number] = f"criterion {number} ({name}): {'PASS' if ok else 'FAIL'} - {detail}"
    assert ok, RESULTS[number]


def strip_elapsed(obj):
    if isinstance(obj, dict):
        return {k: (None if k == "elapsed_ms" else strip_elapsed(v)) for k, v in obj.items()}
    if isinstance(obj, list):
        return [strip_elapsed(v) for v in obj]
    return obj


@pytest.fixture(scope="module")
def corpus_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    start = time.perf_counter()
    code = cli.main(["corpus", str(MANIFEST), "--policy", POLICY, "--out", str(out)])
    seconds = time.perf_counter() - start
    summary = json.loads((out / "summary.json").read_text())
    results = json.loads((out / "results.json").read_text())
    return code, seconds, summary, results


def test_criterion_1_safety_rates(corpus_run):
    code, seconds, summary, _ = corpus_run
    ok = code == 0 and summary["tbr"] == 1.0 and summary["tar"] == 1.0 and seconds < 30.0
    record(1, "safety", ok, f"tbr={summary['tbr']} tar={summary['tar']} runtime={seconds:.1f}s (limit 30s)")


def test_criterion_2_exception_taxonomy(corpus_run):
    _, _, summary, results = corpus_run
    golden = json.loads((GOLDEN / "corpus_summary.json").read_text())
    kinds = set(summary["exception_counts"])
    per_entry = all(r["kind"] == r["expected_exception"] for r in results if r["label"] == "Unsafe")
    ok = summary == golden and kinds == ALL_KINDS and per_entry
    record(2, "exception taxonomy", ok,
           f"{len(kinds)}/13 kinds present, summary equals golden: {summary == golden}, "
           f"per-entry kinds match: {per_entry}")


def test_criterion_3_oracle_correctness(corpus_run):
    _, _, _, results = corpus_run
    by_id = {r["id"]: r for r in results}
    manifest = json.loads(MANIFEST.read_text())["entries"]
    safe = [e for e in manifest if e["label"] == "Safe"]
    mismatches = []
    for entry in safe:
        ref = run_reference(str(CORPUS_DIR / entry["path"]))
        outcome = by_id[entry["id"]]["outcome"]
        if (ref.error is not None or outcome["console_output"] != ref.stdout
                or outcome["final_variables"] != ref.final_variables
                or ref.stdout != entry["expected_stdout"]):
            mismatches.append(entry["id"])
    ok = len(safe) >= 20 and not mismatches
    record(3, "correctness", ok, f"{len(safe) - len(mismatches)}/{len(safe)} safe programs match the "
                                 f"reference interpreter byte-exactly; mismatches={mismatches}")


def test_criterion_4_latency(tmp_path, capsys):
    capsys.readouterr()
    code = cli.main(["bench", str(MANIFEST), "--policy", POLICY, "--reps", "30", "--out", str(tmp_path)])
    capsys.readouterr()
    stats = json.loads((tmp_path / "latency.json").read_text())
    median = stats["per_program"]["median"]
    classes = stats["per_statement_class"]
    worst = max(classes, key=classes.get)
    ok = (code == 0 and stats["repetitions"] == 30 and median < 5.0 and len(classes) == 8
          and all(v < 5.0 for v in classes.values()))
    record(4, "latency", ok, f"median per-program increase {median:.3f} ms (mean {stats['per_program']['mean']:.3f}); "
                             f"worst statement class {worst} {classes[worst]:.3f} ms; bound 5 ms")


def test_criterion_5_guard_properties(corpus_policy, corpus_entries):
    failures = []

    # (a) backoff delays are base * 2**k under a stub clock
    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 300), st.integers(0, 6))
    def backoff(max_retries, base, failing):
        spec = replace(parse_tool_signature("api(q: string)"), max_retries=max_retries, backoff_base=base)
        policy = replace(corpus_policy, tools=(spec,),
                         limits=replace(corpus_policy.limits, wall_clock_timeout=10**7))
        clock = StubClock()
        steps = [{"outcome": "error"}] * failing + [{"outcome": "ok", "value": 1}]
        registry = ToolRegistry(transport=ScriptedTransport(steps, clock), clock=clock)
        registry.register_tool(spec)
        (rec,) = run_source('api("x")', policy, registry, clock=clock).outcome.tool_trace
        assert rec.backoff_delays == [base * 2 ** k for k in range(rec.attempts - 1)]
        assert clock.sleeps == rec.backoff_delays

    try:
        backoff()
    except AssertionError as exc:
        failures.append(f"(a) {exc}")

    # (b) the stack limit trips on frame max+1, not before
    for limit in (1, 2, 7, 32, 64):
        policy = replace(corpus_policy, limits=replace(corpus_policy.limits, max_stack_depth=limit))
        src = "def f(n):\n    if n == 0:\n        return 0\n    return f(n - 1)\n"
        at_limit = run_source(src + f"r = f({limit - 1})\n", policy).outcome
        over = run_source(src + f"r = f({limit})\n", policy).outcome
        if not (at_limit.completed and over.kind is ExceptionKind.StackDepthException):
            failures.append(f"(b) limit {limit}")

    # (c) skipping the validator never lets an unsafe program complete
    escaped = []
    for entry in corpus_entries:
        if not entry.unsafe:
            continue
        try:
            tree = parse(entry.source())
        except SafexecSyntaxError:
            continue  # never executable at all
        if execute(tree, corpus_policy, demo_registry(corpus_policy)).status is Status.Completed:
            escaped.append(entry.id)
    if escaped:
        failures.append(f"(c) completed without validator: {escaped}")

    # (d) a pathological nested loop stops within timeout + 100 ms
    timeout = 300
    policy = replace(corpus_policy, limits=replace(corpus_policy.limits, wall_clock_timeout=timeout,
                                                   max_total_steps=10**12, max_loop_iterations=10**12))
    tree = parse("t = 0\nfor a in range(10**6):\n    for b in range(10**6):\n        for c in range(10**6):\n"
                 "            t += 1\n")
    start = time.perf_counter()
    outcome = execute(tree, policy)
    took = (time.perf_counter() - start) * 1000
    if outcome.kind is not ExceptionKind.TimeoutException or took > timeout + 100:
        failures.append(f"(d) took {took:.0f} ms, kind {outcome.kind}")

    record(5, "guard properties", not failures,
           f"backoff law, exact stack limit, validator-bypass containment, deadline {took:.0f} ms "
           f"for {timeout} ms timeout; failures={failures}")


def test_criterion_6_determinism(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SAFEXEC_SEED", "1234")
    texts = []
    for name in ("a", "b"):
        assert cli.main(["corpus", str(MANIFEST), "--policy", POLICY, "--out", str(tmp_path / name)]) == 0
        raw = json.loads((tmp_path / name / "results.json").read_text())
        texts.append(json.dumps(strip_elapsed(raw), indent=2, sort_keys=True))
    capsys.readouterr()
    ok = texts[0] == texts[1]
    record(6, "determinism", ok, f"two seeded corpus runs identical apart from elapsed fields: {ok}")


def test_criterion_7_repair_loop(corpus_policy, tmp_path):
    subset = json.loads((CORPUS_DIR / "repair_subset.json").read_text())
    manifest = {e["id"]: e for e in json.loads(MANIFEST.read_text())["entries"]}
    repaired = 0
    schema_problems = []
    transcript = tmp_path / "sessions.jsonl"
    for sample_id in subset["ids"]:
        code = (CORPUS_DIR / manifest[sample_id]["path"]).read_text()
        session = run_repair_loop(code, corpus_policy, demo_registry(corpus_policy), LineDeletingFixer(),
                                  max_retries=subset["max_retries"])
        repaired += session.repaired and session.retries_used <= 2
        session.write_transcript(transcript, sample_id)
    for line in transcript.read_text().splitlines():
        schema_problems += schema_errors("transcript", json.loads(line))
    rate = repaired / len(subset["ids"])
    ok = len(subset["ids"]) == 10 and rate >= 0.9 and not schema_problems
    record(7, "repair loop", ok, f"{repaired}/{len(subset['ids'])} repaired within 2 retries (need 90%); "
                                 f"transcript schema errors: {len(schema_problems)}")


if __name__ == "__main__":
    import sys

    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    sys.exit(code)
