from __future__ import annotations

import json
import os
import subprocess
import sys

import pytest

from safexec.harness import cli
from safexec.harness.bench import STATEMENT_CLASSES, SummaryStats, bench_latency, bundled_micro_programs
from safexec.harness.corpus import (
    ManifestError,
    load_manifest,
    rates_from_results,
    run_corpus,
    write_results,
)
from safexec.harness.reference import run_reference
from safexec.harness.schemas import schema_errors
from safexec.paths import CORPUS_DIR, POLICY_DIR

MANIFEST = CORPUS_DIR / "manifest.json"
CORPUS_POLICY = str(POLICY_DIR / "eval-corpus.json")


@pytest.fixture
def echo_manifest(tmp_path):
    (tmp_path / "echo.py").write_text('print("hello")\n')
    manifest = {"entries": [{"id": "echo", "path": "echo.py", "label": "Safe", "expected_stdout": "hello\n"}]}
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest))
    return path


def test_run_exit_codes(tmp_path, capsys):
    safe = tmp_path / "safe.py"
    safe.write_text("x = 1 + 3\n")
    bad = tmp_path / "eval_injection.py"
    bad.write_text("eval(user_input)\n")
    assert cli.main(["run", str(safe), "--policy", "eval-default"]) == 0
    assert json.loads(capsys.readouterr().out)["status"] == "Completed"
    assert cli.main(["run", str(bad), "--policy", "eval-default"]) == 2
    assert json.loads(capsys.readouterr().out)["exception"]["kind"] == "FunctionNotAllowedError"
    assert cli.main(["run", str(tmp_path / "missing.py")]) == 1
    assert cli.main(["run"]) == 1


def test_failed_exit_code(tmp_path):
    policy = json.loads((POLICY_DIR / "eval-default.json").read_text())
    policy["failed_kinds"] = ["KeyError"]
    ppath = tmp_path / "p.json"
    ppath.write_text(json.dumps(policy))
    prog = tmp_path / "k.py"
    prog.write_text('d = {}\nv = d["x"]\n')
    assert cli.main(["run", str(prog), "--policy", str(ppath)]) == 3


def test_run_flags(tmp_path, capsys):
    prog = tmp_path / "p.py"
    prog.write_text("x = 1\n")
    assert cli.main(["run", str(prog), "--dump-ast", "--emit-trace"]) == 0
    captured = capsys.readouterr()
    assert '"kind": "Module"' in captured.out and captured.err.strip()
    assert cli.main(["run", str(prog), "--report"]) == 0
    assert capsys.readouterr().out.startswith("Input Code - x = 1")


def test_bad_seed(tmp_path, monkeypatch):
    prog = tmp_path / "p.py"
    prog.write_text("x = 1\n")
    monkeypatch.setenv("SAFEXEC_SEED", "abc")
    assert cli.main(["run", str(prog)]) == 1


def test_exit_codes_per_corpus_class(corpus_entries):
    expected = {"Safe": 0, "Unsafe": 2}
    for entry in corpus_entries[::7]:
        assert cli.main(["run", str(entry.path), "--policy", CORPUS_POLICY]) == expected[entry.label], entry.id


def test_single_echo_corpus(echo_manifest, eval_policy):
    summary = run_corpus(load_manifest(echo_manifest), eval_policy)
    assert summary.correctness == {"passed": 1, "total": 1}
    assert summary.tar == 1.0 and summary.tbr is None


def test_manifest_errors_abort(tmp_path):
    bad = tmp_path / "m.json"
    bad.write_text(json.dumps({"entries": [{"id": "a", "path": "nope.py", "label": "Unsafe"},
                                           {"id": "a", "path": "nope.py", "label": "Maybe"}]}))
    with pytest.raises(ManifestError) as info:
        load_manifest(bad)
    text = str(info.value)
    assert "duplicate" in text and "missing file" in text
    assert cli.main(["corpus", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert not (tmp_path / "o").exists()


def test_unsafe_entries_need_cwe(tmp_path):
    (tmp_path / "a.py").write_text("x = 1\n")
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"entries": [{"id": "a", "path": "a.py", "label": "Unsafe"}]}))
    with pytest.raises(ManifestError):
        load_manifest(path)


def test_skip_unsupported(tmp_path, eval_policy):
    (tmp_path / "cls.py").write_text("class A:\n    pass\n")
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"entries": [{"id": "c", "path": "cls.py", "label": "Safe"}]}))
    entries = load_manifest(path)
    assert run_corpus(entries, eval_policy, skip_unsupported=True).to_json_obj()["skipped"] == ["c"]
    assert run_corpus(entries, eval_policy).tar == 0.0


def test_summary_invariants_and_independent_rates(tmp_path, corpus_entries, corpus_policy):
    summary = run_corpus(corpus_entries, corpus_policy, workers=4)
    results_path, summary_path = write_results(summary, tmp_path)
    results = json.loads(results_path.read_text())
    written = json.loads(summary_path.read_text())
    assert schema_errors("summary", written) == []
    assert rates_from_results(results) == (written["tbr"], written["tar"])
    non_completed = sum(r["status"] != "Completed" for r in results)
    assert sum(written["exception_counts"].values()) == non_completed
    for r in results:
        assert schema_errors("outcome", r["outcome"]) == []
        assert schema_errors("validation", r["validation"]) == []


def test_bundled_manifest_is_valid():
    data = json.loads(MANIFEST.read_text())
    assert schema_errors("manifest", data) == []
    unsafe = [e for e in data["entries"] if e["label"] == "Unsafe"]
    safe = [e for e in data["entries"] if e["label"] == "Safe"]
    assert len(unsafe) >= 24 and len(safe) >= 20
    assert all("expected_stdout" in e for e in safe)
    covered = {}
    for e in unsafe:
        covered[e["cwe"]] = covered.get(e["cwe"], 0) + 1
    core = ["CWE-94", "CWE-470", "CWE-502", "CWE-552", "CWE-770", "CWE-772", "CWE-787", "CWE-829",
            "CWE-833", "CWE-835", "CWE-843", "CWE-1050"]
    assert all(covered.get(c, 0) >= 2 for c in core), covered


def test_default_policy_corpus_rates(corpus_entries, eval_policy):
    # Without the demo tools declared, tool calls are hallucinations and still blocked.
    summary = run_corpus(corpus_entries, eval_policy, workers=4)
    assert summary.tbr == 1.0 and summary.tar == 1.0


def test_reference_oracle_runs_child(tmp_path):
    prog = tmp_path / "p.py"
    prog.write_text("x = [1, 2]\nprint('a', x)\n")
    ref = run_reference(str(prog))
    assert ref.stdout == "a [1, 2]\n" and ref.final_variables == {"x": "[1, 2]"} and ref.error is None


def test_summary_stats():
    stats = SummaryStats.of([1.0])
    assert (stats.mean, stats.median, stats.std, stats.iqr) == (1.0, 1.0, 0.0, 0.0)
    stats = SummaryStats.of([1.0, 2.0, 3.0, 4.0, 5.0])
    assert stats.median == 3.0 and stats.iqr == 2.0
    assert stats.std == pytest.approx(1.5811388300841898)


def test_bench_single_rep(echo_manifest, eval_policy):
    stats = bench_latency(load_manifest(echo_manifest), eval_policy, reps=1)
    assert stats.per_program.std == 0.0 and stats.repetitions == 1
    assert set(stats.per_statement_class) == set(STATEMENT_CLASSES)


def test_bench_bad_baseline(echo_manifest, eval_policy):
    with pytest.raises(RuntimeError):
        bench_latency(load_manifest(echo_manifest), eval_policy, reps=1, baseline_cmd="/nonexistent/python3")


def test_micro_programs_cover_classes(eval_policy):
    from safexec.pipeline import run_source

    programs = bundled_micro_programs()
    assert list(programs) == list(STATEMENT_CLASSES)
    for path in programs.values():
        assert run_source(path.read_text(), eval_policy).outcome.completed


def test_console_script_entry_point(tmp_path):
    prog = tmp_path / "p.py"
    prog.write_text("print(2)\n")
    proc = subprocess.run([sys.executable, "-m", "safexec.harness.cli", "run", str(prog)],
                          capture_output=True, text=True, env={**os.environ, "SAFEXEC_SEED": "3"})
    assert proc.returncode == 0 and json.loads(proc.stdout)["console_output"] == "2\n"
