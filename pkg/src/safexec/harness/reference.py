"""Reference-interpreter oracle: run a program on the host Python in a child process.

As a script (``python -m safexec.harness.reference FILE``) it executes FILE
with ``exec`` and prints one JSON object with the captured stdout and the
end-of-run globals rendered by the sandbox's own renderer.  With
``--time --reps N`` it instead prints the in-process duration of each run so
that process start-up is excluded from latency baselines.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import os
import shlex
import subprocess
import sys
import time
from dataclasses import dataclass

from ..executor.values import render_truncated

_HIDDEN = ("__builtins__", "__name__")


@dataclass(frozen=True)
class ReferenceResult:
    stdout: str
    final_variables: dict[str, str]
    error: str | None


def _run_once(code) -> tuple[str, dict, str | None]:
    env: dict = {"__name__": "__main__"}
    buf = io.StringIO()
    error = None
    with contextlib.redirect_stdout(buf):
        try:
            exec(code, env)
        except Exception as exc:  # reported to the parent, not raised
            error = f"{type(exc).__name__}: {exc}"
    variables = {k: render_truncated(v) for k, v in env.items() if k not in _HIDDEN}
    return buf.getvalue(), variables, error


def _child(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="safexec-reference")
    parser.add_argument("file")
    parser.add_argument("--time", action="store_true", help="print per-run durations instead of results")
    parser.add_argument("--reps", type=int, default=1)
    args = parser.parse_args(argv)
    with open(args.file, encoding="utf-8") as fh:
        source = fh.read()
    code = compile(source, args.file, "exec")
    if args.time:
        durations = []
        for _ in range(max(args.reps, 1)):
            env: dict = {"__name__": "__main__"}
            with contextlib.redirect_stdout(io.StringIO()):
                start = time.perf_counter()
                try:
                    exec(code, env)
                except Exception:
                    pass
                durations.append((time.perf_counter() - start) * 1000.0)
        print(json.dumps({"durations_ms": durations}))
        return 0
    stdout, variables, error = _run_once(code)
    print(json.dumps({"stdout": stdout, "final_variables": variables, "error": error}))
    return 0


def default_baseline_cmd() -> list[str]:
    return [sys.executable, "-m", "safexec.harness.reference"]


def _child_env() -> dict[str, str]:
    env = dict(os.environ)
    env["PYTHONHASHSEED"] = "0"
    return env


def run_reference(path: str, cmd: list[str] | None = None, timeout: float = 60.0) -> ReferenceResult:
    cmd = list(cmd or default_baseline_cmd())
    proc = subprocess.run(cmd + [path], capture_output=True, text=True, timeout=timeout, env=_child_env())
    if proc.returncode != 0:
        raise RuntimeError(f"reference interpreter failed on {path}: {proc.stderr.strip()}")
    data = json.loads(proc.stdout)
    return ReferenceResult(data["stdout"], data["final_variables"], data["error"])


def time_reference(path: str, reps: int, cmd: list[str] | str | None = None, timeout: float = 300.0) -> list[float]:
    """Per-run durations in ms measured inside the baseline process."""
    if isinstance(cmd, str):
        cmd = shlex.split(cmd)
    cmd = list(cmd or default_baseline_cmd())
    try:
        proc = subprocess.run(cmd + ["--time", "--reps", str(reps), path], capture_output=True, text=True,
                              timeout=timeout, env=_child_env())
    except OSError as exc:
        raise RuntimeError(f"could not launch baseline {cmd[0]!r}: {exc}") from exc
    if proc.returncode != 0:
        raise RuntimeError(f"baseline failed on {path}: {proc.stderr.strip()}")
    return [float(x) for x in json.loads(proc.stdout)["durations_ms"]]


if __name__ == "__main__":
    sys.exit(_child())
