"""Command-line entry point: ``safexec run | corpus | bench``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from ..executor import Status
from ..feedback import render_report
from ..paths import POLICY_DIR
from ..pipeline import run_source
from ..policy import PolicyConfig, PolicyLoadError, default_eval_policy, load_policy_file
from .corpus import ManifestError, load_manifest, run_corpus, write_results
from .demo_tools import demo_registry

EXIT_OK, EXIT_USAGE, EXIT_BLOCKED, EXIT_FAILED = 0, 1, 2, 3
SEED_ENV = "SAFEXEC_SEED"


class UsageError(Exception):
    pass


def seed_from_env() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def resolve_policy(name: str | None) -> PolicyConfig:
    """A policy file path, or the name of a bundled policy such as ``eval-default``."""
    if name is None:
        return default_eval_policy()
    path = Path(name)
    if not path.exists():
        bundled = POLICY_DIR / f"{name}.json"
        if bundled.is_file():
            path = bundled
        else:
            raise UsageError(f"policy file not found: {name}")
    try:
        return load_policy_file(str(path))
    except (OSError, PolicyLoadError, ValueError) as exc:
        raise UsageError(f"cannot load policy {name}: {exc}") from exc


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def cmd_run(args: argparse.Namespace) -> int:
    source = _read(args.file)
    policy = resolve_policy(args.policy)
    trace = (lambda line: print(line, file=sys.stderr)) if args.emit_trace else None
    result = run_source(source, policy, demo_registry(policy), rng_seed=seed_from_env(), trace=trace)
    if args.dump_ast:
        if result.tree is None:
            print(json.dumps({"syntax_error": result.validation.to_json_obj()}, indent=2))
        else:
            print(result.tree.to_json(indent=2))
    if args.report:
        print(render_report(source, result.validation, result.outcome, policy).to_text(), end="")
    else:
        print(result.outcome.to_json())
    status = result.outcome.status
    if status is Status.Completed:
        return EXIT_OK
    return EXIT_BLOCKED if status is Status.Blocked else EXIT_FAILED


def cmd_corpus(args: argparse.Namespace) -> int:
    policy = resolve_policy(args.policy)
    try:
        entries = load_manifest(args.manifest)
    except ManifestError as exc:
        raise UsageError(str(exc)) from exc
    summary = run_corpus(entries, policy, rng_seed=seed_from_env(), workers=args.workers,
                         skip_unsupported=args.skip_unsupported)
    _, summary_path = write_results(summary, args.out)
    print(summary_path.read_text(encoding="utf-8"), end="")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    from .bench import bench_latency

    policy = resolve_policy(args.policy)
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    try:
        entries = load_manifest(args.manifest)
    except ManifestError as exc:
        raise UsageError(str(exc)) from exc
    try:
        stats = bench_latency(entries, policy, args.reps, args.baseline)
    except RuntimeError as exc:
        raise UsageError(str(exc)) from exc
    text = json.dumps(stats.to_json_obj(), indent=2)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "latency.json").write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="safexec", description="Run Python-subset programs under a guard policy.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute one program and print its outcome")
    run.add_argument("file")
    run.add_argument("--policy", help="policy file or bundled policy name (default: eval-default)")
    run.add_argument("--dump-ast", action="store_true", help="print the syntax tree as JSON first")
    run.add_argument("--emit-trace", action="store_true", help="write a per-step trace to stderr")
    run.add_argument("--report", action="store_true", help="print the five-field feedback report")
    run.set_defaults(func=cmd_run)

    corpus = sub.add_parser("corpus", help="run a labelled corpus and write results.json / summary.json")
    corpus.add_argument("manifest")
    corpus.add_argument("--policy")
    corpus.add_argument("--out", required=True)
    corpus.add_argument("--workers", type=int, default=1)
    corpus.add_argument("--skip-unsupported", action="store_true",
                        help="report programs using constructs outside the grammar as skipped")
    corpus.set_defaults(func=cmd_corpus)

    bench = sub.add_parser("bench", help="time guarded execution against a baseline interpreter")
    bench.add_argument("manifest")
    bench.add_argument("--policy")
    bench.add_argument("--reps", type=int, default=30)
    bench.add_argument("--baseline", help="baseline command (default: this Python's reference runner)")
    bench.add_argument("--out")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"safexec: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
