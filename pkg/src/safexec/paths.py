"""Locations of the data files shipped inside the package."""

from __future__ import annotations

from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent / "data"
POLICY_DIR = DATA_DIR / "policies"
CORPUS_DIR = DATA_DIR / "corpus"
SCHEMA_DIR = DATA_DIR / "schemas"
BENCH_DIR = DATA_DIR / "bench"
TEMPLATE_DIR = DATA_DIR / "templates"
