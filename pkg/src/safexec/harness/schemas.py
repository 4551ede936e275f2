"""Bundled JSON schemas and validators for manifests, outcomes and transcripts."""

from __future__ import annotations

import json
from functools import lru_cache
from typing import Any

import jsonschema
from referencing import Registry, Resource

from ..paths import SCHEMA_DIR

SCHEMA_NAMES = ("manifest", "outcome", "validation", "transcript", "summary")


@lru_cache(maxsize=None)
def _registry() -> Registry:
    resources = []
    for name in SCHEMA_NAMES:
        doc = json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text(encoding="utf-8"))
        resources.append((doc["$id"], Resource.from_contents(doc)))
    return Registry().with_resources(resources)


@lru_cache(maxsize=None)
def validator(name: str) -> jsonschema.protocols.Validator:
    registry = _registry()
    schema = registry.contents(f"{name}.schema.json")
    cls = jsonschema.validators.validator_for(schema)
    return cls(schema, registry=registry)


def schema_errors(name: str, instance: Any) -> list[str]:
    """Readable messages for every violation, empty when ``instance`` is valid."""
    errors = sorted(validator(name).iter_errors(instance), key=lambda e: list(e.path))
    return [f"{'/'.join(str(p) for p in e.path) or '<root>'}: {e.message}" for e in errors]
