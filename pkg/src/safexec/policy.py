"""Safety policy: grammar, builtin and import allowlists, tools, resource limits."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, fields, replace
from typing import Any

from .capabilities import SUPPORTED_BUILTINS, SUPPORTED_MODULES
from .categories import DEFAULT_IMPORT_CATEGORIES, ExceptionKind, RiskCategory
from .frontend.nodes import POLICY_KINDS, NodeKind

TYPE_TAGS = ("int", "float", "bool", "string", "list", "dict", "any")

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_SIGNATURE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*\Z", re.S)


class PolicyError(ValueError):
    """One problem found while loading a policy."""


class PolicyLoadError(ValueError):
    """Every problem found while loading a policy."""

    def __init__(self, errors: list[PolicyError]) -> None:
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = errors


@dataclass(frozen=True)
class ResourceLimits:
    wall_clock_timeout: int = 2000  # ms
    max_total_steps: int = 5_000_000
    max_loop_iterations: int = 1_000_000
    max_nested_loop_depth: int = 4
    max_stack_depth: int = 64
    max_collection_size: int = 1_000_000
    max_int_magnitude: int = 4300  # decimal digits
    max_tool_calls: int = 0

    def to_json_obj(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


LIMIT_NAMES = tuple(f.name for f in fields(ResourceLimits))


@dataclass(frozen=True)
class ToolSpec:
    name: str
    params: tuple[tuple[str, str], ...] = ()
    required_count: int | None = None
    timeout: int = 1000  # ms
    max_retries: int = 2
    backoff_base: int = 100  # ms
    description: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(tuple(p) for p in self.params))
        if self.required_count is None:
            object.__setattr__(self, "required_count", len(self.params))

    @property
    def signature(self) -> str:
        inner = ", ".join(f"{name}: {tag}" for name, tag in self.params)
        return f"{self.name}({inner})"

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "params": [{"name": n, "type": t} for n, t in self.params],
            "required_count": self.required_count,
            "timeout": self.timeout,
            "max_retries": self.max_retries,
            "backoff_base": self.backoff_base,
            "description": self.description,
        }


def tool_spec_problems(spec: ToolSpec) -> list[str]:
    problems = []
    where = f"tool '{spec.name}'"
    if not isinstance(spec.name, str) or not _IDENT.match(spec.name):
        problems.append(f"{where}: name must be an identifier")
    names = [p[0] for p in spec.params]
    if len(set(names)) != len(names):
        problems.append(f"{where}: parameter names must be unique")
    for pname, tag in spec.params:
        if not isinstance(pname, str) or not _IDENT.match(pname):
            problems.append(f"{where}: parameter name {pname!r} is not an identifier")
        if tag not in TYPE_TAGS:
            problems.append(f"{where}: parameter '{pname}' has unknown type tag {tag!r}")
    if not isinstance(spec.required_count, int) or not 0 <= spec.required_count <= len(spec.params):
        problems.append(f"{where}: required_count must be between 0 and the number of params")
    if not _is_int(spec.timeout) or spec.timeout <= 0:
        problems.append(f"{where}: timeout must be positive")
    if not _is_int(spec.max_retries) or spec.max_retries < 0:
        problems.append(f"{where}: max_retries must be non-negative")
    if not _is_int(spec.backoff_base) or spec.backoff_base < 0:
        problems.append(f"{where}: backoff_base must be non-negative")
    return problems


def parse_tool_signature(text: str) -> ToolSpec:
    """Build a ToolSpec from ``"name(param: tag, ...)"``."""
    m = _SIGNATURE.match(text)
    if not m:
        raise PolicyError(f"tool signature {text!r} is not of the form name(param: type, ...)")
    name, inner = m.group(1), m.group(2).strip()
    params = []
    if inner:
        for part in inner.split(","):
            pname, sep, tag = part.partition(":")
            pname = pname.strip()
            tag = tag.strip() if sep else "any"
            params.append((pname, tag))
    return ToolSpec(name=name, params=tuple(params))


@dataclass(frozen=True)
class PolicyConfig:
    allowed_node_kinds: frozenset[NodeKind] = POLICY_KINDS
    allowed_builtins: frozenset[str] = frozenset()
    allowed_imports: frozenset[str] = frozenset()
    allowed_dunder_access: bool = False
    tools: tuple[ToolSpec, ...] = ()
    limits: ResourceLimits = field(default_factory=ResourceLimits)
    policy_id: str = "custom"
    # Overrides for the import -> risk category table used in reports.
    import_categories: tuple[tuple[str, RiskCategory], ...] = ()
    # Exception kinds reported as Failed rather than Blocked.
    failed_kinds: frozenset[ExceptionKind] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "tools", tuple(sorted(self.tools, key=lambda t: t.name)))
        object.__setattr__(self, "import_categories", tuple(sorted(self.import_categories)))

    @property
    def tool_names(self) -> frozenset[str]:
        return frozenset(t.name for t in self.tools)

    def tool(self, name: str) -> ToolSpec | None:
        for spec in self.tools:
            if spec.name == name:
                return spec
        return None

    def import_category_table(self) -> dict[str, RiskCategory]:
        table = dict(DEFAULT_IMPORT_CATEGORIES)
        table.update(dict(self.import_categories))
        return table

    def with_tools(self, *specs: ToolSpec, policy_id: str | None = None) -> PolicyConfig:
        return replace(self, tools=self.tools + tuple(specs),
                       policy_id=policy_id or self.policy_id)


def validate_policy(policy: PolicyConfig) -> list[PolicyError]:
    """Every invariant violation of an in-memory policy."""
    errors = []
    if NodeKind.Module not in policy.allowed_node_kinds:
        errors.append(PolicyError("allowed_node_kinds must include Module"))
    names = [t.name for t in policy.tools]
    for name in sorted({n for n in names if names.count(n) > 1}):
        errors.append(PolicyError(f"duplicate tool '{name}'"))
    for name in sorted(set(names) & policy.allowed_builtins):
        errors.append(PolicyError(f"tool '{name}' clashes with an allowed builtin"))
    for spec in policy.tools:
        errors.extend(PolicyError(p) for p in tool_spec_problems(spec))
    for name in sorted(policy.allowed_builtins - SUPPORTED_BUILTINS):
        errors.append(PolicyError(f"allowed_builtins: '{name}' has no sandboxed implementation"))
    for name in sorted(policy.allowed_imports - SUPPORTED_MODULES):
        errors.append(PolicyError(f"allowed_imports: '{name}' has no sandboxed implementation"))
    for name in LIMIT_NAMES:
        value = getattr(policy.limits, name)
        if not _is_int(value):
            errors.append(PolicyError(f"limits.{name} must be an integer"))
        elif name == "max_tool_calls":
            # zero is meaningful: the program may not call tools at all
            if value < 0:
                errors.append(PolicyError(f"limits.{name} must be non-negative"))
        elif value <= 0:
            errors.append(PolicyError(f"limits.{name} must be positive"))
    if not policy.policy_id:
        errors.append(PolicyError("policy_id must be non-empty"))
    return errors


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


_KNOWN_KEYS = (
    "allowed_node_kinds", "allowed_builtins", "allowed_imports",
    "allowed_dunder_access", "tools", "limits", "policy_id",
    "import_categories", "failed_kinds",
)
_TOOL_KEYS = {f.name for f in fields(ToolSpec)}


def _string_set(data: dict, key: str, errors: list[PolicyError]) -> frozenset[str] | None:
    value = data[key]
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        errors.append(PolicyError(f"{key} must be a list of strings"))
        return None
    return frozenset(value)


def _load_tool(raw: Any, index: int, errors: list[PolicyError]) -> ToolSpec | None:
    if isinstance(raw, str):
        try:
            spec = parse_tool_signature(raw)
        except PolicyError as exc:
            errors.append(PolicyError(f"tools[{index}]: {exc}"))
            return None
        problems = tool_spec_problems(spec)
        errors.extend(PolicyError(p) for p in problems)
        return None if problems else spec
    if not isinstance(raw, dict):
        errors.append(PolicyError(f"tools[{index}] must be an object or a signature string"))
        return None
    unknown = sorted(set(raw) - _TOOL_KEYS)
    for key in unknown:
        errors.append(PolicyError(f"tools[{index}]: unknown key '{key}'"))
    if "name" not in raw:
        errors.append(PolicyError(f"tools[{index}]: missing name"))
        return None
    params = []
    for p in raw.get("params", []):
        if isinstance(p, dict) and set(p) <= {"name", "type"} and "name" in p:
            params.append((p["name"], p.get("type", "any")))
        elif isinstance(p, (list, tuple)) and len(p) == 2:
            params.append((p[0], p[1]))
        elif isinstance(p, str):
            pname, sep, tag = p.partition(":")
            params.append((pname.strip(), tag.strip() if sep else "any"))
        else:
            errors.append(PolicyError(f"tools[{index}]: malformed parameter {p!r}"))
            return None
    kwargs = {k: v for k, v in raw.items() if k in _TOOL_KEYS and k != "params"}
    spec = ToolSpec(params=tuple(params), **kwargs)
    problems = tool_spec_problems(spec)
    if problems:
        errors.extend(PolicyError(p) for p in problems)
        return None
    return spec


def load_policy(text: str) -> PolicyConfig:
    """Parse policy JSON; raises PolicyLoadError listing every problem.

    Unspecified keys take the values of the bundled evaluation policy
    (except ``policy_id``, which defaults to ``"custom"``).
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PolicyLoadError([PolicyError(f"policy is not valid JSON: {exc}")]) from None
    if not isinstance(data, dict):
        raise PolicyLoadError([PolicyError("policy must be a JSON object")])
    errors: list[PolicyError] = []
    for key in sorted(set(data) - set(_KNOWN_KEYS)):
        errors.append(PolicyError(f"unknown key '{key}'"))

    base = default_eval_policy()
    kwargs: dict[str, Any] = {"policy_id": "custom"}

    if "allowed_node_kinds" in data:
        names = _string_set(data, "allowed_node_kinds", errors)
        if names is not None:
            kinds = set()
            for name in sorted(names):
                try:
                    kinds.add(NodeKind(name))
                except ValueError:
                    errors.append(PolicyError(f"unknown NodeKind '{name}'"))
            kwargs["allowed_node_kinds"] = frozenset(kinds)
    for key in ("allowed_builtins", "allowed_imports"):
        if key in data:
            names = _string_set(data, key, errors)
            if names is not None:
                kwargs[key] = names
    if "allowed_dunder_access" in data:
        if isinstance(data["allowed_dunder_access"], bool):
            kwargs["allowed_dunder_access"] = data["allowed_dunder_access"]
        else:
            errors.append(PolicyError("allowed_dunder_access must be a boolean"))
    if "policy_id" in data:
        if isinstance(data["policy_id"], str):
            kwargs["policy_id"] = data["policy_id"]
        else:
            errors.append(PolicyError("policy_id must be a string"))

    if "tools" in data:
        if not isinstance(data["tools"], list):
            errors.append(PolicyError("tools must be a list"))
        else:
            tools = [_load_tool(raw, i, errors) for i, raw in enumerate(data["tools"])]
            kwargs["tools"] = tuple(t for t in tools if t is not None)

    if "limits" in data:
        raw = data["limits"]
        if not isinstance(raw, dict):
            errors.append(PolicyError("limits must be an object"))
        else:
            for key in sorted(set(raw) - set(LIMIT_NAMES)):
                errors.append(PolicyError(f"unknown key 'limits.{key}'"))
            values = {k: v for k, v in raw.items() if k in LIMIT_NAMES}
            kwargs["limits"] = replace(base.limits, **values)

    if "import_categories" in data:
        raw = data["import_categories"]
        if not isinstance(raw, dict):
            errors.append(PolicyError("import_categories must be an object"))
        else:
            pairs = []
            for module, cat in sorted(raw.items()):
                try:
                    pairs.append((module, RiskCategory(cat)))
                except ValueError:
                    errors.append(PolicyError(f"import_categories: unknown category '{cat}'"))
            kwargs["import_categories"] = tuple(pairs)
    if "failed_kinds" in data:
        names = _string_set(data, "failed_kinds", errors)
        if names is not None:
            kinds = set()
            for name in sorted(names):
                try:
                    kinds.add(ExceptionKind(name))
                except ValueError:
                    errors.append(PolicyError(f"failed_kinds: unknown exception kind '{name}'"))
            kwargs["failed_kinds"] = frozenset(kinds)

    for key in ("allowed_node_kinds", "allowed_builtins", "allowed_imports", "limits"):
        kwargs.setdefault(key, getattr(base, key))
    policy = PolicyConfig(**kwargs)
    errors.extend(validate_policy(policy))
    if errors:
        raise PolicyLoadError(_dedupe(errors))
    return policy


def _dedupe(errors: list[PolicyError]) -> list[PolicyError]:
    seen: set[str] = set()
    out = []
    for e in errors:
        if str(e) not in seen:
            seen.add(str(e))
            out.append(e)
    return out


def policy_to_json_obj(policy: PolicyConfig) -> dict[str, Any]:
    obj: dict[str, Any] = {
        "policy_id": policy.policy_id,
        "allowed_node_kinds": sorted(k.value for k in policy.allowed_node_kinds),
        "allowed_builtins": sorted(policy.allowed_builtins),
        "allowed_imports": sorted(policy.allowed_imports),
        "allowed_dunder_access": policy.allowed_dunder_access,
        "tools": [t.to_json_obj() for t in sorted(policy.tools, key=lambda t: t.name)],
        "limits": policy.limits.to_json_obj(),
    }
    if policy.import_categories:
        obj["import_categories"] = {m: c.value for m, c in policy.import_categories}
    if policy.failed_kinds:
        obj["failed_kinds"] = sorted(k.value for k in policy.failed_kinds)
    return obj


def serialize_policy(policy: PolicyConfig) -> str:
    """Canonical text: sorted collections, fixed key order, trailing newline."""
    return json.dumps(policy_to_json_obj(policy), indent=2, ensure_ascii=False) + "\n"


def default_eval_policy() -> PolicyConfig:
    return PolicyConfig(
        allowed_node_kinds=POLICY_KINDS,
        allowed_builtins=frozenset({
            "print", "len", "range", "abs", "min", "max", "sum", "sorted",
            "enumerate", "zip", "int", "float", "str", "bool", "list", "dict",
            "set", "tuple", "round", "isinstance",
        }),
        allowed_imports=frozenset({"math", "string"}),
        allowed_dunder_access=False,
        tools=(),
        limits=ResourceLimits(),
        policy_id="eval-default",
    )


def load_policy_file(path: str) -> PolicyConfig:
    with open(path, encoding="utf-8") as fh:
        return load_policy(fh.read())
