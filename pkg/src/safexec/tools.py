"""Declared tools: argument checks, bounded attempts, retries with backoff.

A ``ToolRegistry`` binds each declared ``ToolSpec`` to a handler and routes
every call through a transport.  The transport performs one attempt and
reports ``ok``, ``timeout`` or ``error``; the registry owns retries, backoff
delays, the per-execution call budget and the trace record.

Handlers are assumed idempotent: a retried call may repeat side effects.
"""

from __future__ import annotations

import json
import re
import socket
import socketserver
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

from .categories import ExceptionKind
from .executor.errors import GuardError
from .executor.values import render_truncated
from .policy import ToolSpec

EK = ExceptionKind

Handler = Callable[..., Any]

OK, TIMEOUT, ERROR = "ok", "timeout", "error"


class ToolRegistrationError(ValueError):
    pass


class ArgError(Exception):
    """Arguments that do not fit a tool's declared parameters."""

    kind = "InvalidArguments"

    def __init__(self, tool: str, slot: str | None, reason: str) -> None:
        where = f" slot '{slot}'" if slot else ""
        super().__init__(f"invalid arguments for tool '{tool}'{where}: {reason}")
        self.tool = tool
        self.slot = slot
        self.reason = reason


# -- clocks ----------------------------------------------------------------

class Clock(Protocol):
    def now_ms(self) -> float: ...
    def sleep_ms(self, ms: float) -> None: ...


class SystemClock:
    def now_ms(self) -> float:
        return time.monotonic() * 1000.0

    def sleep_ms(self, ms: float) -> None:
        if ms > 0:
            time.sleep(ms / 1000.0)


class StubClock:
    """Manually advanced clock; sleeping just moves time forward."""

    def __init__(self, start_ms: float = 0.0) -> None:
        self.t = start_ms
        self.sleeps: list[float] = []

    def now_ms(self) -> float:
        return self.t

    def sleep_ms(self, ms: float) -> None:
        self.sleeps.append(ms)
        self.t += max(ms, 0)

    def advance(self, ms: float) -> None:
        self.t += ms


# -- transports ------------------------------------------------------------

@dataclass(frozen=True)
class Attempt:
    outcome: str  # ok | timeout | error
    value: Any = None
    reason: str = ""


class ToolTransport(Protocol):
    def attempt(self, spec: ToolSpec, handler: Handler | None, args: list, timeout_ms: float) -> Attempt: ...


class InProcessTransport:
    """Runs each attempt on a daemon thread and stops waiting at the timeout.

    A timed-out handler keeps running in the background; its result is
    discarded, so the caller never observes a partial value.
    """

    def attempt(self, spec: ToolSpec, handler: Handler | None, args: list, timeout_ms: float) -> Attempt:
        if handler is None:
            return Attempt(ERROR, reason=f"no handler bound for '{spec.name}'")
        box: dict[str, Any] = {}

        def run() -> None:
            try:
                box["value"] = handler(*args)
            except Exception as exc:  # handler failures become attempt errors
                box["error"] = f"{type(exc).__name__}: {exc}"

        worker = threading.Thread(target=run, name=f"tool-{spec.name}", daemon=True)
        worker.start()
        worker.join(max(timeout_ms, 0) / 1000.0)
        if worker.is_alive():
            return Attempt(TIMEOUT, reason=f"no response within {timeout_ms:g} ms")
        if "error" in box:
            return Attempt(ERROR, reason=box["error"])
        return Attempt(OK, value=box.get("value"))


class ScriptedTransport:
    """Replays a fixed list of attempt behaviors, advancing a stub clock.

    Each step is ``{"outcome": "ok"|"timeout"|"error", "value"?, "delay_ms"?}``.
    An ``ok`` step whose delay exceeds the attempt timeout is a timeout.
    """

    def __init__(self, steps: list[dict[str, Any]], clock: StubClock | None = None) -> None:
        for i, step in enumerate(steps):
            if step.get("outcome") not in (OK, TIMEOUT, ERROR):
                raise ValueError(f"step {i}: outcome must be ok, timeout or error")
        self.steps = list(steps)
        self.clock = clock
        self.position = 0

    @classmethod
    def from_json(cls, text: str, clock: StubClock | None = None) -> ScriptedTransport:
        return cls(json.loads(text), clock)

    def attempt(self, spec: ToolSpec, handler: Handler | None, args: list, timeout_ms: float) -> Attempt:
        if self.position >= len(self.steps):
            return Attempt(ERROR, reason="script exhausted")
        step = self.steps[self.position]
        self.position += 1
        delay = float(step.get("delay_ms", 0))
        outcome = step["outcome"]
        if outcome == TIMEOUT or delay > timeout_ms:
            self._advance(timeout_ms)
            return Attempt(TIMEOUT, reason=f"no response within {timeout_ms:g} ms")
        self._advance(delay)
        if outcome == ERROR:
            return Attempt(ERROR, reason=str(step.get("reason", "scripted error")))
        return Attempt(OK, value=step.get("value"))

    def _advance(self, ms: float) -> None:
        if self.clock is not None:
            self.clock.advance(ms)


class SocketTransport:
    """Example out-of-process transport: one JSON line per call over TCP.

    The peer is a ``ToolServer`` (or anything speaking the same protocol):
    request ``{"tool": name, "args": [...]}``, reply ``{"ok": true, "value": v}``
    or ``{"ok": false, "error": text}``.
    """

    def __init__(self, host: str, port: int) -> None:
        self.address = (host, port)

    def attempt(self, spec: ToolSpec, handler: Handler | None, args: list, timeout_ms: float) -> Attempt:
        request = json.dumps({"tool": spec.name, "args": args}).encode("utf-8") + b"\n"
        try:
            with socket.create_connection(self.address, timeout=max(timeout_ms, 1) / 1000.0) as conn:
                conn.sendall(request)
                data = b""
                while not data.endswith(b"\n"):
                    chunk = conn.recv(65536)
                    if not chunk:
                        break
                    data += chunk
        except socket.timeout:
            return Attempt(TIMEOUT, reason=f"no response within {timeout_ms:g} ms")
        except OSError as exc:
            return Attempt(ERROR, reason=f"transport: {exc}")
        try:
            reply = json.loads(data.decode("utf-8"))
        except ValueError:
            return Attempt(ERROR, reason="malformed reply")
        if reply.get("ok"):
            return Attempt(OK, value=reply.get("value"))
        return Attempt(ERROR, reason=str(reply.get("error", "remote error")))


class ToolServer:
    """Threaded TCP worker serving handlers for ``SocketTransport``."""

    def __init__(self, handlers: dict[str, Handler], host: str = "127.0.0.1", port: int = 0) -> None:
        outer = self

        class _Handler(socketserver.StreamRequestHandler):
            def handle(self) -> None:
                line = self.rfile.readline()
                try:
                    request = json.loads(line.decode("utf-8"))
                    fn = outer.handlers[request["tool"]]
                    reply = {"ok": True, "value": fn(*request.get("args", []))}
                except Exception as exc:  # reported to the caller, never raised here
                    reply = {"ok": False, "error": f"{type(exc).__name__}: {exc}"}
                self.wfile.write(json.dumps(reply).encode("utf-8") + b"\n")

        self.handlers = dict(handlers)
        self.server = socketserver.ThreadingTCPServer((host, port), _Handler)
        self.server.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self.server.server_address[:2]

    def start(self) -> ToolServer:
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.server.shutdown()
        self.server.server_close()


# -- records ---------------------------------------------------------------

@dataclass
class ToolCallRecord:
    tool: str
    args_rendered: list[str]
    attempts: int = 0
    per_attempt: list[tuple[float, str]] = field(default_factory=list)
    backoff_delays: list[int] = field(default_factory=list)
    final: dict[str, Any] = field(default_factory=dict)

    @property
    def succeeded(self) -> bool:
        return self.final.get("status") == "success"

    def to_json_obj(self, include_timing: bool = True) -> dict[str, Any]:
        return {
            "tool": self.tool,
            "args_rendered": list(self.args_rendered),
            "attempts": self.attempts,
            "per_attempt": [
                {"elapsed_ms": round(ms, 3) if include_timing else None, "outcome": outcome}
                for ms, outcome in self.per_attempt
            ],
            "backoff_delays": list(self.backoff_delays),
            "final": dict(self.final),
        }


_SENSITIVE = re.compile(r"pass(word|wd)?|secret|token|api_?key|auth|credential", re.I)


def redact_by_name(param: str, rendered: str) -> str:
    """Default redaction hook: hide values of parameters with sensitive names."""
    return "<redacted>" if _SENSITIVE.search(param) else rendered


# -- argument checks -------------------------------------------------------

def tag_matches(tag: str, value: Any) -> bool:
    t = type(value)
    if tag == "any":
        return True
    if tag == "int":
        return t is int
    if tag == "float":
        return t is float or t is int
    if tag == "bool":
        return t is bool
    if tag == "string":
        return t is str
    if tag == "list":
        return t is list
    if tag == "dict":
        return t is dict
    return False


_TAG_NAMES = {"string": "str"}


def check_args(spec: ToolSpec, args: list) -> None:
    """Raise ArgError naming the first slot that does not fit."""
    params = spec.params
    required = spec.required_count if spec.required_count is not None else len(params)
    if len(args) < required:
        slot = params[len(args)][0] if len(args) < len(params) else None
        raise ArgError(spec.name, slot, f"missing required argument ({len(args)} given, {required} required)")
    if len(args) > len(params):
        raise ArgError(spec.name, None, f"too many arguments ({len(args)} given, at most {len(params)})")
    for (name, tag), value in zip(params, args):
        if not tag_matches(tag, value):
            from .executor.values import type_name
            raise ArgError(spec.name, name, f"expected {_TAG_NAMES.get(tag, tag)}, got {type_name(value)}")


def bind_keywords(spec: ToolSpec, args: list, kwargs: dict) -> list:
    """Fold keyword arguments into positional order."""
    if not kwargs:
        return list(args)
    names = [p[0] for p in spec.params]
    slots: list[Any] = list(args) + [_UNSET] * (len(names) - len(args))
    for key, value in kwargs.items():
        if key not in names:
            raise ArgError(spec.name, key, "unknown parameter")
        index = names.index(key)
        if index < len(args):
            raise ArgError(spec.name, key, "given both positionally and by keyword")
        slots[index] = value
    while slots and slots[-1] is _UNSET:
        slots.pop()
    for name, value in zip(names, slots):
        if value is _UNSET:
            raise ArgError(spec.name, name, "missing required argument")
    return slots


_UNSET = object()


def import_result(value: Any, depth: int = 0) -> Any:
    """Copy a tool result into sandbox values; reject anything else."""
    if depth > 100:
        raise ValueError("tool result nested too deeply")
    t = type(value)
    if value is None or t in (int, float, bool, str):
        return value
    if t in (list, tuple):
        items = [import_result(v, depth + 1) for v in value]
        return items if t is list else tuple(items)
    if t is dict:
        out = {}
        for k, v in value.items():
            if type(k) not in (int, float, bool, str, tuple) and k is not None:
                raise ValueError(f"unsupported key type {type(k).__name__} in tool result")
            out[import_result(k, depth + 1)] = import_result(v, depth + 1)
        return out
    if t in (set, frozenset):
        return t(import_result(v, depth + 1) for v in value)
    raise ValueError(f"unsupported tool result type {t.__name__}")


# -- registry --------------------------------------------------------------

class ToolRegistry:
    def __init__(self, transport: ToolTransport | None = None, clock: Clock | None = None,
                 redact: Callable[[str, str], str] = redact_by_name) -> None:
        self.specs: dict[str, ToolSpec] = {}
        self.handlers: dict[str, Handler | None] = {}
        self.transport: ToolTransport = transport or InProcessTransport()
        self.clock: Clock = clock or SystemClock()
        self.redact = redact

    def register_tool(self, spec: ToolSpec, handler: Handler | None = None) -> None:
        if spec.name in self.specs:
            raise ToolRegistrationError(f"tool '{spec.name}' is already registered")
        self.specs[spec.name] = spec
        self.handlers[spec.name] = handler

    def __contains__(self, name: str) -> bool:
        return name in self.specs

    @property
    def names(self) -> frozenset[str]:
        return frozenset(self.specs)

    def render_args(self, spec: ToolSpec, args: list) -> list[str]:
        names = [p[0] for p in spec.params]
        return [self.redact(names[i] if i < len(names) else f"arg{i}", render_truncated(a))
                for i, a in enumerate(args)]

    def invoke(self, name: str, args: list, kwargs: dict, ctx, span) -> Any:
        """Run one tool call for an executing program.

        ``ctx`` supplies ``tool_call_count``, ``limits``, ``tool_trace`` and
        ``remaining_ms()``; failures surface as GuardError.
        """
        spec = self.specs[name]
        try:
            args = bind_keywords(spec, args, kwargs)
            check_args(spec, args)
        except ArgError as exc:
            raise GuardError(EK.TypeError, str(exc), span) from None
        if ctx.tool_call_count >= ctx.limits.max_tool_calls:
            raise GuardError(EK.ToolError,
                             f"tool call budget of {ctx.limits.max_tool_calls} exhausted before '{name}'", span)
        ctx.tool_call_count += 1
        record = ToolCallRecord(tool=name, args_rendered=self.render_args(spec, args))
        ctx.tool_trace.append(record)
        try:
            value = self._attempts(spec, args, record, ctx)
        except GuardError as exc:
            exc.span = exc.span or span
            exc.tool_record = record
            raise
        try:
            value = import_result(value)
            ctx.check_value_deep(value, span)
        except ValueError as exc:
            record.final = {"status": "failure", "reason": f"handler-error: {exc}"}
            err = GuardError(EK.ToolError, f"tool '{name}' returned an unusable result: {exc}", span)
            err.tool_record = record
            raise err from None
        return value

    def _attempts(self, spec: ToolSpec, args: list, record: ToolCallRecord, ctx) -> Any:
        handler = self.handlers.get(spec.name)
        last: Attempt | None = None
        for k in range(spec.max_retries + 1):
            remaining = ctx.remaining_ms()
            if remaining <= 0:
                record.final = {"status": "failure", "reason": "deadline"}
                raise GuardError(EK.TimeoutException,
                                 f"execution time limit reached while calling tool '{spec.name}'")
            if k > 0:
                delay = spec.backoff_base * 2 ** (k - 1)
                record.backoff_delays.append(delay)
                self.clock.sleep_ms(min(delay, remaining))
                remaining = max(ctx.remaining_ms(), 0)
            budget = min(spec.timeout, remaining)
            started = self.clock.now_ms()
            last = self.transport.attempt(spec, handler, list(args), budget)
            record.attempts += 1
            record.per_attempt.append((self.clock.now_ms() - started, last.outcome))
            if last.outcome == OK:
                record.final = {"status": "success", "value": render_truncated(last.value)}
                return last.value
            if last.outcome == TIMEOUT and budget < spec.timeout:
                record.final = {"status": "failure", "reason": "deadline"}
                raise GuardError(EK.TimeoutException,
                                 f"execution time limit reached while calling tool '{spec.name}'")
        assert last is not None
        if spec.max_retries == 0:
            reason = "timeout" if last.outcome == TIMEOUT else "handler-error"
        else:
            reason = "retries-exhausted"
        detail = last.reason or last.outcome
        record.final = {"status": "failure", "reason": reason, "detail": detail}
        if reason == "retries-exhausted":
            message = (f"tool '{spec.name}' failed after {record.attempts} attempts, "
                       f"maximum retries reached (last: {detail})")
        elif reason == "timeout":
            message = f"tool '{spec.name}' timed out after {spec.timeout} ms"
        else:
            message = f"tool '{spec.name}' raised an error: {detail}"
        raise GuardError(EK.ToolError, message)


def registry_for(policy, handlers: dict[str, Handler] | None = None,
                 transport: ToolTransport | None = None, clock: Clock | None = None) -> ToolRegistry:
    """Registry with every tool declared by ``policy``; unmatched tools get no handler."""
    registry = ToolRegistry(transport=transport, clock=clock)
    handlers = handlers or {}
    for spec in policy.tools:
        registry.register_tool(spec, handlers.get(spec.name))
    return registry
