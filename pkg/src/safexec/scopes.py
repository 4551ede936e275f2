"""Static name-binding analysis shared by the validator and the interpreter.

Scopes follow the host language: the module, each function or lambda, and
each comprehension.  The iterable of a comprehension belongs to the
enclosing scope.  Every binding records the source position where it
appears so callers can apply a source-order rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .frontend.nodes import AstNode, NodeKind, SyntaxTree

K = NodeKind
SCOPE_KINDS = frozenset({K.Module, K.FunctionDef, K.Lambda, K.ListComp, K.DictComp})

Position = tuple[int, int]


@dataclass(eq=False)
class Scope:
    node: AstNode
    parent: Scope | None
    bindings: dict[str, list[Position]] = field(default_factory=dict)

    def bind(self, name: str, pos: Position) -> None:
        self.bindings.setdefault(name, []).append(pos)

    @property
    def local_names(self) -> frozenset[str]:
        return frozenset(self.bindings)

    def resolve(self, name: str) -> Scope | None:
        """Nearest scope (self included) that binds ``name`` anywhere."""
        scope: Scope | None = self
        while scope is not None:
            if name in scope.bindings:
                return scope
            scope = scope.parent
        return None


@dataclass
class ScopeInfo:
    module: Scope
    # id(scope-owning node) -> Scope
    by_node: dict[int, Scope]
    # (Call node, the scope in which its callee name is looked up)
    calls: list[tuple[AstNode, Scope]]
    all_bound: frozenset[str]

    def scope_for(self, node: AstNode) -> Scope:
        return self.by_node[id(node)]


def _bind_target(scope: Scope, target: AstNode) -> None:
    if target.kind is K.Name:
        scope.bind(target.payload, target.span.start)
    elif target.kind in (K.Tuple, K.List):
        for child in target.children:
            _bind_target(scope, child)


def analyze(tree: SyntaxTree | AstNode) -> ScopeInfo:
    root = tree.root if isinstance(tree, SyntaxTree) else tree
    module = Scope(root, None)
    by_node = {id(root): module}
    calls: list[tuple[AstNode, Scope]] = []
    # explicit stack: (node, scope the node is evaluated in)
    stack: list[tuple[AstNode, Scope]] = [(child, module) for child in reversed(root.children)]
    while stack:
        node, scope = stack.pop()
        kind = node.kind
        ch = node.children
        if kind is K.FunctionDef:
            scope.bind(node.payload, node.span.start)
            inner = Scope(node, scope)
            by_node[id(node)] = inner
            arguments, body = ch
            for param in arguments.children:
                if param.kind is K.Param:
                    inner.bind(param.payload, node.span.start)
            # annotations are never evaluated; skip them
            stack.extend((c, inner) for c in reversed(body.children))
            continue
        if kind is K.Lambda:
            inner = Scope(node, scope)
            by_node[id(node)] = inner
            for param in ch[0].children:
                inner.bind(param.payload, node.span.start)
            stack.append((ch[1], inner))
            continue
        if kind in (K.ListComp, K.DictComp):
            inner = Scope(node, scope)
            by_node[id(node)] = inner
            comp = ch[-1]
            target, iterable = comp.children[0], comp.children[1]
            for name_node in target.walk():
                if name_node.kind is K.Name:
                    inner.bind(name_node.payload, node.span.start)
            stack.append((iterable, scope))
            rest = list(ch[:-1]) + list(comp.children[2:])
            stack.extend((c, inner) for c in reversed(rest))
            continue
        if kind is K.Assign:
            for target in ch[:-1]:
                _bind_target(scope, target)
        elif kind is K.AugAssign:
            _bind_target(scope, ch[0])
        elif kind is K.For:
            _bind_target(scope, ch[0])
        elif kind is K.Import:
            for alias in ch:
                name, asname = alias.payload
                scope.bind(asname or name.split(".", 1)[0], alias.span.start)
        elif kind is K.ImportFrom:
            for alias in ch:
                name, asname = alias.payload
                scope.bind(asname or name, alias.span.start)
        elif kind is K.Call:
            calls.append((node, scope))
        stack.extend((c, scope) for c in reversed(ch))

    all_bound = frozenset(name for scope in by_node.values() for name in scope.bindings)
    return ScopeInfo(module, by_node, calls, all_bound)
