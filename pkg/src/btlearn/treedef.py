"""Declarative tree documents (``.bt3.json``): parse, validate, serialize, build.

A document looks like::

    {
      "title": "demo",
      "root": "n1",
      "nodes": {
        "n1": {"id": "n1", "name": "Sequence", "children": ["n2", "n3"], "properties": {}},
        "n2": {"id": "n2", "name": "HasFire", "properties": {}},
        ...
      }
    }

Composites list ``children``, decorators name a single ``child``, leaves have
neither. ``name`` is the registered node kind.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from . import core
from .core import BehaviorTree, Category, Node
from .learning import LearningActionNode, LearningCompositeNode, status_reward
from .rl import LearnerParams

Scalar = int | float | str | bool

# error codes
SYNTAX = "E_SYNTAX"
SCHEMA = "E_SCHEMA"
DUPLICATE_ID = "E_DUPLICATE_ID"
ID_MISMATCH = "E_ID_MISMATCH"
UNKNOWN_KIND = "E_UNKNOWN_KIND"
MISSING_ROOT = "E_MISSING_ROOT"
DANGLING_REFERENCE = "E_DANGLING_REFERENCE"
MULTI_PARENT = "E_MULTI_PARENT"
CYCLE = "E_CYCLE"
UNREACHABLE = "E_UNREACHABLE"
ARITY = "E_ARITY"
UNREGISTERED_KIND = "E_UNREGISTERED_KIND"
PROPERTY_TYPE = "E_PROPERTY_TYPE"
MISSING_PROPERTY = "E_MISSING_PROPERTY"
INVALID_PROPERTY = "E_INVALID_PROPERTY"
UNKNOWN_BINDING = "E_UNKNOWN_BINDING"


class TreeDefError(ValueError):
    def __init__(self, code: str, message: str, node_id: str | None = None):
        self.code = code
        self.node_id = node_id
        super().__init__(f"[{code}] {message}")


@dataclass(frozen=True)
class NodeSpec:
    id: str
    kind: str
    title: str | None = None
    children: tuple[str, ...] = ()
    properties: Mapping[str, Scalar] = field(default_factory=dict)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NodeSpec):
            return NotImplemented
        return (self.id, self.kind, self.title, self.children, dict(self.properties)) == (
            other.id, other.kind, other.title, other.children, dict(other.properties))

    def __hash__(self) -> int:
        return hash((self.id, self.kind, self.title, self.children))


@dataclass
class TreeDocument:
    title: str
    root_id: str
    nodes: dict[str, NodeSpec]


# -- node catalog -----------------------------------------------------------


@dataclass
class Bindings:
    """Named callables that documents refer to from node properties."""

    states: dict[str, Callable[[Any], Any]] = field(default_factory=dict)
    rewards: dict[str, Callable[[Any, core.Status], float]] = field(default_factory=dict)
    # executor factories receive the node's action labels
    executors: dict[str, Callable[[list[str]], Callable[[Any, int], core.Status]]] = field(
        default_factory=dict)
    actions: dict[str, Callable[[Any], core.Status]] = field(default_factory=dict)
    conditions: dict[str, Callable[[Any], bool]] = field(default_factory=dict)
    params: Callable[[str], LearnerParams] = lambda node_id: LearnerParams()
    rng: Callable[[str], random.Random] = lambda node_id: random.Random(0)

    def lookup(self, table: str, name: str, node_id: str) -> Any:
        found = getattr(self, table).get(name)
        if found is None:
            raise TreeDefError(UNKNOWN_BINDING, f"node {node_id!r}: no {table[:-1]} named {name!r}",
                               node_id)
        return found


Factory = Callable[[NodeSpec, list[Node], Bindings], Node]


@dataclass
class NodeType:
    kind: str
    category: Category
    factory: Factory
    # property name -> (accepted types, required)
    properties: dict[str, tuple[tuple[type, ...], bool]] = field(default_factory=dict)


class Registry(dict):
    def register(self, kind: str, category: Category, factory: Factory,
                 **properties: tuple[tuple[type, ...], bool]) -> None:
        self[kind] = NodeType(kind, category, factory, properties)

    def categories(self) -> dict[str, Category]:
        return {k: t.category for k, t in self.items()}

    def copy(self) -> "Registry":
        r = Registry()
        r.update(self)
        return r


INT = (int,)
NUM = (int, float)
STR = (str,)


def _plain(cls: type[Node]) -> Factory:
    return lambda spec, children, b: cls(spec.id, children, title=spec.title)


def _parallel(spec: NodeSpec, children: list[Node], b: Bindings) -> Node:
    try:
        return core.Parallel(spec.id, children, spec.properties.get("success", 1),
                             spec.properties.get("failure", 1), title=spec.title)
    except ValueError as exc:
        raise TreeDefError(INVALID_PROPERTY, str(exc), spec.id) from None


def _repeater(spec: NodeSpec, children: list[Node], b: Bindings) -> Node:
    try:
        return core.Repeater(spec.id, children, spec.properties.get("count", 1), title=spec.title)
    except ValueError as exc:
        raise TreeDefError(INVALID_PROPERTY, str(exc), spec.id) from None


def _action(spec: NodeSpec, children: list[Node], b: Bindings) -> Node:
    fn = b.lookup("actions", spec.properties["action"], spec.id)
    return core.Action(spec.id, fn, title=spec.title)


def _condition(spec: NodeSpec, children: list[Node], b: Bindings) -> Node:
    fn = b.lookup("conditions", spec.properties["condition"], spec.id)
    return core.Condition(spec.id, fn, title=spec.title)


def _learning_composite(spec: NodeSpec, children: list[Node], b: Bindings) -> Node:
    props = spec.properties
    extract = b.lookup("states", props["state"], spec.id)
    if "reward" in props:
        reward = b.lookup("rewards", props["reward"], spec.id)
    else:
        reward = status_reward(props.get("reward_success", 10), props.get("reward_failure", 10))
    return LearningCompositeNode(spec.id, children, extract, reward, b.params(spec.id),
                                 b.rng(spec.id), title=spec.title)


def _learning_action(spec: NodeSpec, children: list[Node], b: Bindings) -> Node:
    props = spec.properties
    actions = [a.strip() for a in props["actions"].split(",") if a.strip()]
    if not actions:
        raise TreeDefError(INVALID_PROPERTY, f"node {spec.id!r}: empty action list", spec.id)
    executor = b.lookup("executors", props["executor"], spec.id)(actions)
    return LearningActionNode(spec.id, actions, executor,
                              b.lookup("states", props["state"], spec.id),
                              b.lookup("rewards", props["reward"], spec.id),
                              b.params(spec.id), b.rng(spec.id), title=spec.title)


def core_registry() -> Registry:
    r = Registry()
    for cls in (core.Sequence, core.Priority, core.MemSequence, core.MemPriority):
        r.register(cls.kind, Category.COMPOSITE, _plain(cls))
    r.register("Parallel", Category.COMPOSITE, _parallel, success=(INT, True), failure=(INT, True))
    r.register("Inverter", Category.DECORATOR, _plain(core.Inverter))
    r.register("Repeater", Category.DECORATOR, _repeater, count=(INT, True))
    r.register("Action", Category.ACTION, _action, action=(STR, True))
    r.register("Condition", Category.CONDITION, _condition, condition=(STR, True))
    r.register("LearningComposite", Category.COMPOSITE, _learning_composite,
               state=(STR, True), reward=(STR, False), reward_success=(NUM, False),
               reward_failure=(NUM, False))
    r.register("LearningAction", Category.ACTION, _learning_action, state=(STR, True),
               reward=(STR, True), executor=(STR, True), actions=(STR, True))
    return r


# -- parsing ----------------------------------------------------------------


def _no_duplicate_keys(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for k, v in pairs:
        if k in out:
            raise TreeDefError(DUPLICATE_ID, f"duplicate key {k!r}")
        out[k] = v
    return out


def _is_scalar(v: Any) -> bool:
    return isinstance(v, (bool, int, float, str))


def _node_spec(key: str, raw: Any) -> tuple[NodeSpec, str | None, list[str] | None]:
    if not isinstance(raw, dict):
        raise TreeDefError(SCHEMA, f"node {key!r} must be an object", key)
    unknown = set(raw) - {"id", "name", "title", "children", "child", "properties"}
    if unknown:
        raise TreeDefError(SCHEMA, f"node {key!r} has unknown fields {sorted(unknown)}", key)
    node_id = raw.get("id", key)
    if node_id != key:
        raise TreeDefError(ID_MISMATCH, f"node stored under {key!r} declares id {node_id!r}", key)
    kind = raw.get("name")
    if not isinstance(kind, str) or not kind:
        raise TreeDefError(SCHEMA, f"node {key!r} needs a string 'name'", key)
    title = raw.get("title")
    if title is not None and not isinstance(title, str):
        raise TreeDefError(SCHEMA, f"node {key!r}: title must be a string", key)
    props = raw.get("properties", {})
    if not isinstance(props, dict) or not all(_is_scalar(v) for v in props.values()):
        raise TreeDefError(SCHEMA, f"node {key!r}: properties must map names to scalars", key)
    child = raw.get("child")
    if child is not None and not isinstance(child, str):
        raise TreeDefError(SCHEMA, f"node {key!r}: child must be a node id", key)
    children = raw.get("children")
    if children is not None and (not isinstance(children, list)
                                 or not all(isinstance(c, str) for c in children)):
        raise TreeDefError(SCHEMA, f"node {key!r}: children must be a list of node ids", key)
    refs = tuple(children or ()) + ((child,) if child is not None else ())
    return NodeSpec(key, kind, title, refs, dict(props)), child, children


def parse_tree_document(text: str | bytes, kinds: Mapping[str, Category] | None = None) -> TreeDocument:
    """Parse and structurally validate a tree document.

    Raises :class:`TreeDefError` whose ``code`` names the violated rule.
    """
    if kinds is None:
        kinds = default_kinds()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        raw = json.loads(text, object_pairs_hook=_no_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise TreeDefError(SYNTAX, f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise TreeDefError(SCHEMA, "document must be an object")
    unknown = set(raw) - {"title", "root", "nodes"}
    if unknown:
        raise TreeDefError(SCHEMA, f"unknown top-level fields {sorted(unknown)}")
    title, root_id, raw_nodes = raw.get("title", ""), raw.get("root"), raw.get("nodes")
    if not isinstance(title, str) or not isinstance(root_id, str) or not isinstance(raw_nodes, dict):
        raise TreeDefError(SCHEMA, "need string 'title', string 'root' and object 'nodes'")

    nodes: dict[str, NodeSpec] = {}
    for key, raw_node in raw_nodes.items():
        spec, child, children = _node_spec(key, raw_node)
        category = kinds.get(spec.kind)
        if category is None:
            raise TreeDefError(UNKNOWN_KIND, f"node {key!r} has unknown kind {spec.kind!r}", key)
        _check_arity(spec, category, child, children)
        nodes[key] = spec

    doc = TreeDocument(title, root_id, nodes)
    validate_structure(doc)
    return doc


def _check_arity(spec: NodeSpec, category: Category, child: str | None,
                 children: list[str] | None) -> None:
    where = f"{spec.kind} node {spec.id!r}"
    if category is Category.COMPOSITE:
        if child is not None or not children:
            raise TreeDefError(ARITY, f"{where} needs a non-empty 'children' list", spec.id)
    elif category is Category.DECORATOR:
        if children is not None or child is None:
            raise TreeDefError(ARITY, f"{where} needs exactly one 'child'", spec.id)
    elif child is not None or children is not None:
        raise TreeDefError(ARITY, f"leaf {where} cannot have children", spec.id)


def validate_structure(doc: TreeDocument) -> None:
    """Check that the child references form a tree rooted at ``doc.root_id``."""
    if doc.root_id not in doc.nodes:
        raise TreeDefError(MISSING_ROOT, f"root {doc.root_id!r} is not a node")
    parent: dict[str, str] = {}
    for spec in doc.nodes.values():
        for ref in spec.children:
            if ref not in doc.nodes:
                raise TreeDefError(DANGLING_REFERENCE,
                                   f"node {spec.id!r} references missing node {ref!r}", spec.id)
            if ref in parent:
                raise TreeDefError(MULTI_PARENT,
                                   f"node {ref!r} has parents {parent[ref]!r} and {spec.id!r}", ref)
            parent[ref] = spec.id
    if doc.root_id in parent:
        raise TreeDefError(CYCLE, f"root {doc.root_id!r} is a child of {parent[doc.root_id]!r}",
                           doc.root_id)
    seen = {doc.root_id}
    stack = [doc.root_id]
    while stack:
        for ref in doc.nodes[stack.pop()].children:
            seen.add(ref)
            stack.append(ref)
    for node_id in doc.nodes:
        if node_id in seen:
            continue
        # each node has at most one parent here, so walking up either ends or loops
        chain = {node_id}
        cur = node_id
        while cur in parent:
            cur = parent[cur]
            if cur in chain:
                raise TreeDefError(CYCLE, f"nodes around {node_id!r} form a cycle", node_id)
            chain.add(cur)
        raise TreeDefError(UNREACHABLE, f"node {node_id!r} is not reachable from the root",
                           node_id)


# -- serialization ----------------------------------------------------------


def to_dict(doc: TreeDocument, kinds: Mapping[str, Category] | None = None) -> dict[str, Any]:
    kinds = kinds if kinds is not None else default_kinds()
    nodes = {}
    for node_id, spec in doc.nodes.items():
        out: dict[str, Any] = {"id": spec.id, "name": spec.kind,
                               "properties": dict(spec.properties)}
        if spec.title is not None:
            out["title"] = spec.title
        category = kinds.get(spec.kind)
        if category is Category.DECORATOR:
            out["child"] = spec.children[0]
        elif spec.children or category is Category.COMPOSITE:
            out["children"] = list(spec.children)
        nodes[node_id] = out
    return {"title": doc.title, "root": doc.root_id, "nodes": nodes}


def serialize_tree(doc: TreeDocument, kinds: Mapping[str, Category] | None = None) -> str:
    """Canonical text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(to_dict(doc, kinds), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# -- building ---------------------------------------------------------------


def _check_properties(spec: NodeSpec, node_type: NodeType) -> None:
    for name, (types, required) in node_type.properties.items():
        if name not in spec.properties:
            if required:
                raise TreeDefError(MISSING_PROPERTY,
                                   f"{spec.kind} node {spec.id!r} needs property {name!r}", spec.id)
            continue
        value = spec.properties[name]
        # bool is an int subclass; only accept it where bool is asked for
        if not isinstance(value, types) or (isinstance(value, bool) and bool not in types):
            expected = "/".join(t.__name__ for t in types)
            raise TreeDefError(PROPERTY_TYPE,
                               f"{spec.kind} node {spec.id!r}: property {name!r} should be "
                               f"{expected}, got {type(value).__name__}", spec.id)


def build_tree(doc: TreeDocument, registry: Registry | None = None,
               bindings: Bindings | None = None) -> BehaviorTree:
    registry = registry if registry is not None else default_registry()
    bindings = bindings or Bindings()

    def build(node_id: str) -> Node:
        spec = doc.nodes[node_id]
        node_type = registry.get(spec.kind)
        if node_type is None:
            raise TreeDefError(UNREGISTERED_KIND, f"kind {spec.kind!r} is not registered", node_id)
        _check_properties(spec, node_type)
        children = [build(c) for c in spec.children]
        node = node_type.factory(spec, children, bindings)
        node.kind = spec.kind
        return node

    return BehaviorTree(build(doc.root_id), title=doc.title)


def load_tree(path: str, registry: Registry | None = None,
              bindings: Bindings | None = None) -> BehaviorTree:
    registry = registry if registry is not None else default_registry()
    with open(path, encoding="utf-8") as fh:
        doc = parse_tree_document(fh.read(), registry.categories())
    return build_tree(doc, registry, bindings)


def default_registry() -> Registry:
    from .fire_nodes import fire_registry
    return fire_registry()


def default_kinds() -> dict[str, Category]:
    return default_registry().categories()
