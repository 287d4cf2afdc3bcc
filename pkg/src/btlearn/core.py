"""Behavior tree structure and tick propagation for the core node types."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterator

log = logging.getLogger(__name__)


class Status(enum.Enum):
    SUCCESS = "SUCCESS"
    FAILURE = "FAILURE"
    RUNNING = "RUNNING"
    ERROR = "ERROR"

    @property
    def terminal(self) -> bool:
        return self in (Status.SUCCESS, Status.FAILURE)


SUCCESS = Status.SUCCESS
FAILURE = Status.FAILURE
RUNNING = Status.RUNNING
ERROR = Status.ERROR


class Category(enum.Enum):
    COMPOSITE = "composite"
    DECORATOR = "decorator"
    ACTION = "action"
    CONDITION = "condition"


class Blackboard:
    """Per-node scratch storage keyed by ``(node_id, key)``."""

    def __init__(self) -> None:
        self._data: dict[tuple[Hashable, str], Any] = {}

    def get(self, node_id: Hashable, key: str, default: Any = None) -> Any:
        return self._data.get((node_id, key), default)

    def set(self, node_id: Hashable, key: str, value: Any) -> None:
        self._data[(node_id, key)] = value

    def delete(self, node_id: Hashable, key: str) -> None:
        self._data.pop((node_id, key), None)

    def keys_for(self, node_id: Hashable) -> list[str]:
        return [k for (nid, k) in self._data if nid == node_id]

    def __len__(self) -> int:
        return len(self._data)


@dataclass
class TickContext:
    world: Any = None
    blackboard: Blackboard = field(default_factory=Blackboard)
    tick_counter: int = 0
    record_trace: bool = False
    # (tick_counter, node_id, status.value) per node tick, in completion order
    trace: list[tuple[int, str, str]] = field(default_factory=list)
    tick_counts: dict[str, int] = field(default_factory=dict)
    # nodes ticked during the current root tick, in call order
    ticked: list["Node"] = field(default_factory=list)
    # last status returned by each node during the current root tick
    last_status: dict[str, Status] = field(default_factory=dict)


class Node:
    category: Category = Category.ACTION
    kind: str = "Node"

    def __init__(self, node_id: str, children: list["Node"] | None = None, **params: Any):
        self.id = node_id
        self.children: list[Node] = list(children or [])
        self.params = params
        self.title: str | None = params.pop("title", None)
        self._check_arity()

    def _check_arity(self) -> None:
        n = len(self.children)
        if self.category is Category.COMPOSITE and n < 1:
            raise ValueError(f"{self.kind} {self.id!r} needs at least one child")
        if self.category is Category.DECORATOR and n != 1:
            raise ValueError(f"{self.kind} {self.id!r} needs exactly one child, got {n}")
        if self.category in (Category.ACTION, Category.CONDITION) and n:
            raise ValueError(f"leaf {self.kind} {self.id!r} cannot have children")

    def tick(self, ctx: TickContext) -> Status:
        ctx.ticked.append(self)
        ctx.tick_counts[self.id] = ctx.tick_counts.get(self.id, 0) + 1
        status = self._tick(ctx)
        if not isinstance(status, Status):
            raise TypeError(f"{self.kind} {self.id!r} returned {status!r}")
        ctx.last_status[self.id] = status
        if ctx.record_trace:
            ctx.trace.append((ctx.tick_counter, self.id, status.value))
        return status

    def _tick(self, ctx: TickContext) -> Status:
        raise NotImplementedError

    def halt(self, ctx: TickContext) -> None:
        """Called when the node was left RUNNING and a later tick skipped it."""

    def walk(self) -> Iterator["Node"]:
        yield self
        for child in self.children:
            yield from child.walk()

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.id!r})"


# -- leaves -----------------------------------------------------------------


class Action(Node):
    """Leaf wrapping ``fn(world) -> Status``. Exceptions become ERROR."""

    category = Category.ACTION
    kind = "Action"

    def __init__(self, node_id: str, fn: Callable[[Any], Status], **params: Any):
        super().__init__(node_id, **params)
        self.fn = fn

    def _tick(self, ctx: TickContext) -> Status:
        try:
            return self.fn(ctx.world)
        except Exception:
            log.exception("action %s raised", self.id)
            return ERROR


class Condition(Node):
    """Leaf wrapping a predicate; never RUNNING."""

    category = Category.CONDITION
    kind = "Condition"

    def __init__(self, node_id: str, predicate: Callable[[Any], bool], **params: Any):
        super().__init__(node_id, **params)
        self.predicate = predicate

    def _tick(self, ctx: TickContext) -> Status:
        try:
            return SUCCESS if self.predicate(ctx.world) else FAILURE
        except Exception:
            log.exception("condition %s raised", self.id)
            return ERROR


# -- composites -------------------------------------------------------------


class Sequence(Node):
    category = Category.COMPOSITE
    kind = "Sequence"

    def _tick(self, ctx: TickContext) -> Status:
        for child in self.children:
            status = child.tick(ctx)
            if status is not SUCCESS:
                return status
        return SUCCESS


class Priority(Node):
    category = Category.COMPOSITE
    kind = "Priority"

    def _tick(self, ctx: TickContext) -> Status:
        for child in self.children:
            status = child.tick(ctx)
            if status is not FAILURE:
                return status
        return FAILURE


class _MemoryComposite(Node):
    category = Category.COMPOSITE
    # status that lets the scan move on to the next child
    _advance_on: Status

    def _tick(self, ctx: TickContext) -> Status:
        start = ctx.blackboard.get(self.id, "running_child", 0)
        for i in range(start, len(self.children)):
            status = self.children[i].tick(ctx)
            if status is self._advance_on:
                continue
            if status is RUNNING:
                ctx.blackboard.set(self.id, "running_child", i)
            else:
                ctx.blackboard.delete(self.id, "running_child")
            return status
        ctx.blackboard.delete(self.id, "running_child")
        return self._advance_on

    def halt(self, ctx: TickContext) -> None:
        ctx.blackboard.delete(self.id, "running_child")


class MemSequence(_MemoryComposite):
    kind = "MemSequence"
    _advance_on = SUCCESS


class MemPriority(_MemoryComposite):
    kind = "MemPriority"
    _advance_on = FAILURE


class Parallel(Node):
    """Ticks every child; SUCCESS wins over FAILURE when both thresholds hold."""

    category = Category.COMPOSITE
    kind = "Parallel"

    def __init__(self, node_id: str, children: list[Node], success_threshold: int = 1,
                 failure_threshold: int = 1, **params: Any):
        super().__init__(node_id, children, **params)
        n = len(self.children)
        if not (1 <= success_threshold <= n and 1 <= failure_threshold <= n):
            raise ValueError(
                f"Parallel {node_id!r}: thresholds S={success_threshold}, "
                f"F={failure_threshold} must lie in [1, {n}]")
        self.success_threshold = success_threshold
        self.failure_threshold = failure_threshold

    def _tick(self, ctx: TickContext) -> Status:
        successes = failures = 0
        for child in self.children:
            status = child.tick(ctx)
            if status is ERROR:
                return ERROR
            if status is SUCCESS:
                successes += 1
            elif status is FAILURE:
                failures += 1
        if successes >= self.success_threshold:
            return SUCCESS
        if failures >= self.failure_threshold:
            return FAILURE
        return RUNNING


# -- decorators -------------------------------------------------------------


class Inverter(Node):
    category = Category.DECORATOR
    kind = "Inverter"

    def _tick(self, ctx: TickContext) -> Status:
        status = self.children[0].tick(ctx)
        if status is SUCCESS:
            return FAILURE
        if status is FAILURE:
            return SUCCESS
        return status


class Repeater(Node):
    """Runs the child until it has terminated ``count`` times."""

    category = Category.DECORATOR
    kind = "Repeater"

    def __init__(self, node_id: str, children: list[Node], count: int = 1, **params: Any):
        super().__init__(node_id, children, **params)
        if count < 1:
            raise ValueError(f"Repeater {node_id!r}: count must be >= 1, got {count}")
        self.count = count

    def _tick(self, ctx: TickContext) -> Status:
        status = self.children[0].tick(ctx)
        if status is ERROR:
            ctx.blackboard.delete(self.id, "done")
            return ERROR
        if status is RUNNING:
            return RUNNING
        done = ctx.blackboard.get(self.id, "done", 0) + 1
        if done < self.count:
            ctx.blackboard.set(self.id, "done", done)
            return RUNNING
        ctx.blackboard.delete(self.id, "done")
        return status

    def halt(self, ctx: TickContext) -> None:
        ctx.blackboard.delete(self.id, "done")


# -- tree -------------------------------------------------------------------


class BehaviorTree:
    """A root with exactly one child node.

    After every root tick, nodes that were RUNNING on the previous tick but
    were not reached on this one are halted (deepest first). Learning nodes
    use this hook to close an interrupted episode.
    """

    def __init__(self, root_child: Node, title: str | None = None):
        if isinstance(root_child, (list, tuple)):
            raise ValueError("the root must have exactly one child")
        self.root_child = root_child
        self.title = title
        self.node_index: dict[str, Node] = {}
        self._parent: dict[str, str | None] = {}
        self._index(root_child, None)
        self._open: list[Node] = []

    def _index(self, node: Node, parent: Node | None) -> None:
        if node.id in self.node_index:
            if self.node_index[node.id] is node:
                raise ValueError(f"node {node.id!r} has more than one parent")
            raise ValueError(f"duplicate node id {node.id!r}")
        self.node_index[node.id] = node
        self._parent[node.id] = parent.id if parent else None
        for child in node.children:
            self._index(child, node)

    def __len__(self) -> int:
        return len(self.node_index)

    def __getitem__(self, node_id: str) -> Node:
        return self.node_index[node_id]

    def parent_of(self, node_id: str) -> str | None:
        return self._parent[node_id]

    def tick(self, ctx: TickContext) -> Status:
        ctx.ticked = []
        ctx.last_status = {}
        status = self.root_child.tick(ctx)
        for node in reversed(self._open):
            if node.id not in ctx.last_status:
                node.halt(ctx)
        seen: set[str] = set()
        self._open = []
        for node in ctx.ticked:
            if node.id not in seen and ctx.last_status[node.id] is RUNNING:
                seen.add(node.id)
                self._open.append(node)
        ctx.tick_counter += 1
        return status

    def halt_all(self, ctx: TickContext) -> None:
        for node in reversed(self._open):
            node.halt(ctx)
        self._open = []


def tick(tree: BehaviorTree, ctx: TickContext) -> Status:
    return tree.tick(ctx)
