"""Scripted nodes and worlds shared by the test modules."""

from __future__ import annotations

from btlearn.core import Category, Node, Status, TickContext

S, F, R, E = Status.SUCCESS, Status.FAILURE, Status.RUNNING, Status.ERROR


class Script(Node):
    """Leaf that returns its scripted statuses in order, repeating the last one."""

    category = Category.ACTION
    kind = "Script"

    def __init__(self, node_id: str, *statuses: Status):
        super().__init__(node_id)
        self.statuses = list(statuses) or [S]
        self.calls = 0
        self.halts = 0

    def _tick(self, ctx: TickContext) -> Status:
        status = self.statuses[min(self.calls, len(self.statuses) - 1)]
        self.calls += 1
        return status

    def halt(self, ctx: TickContext) -> None:
        self.halts += 1


def leaves(*statuses: Status, prefix: str = "c") -> list[Script]:
    return [Script(f"{prefix}{i}", s) for i, s in enumerate(statuses)]
