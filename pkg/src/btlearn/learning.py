"""Behavior-tree nodes with an embedded Q-learner.

Both nodes run an option: on initiation they observe a state and pick a
child (composite) or a primitive action (leaf), keep ticking that choice
while it returns RUNNING, and make a single SMDP update when it terminates
or is interrupted.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Sequence

from .core import Category, ERROR, Node, RUNNING, Status, TickContext
from .rl import LearnerParams, QLearner

StateExtractor = Callable[[Any], Hashable]
RewardHook = Callable[[Any, Status], float]
Executor = Callable[[Any, int], Status]


def status_reward(positive: float = 1.0, negative: float = 1.0) -> RewardHook:
    """Default composite reward: +positive on SUCCESS, -negative on FAILURE."""

    def reward(world: Any, status: Status) -> float:
        if status is Status.SUCCESS:
            return positive
        if status is Status.FAILURE:
            return -negative
        return 0.0

    return reward


@dataclass
class EpisodeAccumulator:
    initiation_state: Hashable = None
    chosen: int = -1
    tau: int = 0
    r_accum: float = 0.0
    active: bool = False

    def start(self, state: Hashable, chosen: int) -> None:
        self.initiation_state = state
        self.chosen = chosen
        self.tau = 0
        self.r_accum = 0.0
        self.active = True

    def add(self, reward: float, gamma: float) -> None:
        self.tau += 1
        self.r_accum += gamma ** (self.tau - 1) * reward

    def reset(self) -> None:
        self.initiation_state = None
        self.chosen = -1
        self.tau = 0
        self.r_accum = 0.0
        self.active = False


@dataclass(frozen=True)
class Episode:
    """Log record for one closed episode."""

    node_id: str
    state: Hashable
    action: int
    tau: int
    r_accum: float
    outcome: str  # SUCCESS / FAILURE / INTERRUPTED
    next_state: Hashable
    q_value: float | None


class _LearningMixin:
    """Episode protocol shared by both learning nodes."""

    id: str
    learner: QLearner
    extract: StateExtractor
    reward: RewardHook

    def _init_learning(self, n_actions: int, extract: StateExtractor, reward: RewardHook,
                       params: LearnerParams | None, rng: random.Random | None) -> None:
        self.extract = extract
        self.reward = reward
        self.learner = QLearner(n_actions, params, rng)
        self.acc = EpisodeAccumulator()
        self.on_decision: list[Callable[[str, Hashable, int], None]] = []
        self.on_episode: list[Callable[[Episode], None]] = []

    def _run_choice(self, chosen: int, ctx: TickContext) -> Status:
        raise NotImplementedError

    def _tick(self, ctx: TickContext) -> Status:
        acc = self.acc
        if not acc.active:
            state = self.extract(ctx.world)
            chosen = self.learner.select(state)
            acc.start(state, chosen)
            for cb in self.on_decision:
                cb(self.id, state, chosen)
        status = self._run_choice(acc.chosen, ctx)
        if status is ERROR:
            acc.reset()
            return ERROR
        r = self.reward(ctx.world, status)
        if not math.isfinite(r):
            raise ValueError(f"{self.id}: reward hook returned {r!r}")
        acc.add(r, self.learner.params.gamma)
        if status is RUNNING:
            return RUNNING
        self._close(ctx, status.value)
        return status

    def _close(self, ctx: TickContext, outcome: str, update: bool = True) -> None:
        acc = self.acc
        next_state = self.extract(ctx.world)
        value = None
        if update:
            value = self.learner.update(acc.initiation_state, acc.chosen, acc.r_accum,
                                        acc.tau, next_state)
        self.learner.end_episode()
        record = Episode(self.id, acc.initiation_state, acc.chosen, acc.tau, acc.r_accum,
                         outcome, next_state, value)
        acc.reset()
        for cb in self.on_episode:
            cb(record)

    def interrupt(self, ctx: TickContext) -> None:
        """Close an active episode early, using the current state as ``s'``."""
        if not self.acc.active:
            return
        update = not self.learner.params.discard_on_interrupt and self.acc.tau >= 1
        self._close(ctx, "INTERRUPTED", update=update)

    def halt(self, ctx: TickContext) -> None:
        self.interrupt(ctx)


class LearningCompositeNode(_LearningMixin, Node):
    """Composite whose children are the options a Q-learner chooses between."""

    category = Category.COMPOSITE
    kind = "LearningComposite"

    def __init__(self, node_id: str, children: list[Node], extract: StateExtractor,
                 reward: RewardHook | None = None, params: LearnerParams | None = None,
                 rng: random.Random | None = None, **kw: Any):
        Node.__init__(self, node_id, children, **kw)
        self._init_learning(len(self.children), extract, reward or status_reward(10, 10),
                            params, rng)

    def _run_choice(self, chosen: int, ctx: TickContext) -> Status:
        return self.children[chosen].tick(ctx)


class LearningActionNode(_LearningMixin, Node):
    """Leaf that learns which primitive action to hand to ``executor``."""

    category = Category.ACTION
    kind = "LearningAction"

    def __init__(self, node_id: str, actions: Sequence[str], executor: Executor,
                 extract: StateExtractor, reward: RewardHook,
                 params: LearnerParams | None = None, rng: random.Random | None = None,
                 **kw: Any):
        Node.__init__(self, node_id, **kw)
        if not actions:
            raise ValueError(f"LearningAction {node_id!r} needs at least one action")
        self.actions = list(actions)
        self.executor = executor
        self._init_learning(len(self.actions), extract, reward, params, rng)

    def _run_choice(self, chosen: int, ctx: TickContext) -> Status:
        try:
            return self.executor(ctx.world, chosen)
        except Exception:
            return ERROR


def interrupt(node: LearningCompositeNode | LearningActionNode, ctx: TickContext) -> None:
    node.interrupt(ctx)
