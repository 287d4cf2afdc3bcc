"""Tabular Q-learning: value table, action selection, MDP/SMDP updates."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

State = tuple[int, ...]


@dataclass(frozen=True)
class LearnerParams:
    alpha: float = 0.5
    gamma: float = 0.5
    epsilon_start: float = 0.1
    epsilon_decay: float = 0.95
    epsilon_floor: float = 0.01
    rng_seed: int = 0
    # "constant" uses alpha; "inverse_visits" uses 1/k per (state, action)
    alpha_schedule: str = "constant"
    discard_on_interrupt: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if not 0 <= self.epsilon_floor <= self.epsilon_start <= 1:
            raise ValueError("need 0 <= epsilon_floor <= epsilon_start <= 1")
        if not 0 < self.epsilon_decay <= 1:
            raise ValueError(f"epsilon_decay must be in (0, 1], got {self.epsilon_decay}")
        if self.alpha_schedule not in ("constant", "inverse_visits"):
            raise ValueError(f"unknown alpha schedule {self.alpha_schedule!r}")


class QTable:
    """Sparse ``(state, action) -> value`` map; unwritten entries read as 0."""

    def __init__(self, n_actions: int):
        if n_actions < 1:
            raise ValueError("a Q-table needs at least one action")
        self.n_actions = n_actions
        self._values: dict[tuple[Hashable, int], float] = {}

    def __getitem__(self, key: tuple[Hashable, int]) -> float:
        return self._values.get(key, 0.0)

    def __setitem__(self, key: tuple[Hashable, int], value: float) -> None:
        s, a = key
        if not 0 <= a < self.n_actions:
            raise IndexError(f"action {a} outside [0, {self.n_actions})")
        if not math.isfinite(value):
            raise ValueError(f"non-finite Q value {value!r} for {key}")
        self._values[(s, a)] = float(value)

    def __len__(self) -> int:
        return len(self._values)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, QTable) and self.n_actions == other.n_actions
                and self._values == other._values)

    def row(self, s: Hashable) -> list[float]:
        return [self._values.get((s, a), 0.0) for a in range(self.n_actions)]

    def max_value(self, s: Hashable) -> float:
        return max(self.row(s))

    def states(self) -> list[Hashable]:
        return sorted({s for (s, _) in self._values})

    def items(self) -> list[tuple[tuple[Hashable, int], float]]:
        return sorted(self._values.items())

    def copy(self) -> "QTable":
        t = QTable(self.n_actions)
        t._values = dict(self._values)
        return t

    def dumps(self) -> str:
        """Plain-text snapshot: ``state<TAB>action<TAB>value`` per line."""
        lines = [f"# n_actions={self.n_actions}"]
        for (s, a), v in self.items():
            lines.append(f"{_state_str(s)}\t{a}\t{v!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "QTable":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# n_actions="):
            raise ValueError("missing '# n_actions=' header")
        table = cls(int(lines[0].split("=", 1)[1]))
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                s, a, v = line.split("\t")
                table[(_parse_state(s), int(a))] = float(v)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        return table


def _state_str(s: Hashable) -> str:
    if isinstance(s, tuple):
        return ",".join(str(x) for x in s)
    return str(s)


def _parse_state(text: str) -> State:
    if text == "":
        return ()
    return tuple(int(x) for x in text.split(","))


def _check_reward(r: float) -> None:
    if not math.isfinite(r):
        raise ValueError(f"non-finite reward {r!r}")


def q_update(table: QTable, s: Hashable, a: int, r: float, s_next: Hashable,
             params: LearnerParams, alpha: float | None = None) -> float:
    _check_reward(r)
    alpha = params.alpha if alpha is None else alpha
    target = r + params.gamma * table.max_value(s_next)
    value = (1 - alpha) * table[(s, a)] + alpha * target
    table[(s, a)] = value
    return value


def q_update_smdp(table: QTable, s: Hashable, o: int, r_accum: float, tau: int,
                  s_next: Hashable, params: LearnerParams, alpha: float | None = None) -> float:
    """Option update: the bootstrap is discounted by ``gamma ** tau``."""
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    _check_reward(r_accum)
    alpha = params.alpha if alpha is None else alpha
    target = r_accum + params.gamma ** tau * table.max_value(s_next)
    value = (1 - alpha) * table[(s, o)] + alpha * target
    table[(s, o)] = value
    return value


def select_action(table: QTable, s: Hashable, n_actions: int, epsilon: float,
                  rng: random.Random) -> int:
    """Epsilon-greedy; argmax ties are broken uniformly from ``rng``."""
    if n_actions < 1:
        raise ValueError("empty action set")
    if not 0 <= epsilon <= 1:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return rng.randrange(n_actions)
    row = [table[(s, a)] for a in range(n_actions)]
    best = max(row)
    ties = [a for a, v in enumerate(row) if v == best]
    return ties[0] if len(ties) == 1 else rng.choice(ties)


def greedy_action(table: QTable, s: Hashable, n_actions: int) -> int:
    if n_actions < 1:
        raise ValueError("empty action set")
    row = [table[(s, a)] for a in range(n_actions)]
    return row.index(max(row))


class QLearner:
    """Q-table plus its exploration schedule, visit counts and random stream."""

    def __init__(self, n_actions: int, params: LearnerParams | None = None,
                 rng: random.Random | None = None):
        self.params = params or LearnerParams()
        self.table = QTable(n_actions)
        self.rng = rng if rng is not None else random.Random(self.params.rng_seed)
        self.visits: dict[tuple[Hashable, int], int] = {}
        self.episodes = 0
        self.updates = 0

    @property
    def n_actions(self) -> int:
        return self.table.n_actions

    @property
    def epsilon(self) -> float:
        p = self.params
        return max(p.epsilon_floor, p.epsilon_start * p.epsilon_decay ** self.episodes)

    def select(self, s: Hashable) -> int:
        return select_action(self.table, s, self.n_actions, self.epsilon, self.rng)

    def greedy(self, s: Hashable) -> int:
        return greedy_action(self.table, s, self.n_actions)

    def update(self, s: Hashable, a: int, r_accum: float, tau: int, s_next: Hashable) -> float:
        k = self.visits.get((s, a), 0) + 1
        self.visits[(s, a)] = k
        alpha = 1.0 / k if self.params.alpha_schedule == "inverse_visits" else None
        self.updates += 1
        return q_update_smdp(self.table, s, a, r_accum, tau, s_next, self.params, alpha)

    def end_episode(self) -> None:
        self.episodes += 1


# -- value iteration oracle -------------------------------------------------


@dataclass
class FiniteMDP:
    """Explicit model. States without entries in ``actions`` are terminal (V=0)."""

    states: list[Hashable]
    actions: dict[Hashable, list[Hashable]]
    reward: dict[tuple[Hashable, Hashable], float]
    transitions: dict[tuple[Hashable, Hashable], dict[Hashable, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for s, acts in self.actions.items():
            for a in acts:
                row = self.transitions.get((s, a))
                if not row:
                    raise ValueError(f"missing transition row for {(s, a)}")
                if any(p < 0 for p in row.values()) or not math.isclose(
                        sum(row.values()), 1.0, abs_tol=1e-9):
                    raise ValueError(f"transition row for {(s, a)} is not a distribution")
                for s2 in row:
                    if s2 not in self.states:
                        raise ValueError(f"unknown successor {s2!r} from {(s, a)}")

    def is_terminal(self, s: Hashable) -> bool:
        return not self.actions.get(s)

    def q_value(self, v: Mapping[Hashable, float], s: Hashable, a: Hashable, gamma: float) -> float:
        return self.reward[(s, a)] + gamma * sum(
            p * v[s2] for s2, p in self.transitions[(s, a)].items())


def value_iteration_oracle(model: FiniteMDP, gamma: float, tol: float = 1e-12,
                           max_iter: int = 100_000) -> dict[Hashable, float]:
    v = {s: 0.0 for s in model.states}
    for _ in range(max_iter):
        delta = 0.0
        new = {}
        for s in model.states:
            if model.is_terminal(s):
                new[s] = 0.0
                continue
            new[s] = max(model.q_value(v, s, a, gamma) for a in model.actions[s])
            delta = max(delta, abs(new[s] - v[s]))
        v = new
        if delta < tol:
            return v
    raise RuntimeError(f"value iteration did not converge within {max_iter} sweeps")


def optimal_q(model: FiniteMDP, gamma: float, tol: float = 1e-12) -> dict[tuple[Hashable, Hashable], float]:
    v = value_iteration_oracle(model, gamma, tol)
    return {(s, a): model.q_value(v, s, a, gamma)
            for s in model.states for a in model.actions.get(s, [])}


def sweep_q_learning(model: FiniteMDP, params: LearnerParams, sweeps: int,
                     order: Iterable[Hashable] | None = None) -> tuple[QTable, dict[Hashable, list[Hashable]]]:
    """Exhaustive-sweep Q-learning on a deterministic model.

    Every ``(s, a)`` pair is updated with :func:`q_update` once per sweep,
    visiting states in ``order``. Terminal states are never written, so they
    bootstrap from 0. Returns the table and the per-state action labels that
    the table's integer indices refer to.
    """
    live = [s for s in model.states if not model.is_terminal(s)]
    widths = {len(model.actions[s]) for s in live}
    if len(widths) != 1:
        raise ValueError("sweeping needs the same number of actions in every state")
    table = QTable(widths.pop())
    visits: dict[tuple[Hashable, int], int] = {}
    order = [s for s in (order if order is not None else model.states) if s in live]
    for _ in range(sweeps):
        for s in order:
            for a, label in enumerate(model.actions[s]):
                row = model.transitions[(s, label)]
                if len(row) != 1:
                    raise ValueError(f"{(s, label)} is not deterministic")
                (s2,) = row
                k = visits.get((s, a), 0) + 1
                visits[(s, a)] = k
                alpha = 1.0 / k if params.alpha_schedule == "inverse_visits" else None
                q_update(table, s, a, model.reward[(s, label)], s2, params, alpha)
    return table, {s: list(model.actions[s]) for s in live}
