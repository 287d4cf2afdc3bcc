"""Seeded trials on the fire-control scenarios and the metrics computed from them."""

from __future__ import annotations

import dataclasses
import logging
import random
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Hashable, Sequence

from .core import Node, TickContext
from .fire_nodes import fire_bindings, fire_registry, scenario_tree_text
from .firesim import BEHAVIORS, CHANGE, EXTINGUISH, SAVE, FireSim
from .learning import Episode, LearningActionNode, LearningCompositeNode
from .rl import LearnerParams
from .treedef import build_tree, parse_tree_document

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
LEARNING_KINDS = (LearningCompositeNode, LearningActionNode)


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def trial_seed(master_seed: int, trial_index: int) -> int:
    """``splitmix64(splitmix64(master_seed) ^ trial_index)``."""
    return splitmix64(splitmix64(master_seed & MASK64) ^ trial_index)


def stream_seed(seed: int, name: str) -> int:
    """Seed of a named random stream inside a trial (crc32 of the name)."""
    return splitmix64(seed ^ zlib.crc32(name.encode("utf-8")))


@dataclass
class ExperimentConfig:
    scenario: int = 1
    trials: int = 30
    iterations: int = 400
    master_seed: int = 0
    learner: LearnerParams = field(default_factory=LearnerParams)
    # per-node overrides, keyed by node id
    node_params: dict[str, LearnerParams] = field(default_factory=dict)
    out_dir: str | None = None
    baseline: bool = True
    tree_path: str | None = None
    window: int = 20
    victim_prob: float = 0.5
    fire_prob: float = 0.5
    figures: bool = False

    def __post_init__(self) -> None:
        if self.scenario not in (1, 2):
            raise ValueError(f"scenario must be 1 or 2, got {self.scenario}")
        if self.trials < 1 or self.iterations < 1:
            raise ValueError("trials and iterations must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")

    def params_for(self, node_id: str, baseline: bool = False) -> LearnerParams:
        params = self.node_params.get(node_id, self.learner)
        if baseline:
            # uniform choice at every decision point
            params = dataclasses.replace(params, epsilon_start=1.0, epsilon_decay=1.0,
                                         epsilon_floor=1.0)
        return params

    def tree_text(self) -> str:
        if self.tree_path:
            return Path(self.tree_path).read_text(encoding="utf-8")
        return scenario_tree_text(self.scenario)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        data = dict(data)
        if "learner" in data:
            data["learner"] = LearnerParams(**data["learner"])
        if "node_params" in data:
            data["node_params"] = {k: LearnerParams(**v) for k, v in data["node_params"].items()}
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - fields
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


@dataclass
class Decision:
    node_id: str
    state: Hashable
    action: int
    correct: bool | None


@dataclass
class IterationRecord:
    iteration: int
    expected: str
    # every behavior the tick invoked in the world, in call order
    activated: tuple[str, ...]
    status: str
    decisions: list[Decision] = field(default_factory=list)
    episodes: list[Episode] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {
            "iteration": self.iteration,
            "expected": self.expected,
            "activated": list(self.activated),
            "status": self.status,
            "decisions": [{"node": d.node_id, "state": list(d.state), "action": d.action,
                           "correct": d.correct} for d in self.decisions],
            "episodes": [{"node": e.node_id, "state": list(e.state), "action": e.action,
                          "tau": e.tau, "r_accum": e.r_accum, "outcome": e.outcome}
                         for e in self.episodes],
        }


@dataclass
class TrialResult:
    trial_index: int
    seed: int
    baseline: bool
    learning_nodes: list[str]
    records: list[IterationRecord]
    greedy_policy: dict[str, dict[Hashable, int]]
    q_tables: dict[str, str]
    extinguisher_map: dict[str, int]

    @property
    def behavior_accuracy(self) -> tuple[float, float, float]:
        return compute_behavior_accuracy(self.records)

    def node_correctness(self, node_id: str) -> list[list[bool]]:
        """Per iteration, the correctness flags of that node's scored decisions."""
        return [[d.correct for d in r.decisions if d.node_id == node_id and d.correct is not None]
                for r in self.records]

    def node_accuracy(self, node_id: str, start: int = 0, stop: int | None = None) -> float | None:
        flags = [c for per_it in self.node_correctness(node_id)[start:stop] for c in per_it]
        return sum(flags) / len(flags) if flags else None

    def episode_count(self, node_id: str) -> int:
        return sum(1 for r in self.records for e in r.episodes if e.node_id == node_id)

    def to_json(self) -> dict[str, Any]:
        return {
            "trial": self.trial_index, "seed": self.seed, "baseline": self.baseline,
            "behavior_accuracy": list(self.behavior_accuracy),
            "extinguisher_map": self.extinguisher_map,
            "greedy_policy": {n: {",".join(map(str, s)): a for s, a in sorted(p.items())}
                              for n, p in self.greedy_policy.items()},
            "q_tables": self.q_tables,
            "records": [r.to_json() for r in self.records],
        }


def compute_behavior_accuracy(records: Sequence[IterationRecord]) -> tuple[float, float, float]:
    """Share of iterations expecting each behavior in which it was activated."""
    out = []
    for behavior in BEHAVIORS:
        expected = [r for r in records if r.expected == behavior]
        if not expected:
            log.debug("behavior %s never expected; accuracy taken as 1.0", behavior)
            out.append(1.0)
            continue
        hits = sum(1 for r in expected if behavior in r.activated)
        out.append(hits / len(expected))
    return tuple(out)  # type: ignore[return-value]


def subtree_behavior(node: Node) -> str | None:
    """Which top-level behavior a subtree stands for, judged by its action leaves."""
    for n in node.walk():
        if n.kind == "SaveVictim":
            return SAVE
        if n.kind in ("LearningAction", "UseExtinguisher"):
            return EXTINGUISH
        if n.kind == "ChangeRoom":
            return CHANGE
    return None


def run_trial(config: ExperimentConfig, trial_index: int, baseline: bool = False,
              record_trace: bool = False) -> TrialResult:
    seed = trial_seed(config.master_seed, trial_index)
    sim = FireSim(config.scenario, victim_prob=config.victim_prob, fire_prob=config.fire_prob,
                  rng=random.Random(stream_seed(seed, "world")))
    registry = fire_registry()
    bindings = fire_bindings(
        params=lambda node_id: config.params_for(node_id, baseline),
        rng=lambda node_id: random.Random(stream_seed(seed, "learner:" + node_id)))
    doc = parse_tree_document(config.tree_text(), registry.categories())
    tree = build_tree(doc, registry, bindings)

    learners = [n for n in tree.root_child.walk() if isinstance(n, LEARNING_KINDS)]
    pending: list[Decision] = []
    closed: list[Episode] = []

    def scorer(node: Node):
        if isinstance(node, LearningCompositeNode):
            behaviors = [subtree_behavior(c) for c in node.children]

            def score(state: Hashable, action: int) -> bool | None:
                return behaviors[action] == sim.expected_behavior()
        else:
            def score(state: Hashable, action: int) -> bool | None:
                room = sim.room
                if not room.has_fire:
                    return None
                ext = node.actions[action]
                return sim.extinguisher_map.get(ext) == room.fire_type
        return score

    for node in learners:
        score = scorer(node)
        node.on_decision.append(
            lambda node_id, s, a, score=score: pending.append(Decision(node_id, s, a, score(s, a))))
        node.on_episode.append(closed.append)

    invoked: list[str] = []
    sim.listeners.append(lambda outcome: invoked.append(outcome.action))
    ctx = TickContext(world=sim, record_trace=record_trace)
    records = []
    for it in range(config.iterations):
        expected = sim.expected_behavior()
        sim.last_outcome = None
        invoked.clear()
        status = tree.tick(ctx)
        records.append(IterationRecord(it + 1, expected, tuple(invoked), status.value,
                                       list(pending), list(closed)))
        pending.clear()
        closed.clear()

    greedy = {}
    tables = {}
    for node in learners:
        table = node.learner.table
        greedy[node.id] = {s: node.learner.greedy(s) for s in table.states()}
        tables[node.id] = table.dumps()
    return TrialResult(trial_index, seed, baseline, [n.id for n in learners], records, greedy,
                       tables, dict(sim.extinguisher_map))


# -- aggregation ------------------------------------------------------------


def _mean(values: Sequence[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def per_iteration_series(trials: Sequence[TrialResult], node_id: str) -> list[float | None]:
    """Mean over trials of each trial's accuracy at every iteration."""
    per_trial = [t.node_correctness(node_id) for t in trials]
    n = len(per_trial[0]) if per_trial else 0
    return [_mean([sum(f[i]) / len(f[i]) if f[i] else None for f in per_trial]) for i in range(n)]


def windowed_series(trials: Sequence[TrialResult], node_id: str, window: int,
                    full_length: bool = False) -> list[float | None]:
    """Mean over trials of each trial's accuracy over a trailing window.

    The result has ``iterations - window + 1`` entries, or ``iterations`` when
    ``full_length`` is set, in which case the first ``window - 1`` are None.
    """
    per_trial = [t.node_correctness(node_id) for t in trials]
    n = len(per_trial[0]) if per_trial else 0
    out: list[float | None] = [None] * (window - 1) if full_length else []
    for end in range(window, n + 1):
        accs = []
        for flags in per_trial:
            pooled = [c for per_it in flags[end - window:end] for c in per_it]
            accs.append(sum(pooled) / len(pooled) if pooled else None)
        out.append(_mean(accs))
    return out


def span_accuracy(trials: Sequence[TrialResult], node_id: str, start: int,
                  stop: int | None) -> float | None:
    """Mean over trials of the node's accuracy on iterations ``[start, stop)``."""
    return _mean([t.node_accuracy(node_id, start, stop) for t in trials])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trials: list[TrialResult]
    baseline_trials: list[TrialResult]

    @property
    def node_ids(self) -> list[str]:
        return self.trials[0].learning_nodes

    @property
    def behavior_accuracy(self) -> tuple[float, float, float]:
        accs = [t.behavior_accuracy for t in self.trials]
        return tuple(sum(a[i] for a in accs) / len(accs) for i in range(3))  # type: ignore

    @property
    def baseline_behavior_accuracy(self) -> tuple[float, float, float] | None:
        if not self.baseline_trials:
            return None
        accs = [t.behavior_accuracy for t in self.baseline_trials]
        return tuple(sum(a[i] for a in accs) / len(accs) for i in range(3))  # type: ignore

    def first_last(self, node_id: str, span: int = 100, baseline: bool = False) -> tuple[float | None, float | None]:
        trials = self.baseline_trials if baseline else self.trials
        n = self.config.iterations
        return (span_accuracy(trials, node_id, 0, span),
                span_accuracy(trials, node_id, max(n - span, 0), None))

    def summary(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "scenario": self.config.scenario,
            "trials": self.config.trials,
            "iterations": self.config.iterations,
            "master_seed": self.config.master_seed,
            "behavior_accuracy": dict(zip(BEHAVIORS, self.behavior_accuracy)),
            "nodes": {},
        }
        if self.baseline_trials:
            out["baseline_behavior_accuracy"] = dict(zip(BEHAVIORS,
                                                         self.baseline_behavior_accuracy))
        for node_id in self.node_ids:
            first, last = self.first_last(node_id)
            entry = {"first_100": first, "last_100": last}
            if self.baseline_trials:
                entry["baseline_first_100"], entry["baseline_last_100"] = self.first_last(
                    node_id, baseline=True)
            out["nodes"][node_id] = entry
        return out


def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentResult:
    trials = []
    baseline = []
    for idx in range(config.trials):
        try:
            trials.append(run_trial(config, idx))
            if config.baseline:
                baseline.append(run_trial(config, idx, baseline=True))
        except Exception as exc:
            seed = trial_seed(config.master_seed, idx)
            raise RuntimeError(f"trial {idx} (seed {seed}) failed: {exc}") from exc
    result = ExperimentResult(config, trials, baseline)
    if write and config.out_dir:
        from .report import emit_outputs
        emit_outputs(result, config)
    return result
