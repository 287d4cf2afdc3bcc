"""Node kinds and named bindings that connect tree documents to :class:`FireSim`."""

from __future__ import annotations

import random
from importlib import resources
from typing import Callable

from .core import Action, Category, Condition, FAILURE, Status, SUCCESS
from .firesim import (FireSim, reward_scenario1, reward_scenario2_action,
                      reward_scenario2_composite)
from .rl import LearnerParams
from .treedef import Bindings, NodeSpec, Registry, STR, core_registry


def _leaf_action(fn: Callable[[FireSim], Status]):
    return lambda spec, children, b: Action(spec.id, fn, title=spec.title)


def _leaf_condition(fn: Callable[[FireSim], bool]):
    return lambda spec, children, b: Condition(spec.id, fn, title=spec.title)


def _fixed_extinguisher(spec: NodeSpec, children, b: Bindings) -> Action:
    ext = spec.properties["extinguisher"]
    return Action(spec.id, lambda world: world.use_extinguisher(ext).status, title=spec.title)


def fire_registry() -> Registry:
    r = core_registry()
    r.register("SaveVictim", Category.ACTION, _leaf_action(lambda w: w.save_victim().status))
    r.register("ChangeRoom", Category.ACTION, _leaf_action(lambda w: w.change_room().status))
    r.register("UseExtinguisher", Category.ACTION, _fixed_extinguisher,
               extinguisher=(STR, True))
    r.register("HasVictim", Category.CONDITION, _leaf_condition(lambda w: w.room.has_victim))
    r.register("HasFire", Category.CONDITION, _leaf_condition(lambda w: w.room.has_fire))
    r.register("IsRoomLost", Category.CONDITION, _leaf_condition(lambda w: w.room.lost))
    return r


def _fire_state(world: FireSim) -> tuple[int]:
    return world.observe().fire_state


def _victim_fire_state(world: FireSim) -> tuple[int, int]:
    return world.observe().victim_fire_state


def _reward_s1(world: FireSim, status: Status) -> float:
    out = world.last_outcome
    r = reward_scenario1(out) if out is not None else None
    return 0.0 if r is None else r


def _reward_s2_action(world: FireSim, status: Status) -> float:
    out = world.last_outcome
    r = reward_scenario2_action(out, out.intensity_before) if out is not None else None
    return 0.0 if r is None else r


def _reward_s2_composite(world: FireSim, status: Status) -> float:
    out = world.last_outcome
    if out is None:
        # the chosen subtree touched nothing in the world this tick
        return {SUCCESS: 10.0, FAILURE: -10.0}.get(status, 0.0)
    return reward_scenario2_composite(out)


def _extinguisher_executor(actions: list[str]):
    def execute(world: FireSim, index: int) -> Status:
        return world.use_extinguisher(actions[index]).status
    return execute


def fire_bindings(params: Callable[[str], LearnerParams] | None = None,
                  rng: Callable[[str], random.Random] | None = None) -> Bindings:
    b = Bindings(
        states={"fire_type": _fire_state, "victim_fire": _victim_fire_state},
        rewards={"scenario1_extinguisher": _reward_s1,
                 "scenario2_extinguisher": _reward_s2_action,
                 "scenario2_composite": _reward_s2_composite},
        executors={"use_extinguisher": _extinguisher_executor},
        actions={"save_victim": lambda w: w.save_victim().status,
                 "change_room": lambda w: w.change_room().status},
        conditions={"has_victim": lambda w: w.room.has_victim,
                    "has_fire": lambda w: w.room.has_fire,
                    "room_lost": lambda w: w.room.lost},
    )
    if params is not None:
        b.params = params
    if rng is not None:
        b.rng = rng
    return b


def scenario_tree_text(scenario: int) -> str:
    return resources.files("btlearn").joinpath(f"trees/scenario{scenario}.bt3.json").read_text(
        encoding="utf-8")
