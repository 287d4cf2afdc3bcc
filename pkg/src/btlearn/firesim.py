"""Fire-control world: an endless series of rooms with victims and fires.

Scenario 1 makes every action instant. In scenario 2 each fire has an
intensity in {1, 2, 3}; saving a victim takes that many ticks and the right
extinguisher lowers the intensity by one per tick.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from .core import FAILURE, RUNNING, SUCCESS, Status

EXTINGUISHERS = ("A", "B", "C")
FIRE_TYPES = (1, 2, 3)

SAVE = "save_victim"
EXTINGUISH = "use_extinguisher"
CHANGE = "change_room"
BEHAVIORS = (SAVE, EXTINGUISH, CHANGE)
BEHAVIOR_TITLES = {SAVE: "Save Victim", EXTINGUISH: "Use Extinguisher", CHANGE: "Change Room"}

# outcome events
SAVED = "saved-victim"
EXTINGUISHED = "extinguished"
WRONG = "wrong-extinguisher"
CHANGED = "changed-room"
REDUCED = "intensity-reduced"
SAVING = "saving"
NO_VICTIM = "no-victim"
NO_FIRE = "no-fire"
VICTIM_FIRST = "victim-first"
ROOM_LOST = "room-lost"
RIGHT_MOMENT = "right-moment"


@dataclass
class Room:
    has_victim: bool = False
    fire_type: int | None = None
    fire_intensity: int = 0
    lost: bool = False
    save_progress: int = 0

    @property
    def has_fire(self) -> bool:
        return self.fire_type is not None

    def copy(self) -> "Room":
        return Room(self.has_victim, self.fire_type, self.fire_intensity, self.lost,
                    self.save_progress)


@dataclass
class ActionOutcome:
    action: str
    status: Status
    events: list[str] = field(default_factory=list)
    # fire intensity seen by this tick, before any decrement
    intensity_before: int = 0
    extinguisher: str | None = None

    @property
    def right_moment(self) -> bool:
        return RIGHT_MOMENT in self.events


@dataclass(frozen=True)
class Observation:
    fire_type: int  # 0 when there is no fire
    has_victim: int
    # a fire that can still be fought; a lost room's fire does not count
    has_fire: int
    lost: bool

    @property
    def fire_state(self) -> tuple[int]:
        return (self.fire_type,)

    @property
    def victim_fire_state(self) -> tuple[int, int]:
        return (self.has_victim, self.has_fire)


def random_extinguisher_map(rng: random.Random) -> dict[str, int]:
    return dict(zip(EXTINGUISHERS, rng.sample(FIRE_TYPES, len(FIRE_TYPES))))


def ground_truth(room: Room) -> str:
    """The behavior an ideal agent runs in ``room``."""
    if room.has_victim:
        return SAVE
    if room.has_fire and not room.lost:
        return EXTINGUISH
    return CHANGE


class FireSim:
    def __init__(self, scenario: int = 1, seed: int | None = 0, *, victim_prob: float = 0.5,
                 fire_prob: float = 0.5, rng: random.Random | None = None):
        if scenario not in (1, 2):
            raise ValueError(f"scenario must be 1 or 2, got {scenario}")
        self.scenario = scenario
        self.victim_prob = victim_prob
        self.fire_prob = fire_prob
        self.rng = rng if rng is not None else random.Random(seed)
        self.extinguisher_map = random_extinguisher_map(self.rng)
        self.rooms_visited = 0
        self.actions_taken = 0
        self.last_outcome: ActionOutcome | None = None
        self.listeners: list[Callable[[ActionOutcome], None]] = []
        self.room = self.generate_room()

    def generate_room(self) -> Room:
        rng = self.rng
        room = Room(has_victim=rng.random() < self.victim_prob)
        if rng.random() < self.fire_prob:
            room.fire_type = rng.choice(FIRE_TYPES)
            if self.scenario == 2:
                room.fire_intensity = rng.choice((1, 2, 3))
        self.rooms_visited += 1
        return room

    def _finish(self, outcome: ActionOutcome) -> ActionOutcome:
        self.actions_taken += 1
        self.last_outcome = outcome
        for listener in self.listeners:
            listener(outcome)
        return outcome

    def save_victim(self) -> ActionOutcome:
        room = self.room
        out = ActionOutcome(SAVE, FAILURE, intensity_before=room.fire_intensity)
        if not room.has_victim:
            out.events.append(NO_VICTIM)
            return self._finish(out)
        room.save_progress += 1
        if room.save_progress >= max(room.fire_intensity, 1):
            room.has_victim = False
            room.save_progress = 0
            out.status = SUCCESS
            out.events.append(SAVED)
        else:
            out.status = RUNNING
            out.events.append(SAVING)
        return self._finish(out)

    def use_extinguisher(self, ext: str) -> ActionOutcome:
        if ext not in self.extinguisher_map:
            raise ValueError(f"unknown extinguisher {ext!r}")
        room = self.room
        out = ActionOutcome(EXTINGUISH, FAILURE, intensity_before=room.fire_intensity,
                            extinguisher=ext)
        if not room.has_fire:
            out.events.append(NO_FIRE)
        elif room.lost:
            out.events.append(ROOM_LOST)
        elif room.has_victim:
            # the victim has to be saved before the fire can be fought
            out.events.append(VICTIM_FIRST)
        elif self.extinguisher_map[ext] != room.fire_type:
            room.lost = True
            out.events.append(WRONG)
        elif self.scenario == 1 or room.fire_intensity <= 1:
            room.fire_type = None
            room.fire_intensity = 0
            out.status = SUCCESS
            out.events.append(EXTINGUISHED)
        else:
            room.fire_intensity -= 1
            out.status = RUNNING
            out.events.append(REDUCED)
        return self._finish(out)

    def change_room(self) -> ActionOutcome:
        old = self.room
        out = ActionOutcome(CHANGE, SUCCESS, [CHANGED], intensity_before=old.fire_intensity)
        if old.lost or (not old.has_victim and not old.has_fire):
            out.events.append(RIGHT_MOMENT)
        self.room = self.generate_room()
        return self._finish(out)

    def observe(self) -> Observation:
        room = self.room
        return Observation(room.fire_type or 0, int(room.has_victim),
                           int(room.has_fire and not room.lost), room.lost)

    def expected_behavior(self) -> str:
        return ground_truth(self.room)


# -- rewards ----------------------------------------------------------------


def reward_scenario1(outcome: ActionOutcome) -> float | None:
    """+10 for putting the fire out, -10 for the wrong extinguisher."""
    if EXTINGUISHED in outcome.events:
        return 10.0
    if WRONG in outcome.events:
        return -10.0
    return None


def reward_scenario2_action(outcome: ActionOutcome, fire_intensity_at_tick: int) -> float | None:
    if WRONG in outcome.events:
        return -10.0
    if EXTINGUISHED in outcome.events or REDUCED in outcome.events:
        if fire_intensity_at_tick <= 0:
            raise ValueError("a correct extinguisher tick needs a positive fire intensity")
        return 10.0 / fire_intensity_at_tick
    return None


def reward_scenario2_composite(outcome: ActionOutcome, room: Room | None = None) -> float:
    """Root-level reward for the save / extinguish / change-room behaviors.

    ``room`` is the room as it was before the tick; it only matters for
    save attempts whose outcome carries no event.
    """
    events = outcome.events
    if outcome.action == SAVE:
        if NO_VICTIM in events or (room is not None and not room.has_victim):
            return -10.0
        if SAVED in events:
            return 10.0
        return -1.0
    if outcome.action == EXTINGUISH:
        if EXTINGUISHED in events:
            return 10.0
        if REDUCED in events:
            return -1.0
        return -10.0
    if outcome.action == CHANGE:
        return 10.0 if outcome.right_moment else -10.0
    raise ValueError(f"unknown behavior {outcome.action!r}")
