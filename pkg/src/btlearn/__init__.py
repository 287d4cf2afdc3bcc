"""Behavior trees with embedded Q-learning nodes, plus a fire-control testbed."""

from .core import (Action, BehaviorTree, Blackboard, Category, Condition, Inverter, MemPriority,
                   MemSequence, Node, Parallel, Priority, Repeater, Sequence, Status, TickContext,
                   tick)
from .learning import EpisodeAccumulator, LearningActionNode, LearningCompositeNode, interrupt
from .rl import LearnerParams, QLearner, QTable, q_update, q_update_smdp

__version__ = "0.1.0"
