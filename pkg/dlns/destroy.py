"""
Destroy strategies
Random Bernoulli destroy, meeting-overlap (domain knowledge) destroy and a
scripted schedule used for replaying fixed traces.
"""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Set

import numpy as np

from dlns.dcop import Assignment, DcopInstance
from dlns.errors import ConfigError, StrategyError
from dlns.strategies import DestroyFlag, DestroyStrategy
import dlns_config

logger = logging.getLogger(__name__)


def destroy_random(agents: Iterable[int], p_destroy: float, seed: int, k: int) -> Dict[int, DestroyFlag]:
    """Independent Bernoulli(p_destroy) per agent; the stream depends only on (seed, k)"""
    if not 0.0 <= p_destroy <= 1.0:
        raise ConfigError(f"p_destroy must lie in [0, 1], got {p_destroy}")
    agents = sorted(agents)
    rng = np.random.default_rng([seed, k])
    draws = rng.random(len(agents))
    return {
        agent: DestroyFlag.DESTROYED if draw < p_destroy else DestroyFlag.PRESERVED
        for agent, draw in zip(agents, draws)
    }


def violated_meetings(inst: DcopInstance, current: Assignment) -> Set[int]:
    """Variables whose meeting overlaps another meeting sharing a participant"""
    if inst.meetings is None:
        raise StrategyError("domain-knowledge destroy needs meeting metadata")
    md = inst.meetings
    violated = set()
    for f in inst.functions:
        a, b = f.scope
        if md.shared_participants(a, b) and md.overlaps(a, current[a], b, current[b]):
            violated.update((a, b))
    return violated


def destroy_domain_knowledge(inst: DcopInstance, current: Assignment) -> Dict[int, DestroyFlag]:
    violated = violated_meetings(inst, current)
    return {
        agent: DestroyFlag.DESTROYED if inst.variable_of(agent) in violated else DestroyFlag.PRESERVED
        for agent in inst.agents
    }


class RandomDestroy(DestroyStrategy):
    """Destroy each agent independently with probability p_destroy"""

    def __init__(self, p_destroy: Optional[float] = None, seed: int = 0):
        self.p_destroy = dlns_config.get_solver_config()["p_destroy"] if p_destroy is None else p_destroy
        if not 0.0 <= self.p_destroy <= 1.0:
            raise ConfigError(f"p_destroy must lie in [0, 1], got {self.p_destroy}")
        self.seed = seed

    def get_name(self) -> str:
        return "random"

    def get_description(self) -> str:
        return f"Bernoulli destroy with p={self.p_destroy}"

    def destroy(self, inst, current, k):
        return destroy_random(inst.agents, self.p_destroy, self.seed, k)


class DomainKnowledgeDestroy(DestroyStrategy):
    """Destroy the meetings involved in an overlap between shared participants"""

    def __init__(self, **_ignored):
        pass

    def get_name(self) -> str:
        return "dk"

    def get_description(self) -> str:
        return "Destroy overlapping meetings"

    def destroy(self, inst, current, k):
        return destroy_domain_knowledge(inst, current)


class ScriptedDestroy(DestroyStrategy):
    """Replay a fixed list of destroyed-agent sets, one per iteration"""

    def __init__(self, schedule: Sequence[Iterable[int]]):
        self.schedule: List[Set[int]] = [set(s) for s in schedule]

    def get_name(self) -> str:
        return "scripted"

    def get_description(self) -> str:
        return f"Scripted destroy over {len(self.schedule)} iterations"

    def destroy(self, inst, current, k):
        if k < 1 or k > len(self.schedule):
            raise StrategyError(f"no scripted destroy set for iteration {k}")
        destroyed = self.schedule[k - 1]
        unknown = destroyed - set(inst.agents)
        if unknown:
            raise StrategyError(f"scripted destroy names unknown agents {sorted(unknown)}")
        return {
            agent: DestroyFlag.DESTROYED if agent in destroyed else DestroyFlag.PRESERVED
            for agent in inst.agents
        }
