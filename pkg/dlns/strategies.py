"""
Pluggable destroy and repair strategies for the D-LNS loop
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, Optional, Type

from dlns.dcop import Assignment, DcopInstance
from dlns.errors import ConfigError
from dlns.graph import ConstraintGraph, EdgeHistory, PseudoTree
from dlns.utility import ExtendedUtility


class DestroyFlag(Enum):
    DESTROYED = "o"
    PRESERVED = "*"


@dataclass
class RepairContext:
    """Everything a repair algorithm may read during iteration k"""

    inst: DcopInstance
    graph: ConstraintGraph
    flags: Dict[int, DestroyFlag]
    prev_check: Assignment
    prev_hat: Assignment
    history: EdgeHistory
    sim: Any
    k: int


@dataclass
class RepairOutcome:
    x_check: Assignment
    x_hat: Assignment
    relaxed_edges: FrozenSet[int]
    f_tilde: ExtendedUtility
    f_check: ExtendedUtility
    tree: Optional[PseudoTree] = None
    contexts: Dict[int, Any] = field(default_factory=dict)


class DestroyStrategy(ABC):
    """Base class for all destroy strategies"""

    @abstractmethod
    def get_name(self) -> str:
        """Return the strategy name"""

    @abstractmethod
    def get_description(self) -> str:
        """Return the strategy description"""

    @abstractmethod
    def destroy(self, inst: DcopInstance, current: Assignment, k: int) -> Dict[int, DestroyFlag]:
        """Flag every agent DESTROYED or PRESERVED for iteration k"""


class RepairAlgorithm(ABC):
    """Base class for all repair algorithms"""

    @abstractmethod
    def get_name(self) -> str:
        """Return the algorithm name"""

    @abstractmethod
    def get_description(self) -> str:
        """Return the algorithm description"""

    @abstractmethod
    def repair(self, ctx: RepairContext) -> RepairOutcome:
        """Re-optimize the destroyed variables and report both relaxations"""


class StrategyRegistry:
    """Registry for managing destroy strategies and repair algorithms by name"""

    def __init__(self):
        self.destroy_strategies: Dict[str, Type[DestroyStrategy]] = {}
        self.repair_algorithms: Dict[str, Type[RepairAlgorithm]] = {}
        self._register_default_strategies()

    def _register_default_strategies(self):
        """Register the built-in strategies"""
        from dlns.destroy import DomainKnowledgeDestroy, RandomDestroy
        from dlns.dpop_dbr import DpopDbrRepair
        from dlns.tdbr import TdbrRepair

        self.register_destroy("random", RandomDestroy)
        self.register_destroy("dk", DomainKnowledgeDestroy)
        self.register_repair("tdbr", TdbrRepair)
        self.register_repair("dpop-dbr", DpopDbrRepair)

    def register_destroy(self, name: str, cls: Type[DestroyStrategy]):
        self.destroy_strategies[name] = cls

    def register_repair(self, name: str, cls: Type[RepairAlgorithm]):
        self.repair_algorithms[name] = cls

    def create_destroy(self, name: str, **params) -> DestroyStrategy:
        if name not in self.destroy_strategies:
            raise ConfigError(f"unknown destroy strategy {name!r}; available: {sorted(self.destroy_strategies)}")
        return self.destroy_strategies[name](**params)

    def create_repair(self, name: str, **params) -> RepairAlgorithm:
        if name not in self.repair_algorithms:
            raise ConfigError(f"unknown repair algorithm {name!r}; available: {sorted(self.repair_algorithms)}")
        return self.repair_algorithms[name](**params)

    def list_strategies(self) -> str:
        """List all registered strategies"""
        listing = "Destroy strategies:\n"
        for name, cls in self.destroy_strategies.items():
            listing += f"- {name}: {cls.__doc__.strip() if cls.__doc__ else ''}\n"
        listing += "Repair algorithms:\n"
        for name, cls in self.repair_algorithms.items():
            listing += f"- {name}: {cls.__doc__.strip() if cls.__doc__ else ''}\n"
        return listing


_registry: Optional[StrategyRegistry] = None


def get_registry() -> StrategyRegistry:
    global _registry
    if _registry is None:
        _registry = StrategyRegistry()
    return _registry
