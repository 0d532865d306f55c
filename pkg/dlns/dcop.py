"""
DCOP model for DLNS
Variables, finite integer domains, binary extended-utility functions, agent
ownership and the objective F(sigma).
"""

from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Set, Tuple

import numpy as np

from dlns.errors import StructuralError
from dlns.utility import NEG_INF, ExtendedUtility, eu_max, is_neg_inf, to_extended, to_float

# variable id -> domain value; may be partial
Assignment = Dict[int, int]


@dataclass(frozen=True, eq=False)
class BinaryFunction:
    """A utility table over an unordered pair of variables.

    `table[a, b]` is the utility of (scope[0] = domains[0][a], scope[1] = domains[1][b]);
    NEG_INF entries are stored as -inf.
    """

    fid: int
    scope: Tuple[int, int]
    domains: Tuple[Tuple[int, ...], Tuple[int, ...]]
    table: np.ndarray

    def __post_init__(self):
        if len(self.scope) != 2 or self.scope[0] == self.scope[1]:
            raise StructuralError(f"function {self.fid}: scope must hold 2 distinct variables, got {self.scope}")
        table = np.array(self.table, dtype=np.float64)
        expected = (len(self.domains[0]), len(self.domains[1]))
        if table.shape != expected:
            raise StructuralError(f"function {self.fid}: table shape {table.shape} does not cover {expected}")
        if np.isnan(table).any() or np.isposinf(table).any():
            raise StructuralError(f"function {self.fid}: table holds NaN or +inf")
        finite = table[np.isfinite(table)]
        if (finite < 0).any():
            raise StructuralError(f"function {self.fid}: finite utilities must be >= 0")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "scope", (int(self.scope[0]), int(self.scope[1])))
        object.__setattr__(self, "domains", (tuple(self.domains[0]), tuple(self.domains[1])))
        object.__setattr__(self, "_index", (
            {value: i for i, value in enumerate(self.domains[0])},
            {value: i for i, value in enumerate(self.domains[1])},
        ))

    @classmethod
    def from_entries(cls, fid: int, scope: Tuple[int, int], domains, entries: Iterable[Tuple[int, int, ExtendedUtility]]):
        """Build from (value_i, value_j, utility) triples; the triples must cover D_i x D_j"""
        index_i = {value: i for i, value in enumerate(domains[0])}
        index_j = {value: j for j, value in enumerate(domains[1])}
        table = np.full((len(domains[0]), len(domains[1])), np.nan)
        for vi, vj, utility in entries:
            if vi not in index_i or vj not in index_j:
                raise StructuralError(f"function {fid}: entry ({vi}, {vj}) outside the domains")
            table[index_i[vi], index_j[vj]] = to_float(utility)
        if np.isnan(table).any():
            raise StructuralError(f"function {fid}: table is not total over D_i x D_j")
        return cls(fid, scope, domains, table)

    def position(self, var: int) -> int:
        if var == self.scope[0]:
            return 0
        if var == self.scope[1]:
            return 1
        raise StructuralError(f"variable {var} is not in the scope of function {self.fid}")

    def other(self, var: int) -> int:
        return self.scope[1 - self.position(var)]

    def index_of(self, var: int, value: int) -> int:
        index = self._index[self.position(var)]
        if value not in index:
            raise StructuralError(f"value {value} outside the domain of variable {var}")
        return index[value]

    def oriented(self, row_var: int) -> np.ndarray:
        """Table with rows indexed by `row_var`'s domain"""
        return self.table if self.position(row_var) == 0 else self.table.T

    def row(self, var: int, value: int) -> np.ndarray:
        """Utilities over the other variable's domain with `var` fixed to `value`"""
        return self.oriented(var)[self.index_of(var, value)]

    def lookup(self, var_a: int, value_a: int, var_b: int, value_b: int) -> ExtendedUtility:
        ia = self.index_of(var_a, value_a)
        ib = self.index_of(var_b, value_b)
        if self.position(var_a) == 0:
            return to_extended(self.table[ia, ib])
        return to_extended(self.table[ib, ia])

    def max_value(self) -> ExtendedUtility:
        return to_extended(self.table.max())

    def entries(self) -> Iterator[Tuple[int, int, ExtendedUtility]]:
        for a, vi in enumerate(self.domains[0]):
            for b, vj in enumerate(self.domains[1]):
                yield vi, vj, to_extended(self.table[a, b])


@dataclass(frozen=True)
class Meeting:
    variable: int
    duration: int
    participants: Tuple[int, ...]


@dataclass
class MeetingMetadata:
    """Event-as-variable meeting scheduling data attached to an instance"""

    meetings: Dict[int, Meeting]
    preferences: Dict[int, Tuple[int, ...]]
    horizon: int

    def shared_participants(self, var_a: int, var_b: int) -> Set[int]:
        return set(self.meetings[var_a].participants) & set(self.meetings[var_b].participants)

    def overlaps(self, var_a: int, start_a: int, var_b: int, start_b: int) -> bool:
        end_a = start_a + self.meetings[var_a].duration
        end_b = start_b + self.meetings[var_b].duration
        return start_a < end_b and start_b < end_a

    def preference(self, var: int, start: int) -> int:
        return sum(self.preferences[p][start] for p in self.meetings[var].participants)

    @property
    def participants(self) -> Set[int]:
        return set(self.preferences)


@dataclass
class DcopInstance:
    """The tuple <X, D, F, A, alpha> with binary functions and one variable per agent"""

    variables: List[int]
    domains: Dict[int, Tuple[int, ...]]
    functions: List[BinaryFunction]
    ownership: Dict[int, int]
    meetings: Optional[MeetingMetadata] = None
    name: str = "instance"
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.variables = [int(v) for v in self.variables]
        self.domains = {int(v): tuple(int(x) for x in dom) for v, dom in self.domains.items()}
        self.ownership = {int(v): int(a) for v, a in self.ownership.items()}
        self._validate()
        self._by_pair: Dict[FrozenSet[int], BinaryFunction] = {}
        self._by_id: Dict[int, BinaryFunction] = {}
        self._incident: Dict[int, List[BinaryFunction]] = {v: [] for v in self.variables}
        for f in self.functions:
            key = frozenset(f.scope)
            if key in self._by_pair:
                raise StructuralError(f"more than one function over pair {sorted(key)}")
            if f.fid in self._by_id:
                raise StructuralError(f"duplicate function id {f.fid}")
            self._by_pair[key] = f
            self._by_id[f.fid] = f
            for var in f.scope:
                self._incident[var].append(f)
        for var in self._incident:
            self._incident[var].sort(key=lambda f: f.fid)
        self._agent_var = {agent: var for var, agent in self.ownership.items()}

    def _validate(self):
        if len(set(self.variables)) != len(self.variables):
            raise StructuralError("duplicate variable ids")
        for var in self.variables:
            if not self.domains.get(var):
                raise StructuralError(f"variable {var} has no domain")
            if var not in self.ownership:
                raise StructuralError(f"variable {var} has no owning agent")
        if set(self.domains) - set(self.variables):
            raise StructuralError("domains given for unknown variables")
        if set(self.ownership) - set(self.variables):
            raise StructuralError("ownership given for unknown variables")
        if len(set(self.ownership.values())) != len(self.ownership):
            raise StructuralError("each agent must own exactly one variable")
        for f in self.functions:
            for pos, var in enumerate(f.scope):
                if var not in self.domains:
                    raise StructuralError(f"function {f.fid} refers to unknown variable {var}")
                if f.domains[pos] != self.domains[var]:
                    raise StructuralError(f"function {f.fid} table does not match the domain of {var}")

    @property
    def agents(self) -> List[int]:
        return sorted(self._agent_var)

    @property
    def max_domain_size(self) -> int:
        return max((len(dom) for dom in self.domains.values()), default=0)

    def agent_of(self, var: int) -> int:
        return self.ownership[var]

    def variable_of(self, agent: int) -> int:
        if agent not in self._agent_var:
            raise StructuralError(f"unknown agent {agent}")
        return self._agent_var[agent]

    def function_between(self, var_a: int, var_b: int) -> Optional[BinaryFunction]:
        return self._by_pair.get(frozenset((var_a, var_b)))

    def function_by_id(self, fid: int) -> BinaryFunction:
        return self._by_id[fid]

    def functions_of(self, var: int) -> List[BinaryFunction]:
        if var not in self._incident:
            raise StructuralError(f"unknown variable {var}")
        return self._incident[var]

    def variable_neighbors(self, var: int) -> List[int]:
        return sorted(f.other(var) for f in self.functions_of(var))


def validate_assignment(inst: DcopInstance, a: Mapping[int, int], complete: bool = False) -> None:
    for var, value in a.items():
        if var not in inst.domains:
            raise StructuralError(f"unknown variable {var}")
        if value not in inst.domains[var]:
            raise StructuralError(f"value {value} outside the domain of variable {var}")
    if complete:
        missing = set(inst.variables) - set(a)
        if missing:
            raise StructuralError(f"assignment leaves variables unbound: {sorted(missing)}")


def evaluate_function(f: BinaryFunction, vi: int, vj: int, scope: Optional[Tuple[int, int]] = None) -> ExtendedUtility:
    """f(vi, vj); `scope` names the variables vi and vj belong to (default f.scope)"""
    first, second = scope if scope is not None else f.scope
    if {first, second} != set(f.scope):
        raise StructuralError(f"scope {scope} does not match function {f.fid}")
    return f.lookup(first, vi, second, vj)


def evaluate_total(inst: DcopInstance, a: Mapping[int, int]) -> ExtendedUtility:
    """Sum of every function whose scope is fully bound by `a`"""
    validate_assignment(inst, a)
    total = 0.0
    for f in inst.functions:
        x, y = f.scope
        if x in a and y in a:
            utility = f.lookup(x, a[x], y, a[y])
            if is_neg_inf(utility):
                return NEG_INF
            total += utility
    return total


def max_pair(f: BinaryFunction) -> ExtendedUtility:
    return f.max_value()


def neighbors(inst: DcopInstance, agent: int) -> Set[int]:
    var = inst.variable_of(agent)
    return {inst.agent_of(other) for other in inst.variable_neighbors(var)}


def upper_bound_trivial(inst: DcopInstance) -> ExtendedUtility:
    """Sum of max_pair over all functions: the iteration-0 upper bound"""
    total: ExtendedUtility = 0.0
    for f in inst.functions:
        total = total + max_pair(f)
    return total


__all__ = [
    "Assignment", "BinaryFunction", "DcopInstance", "Meeting", "MeetingMetadata",
    "eu_max", "evaluate_function", "evaluate_total", "max_pair",
    "neighbors", "upper_bound_trivial", "validate_assignment",
]
