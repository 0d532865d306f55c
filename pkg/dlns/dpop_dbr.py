"""
DPOP-DBR repair
Exact bucket elimination over the whole destroyed subgraph, carrying one
table per relaxation through UTIL messages indexed by separator values.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np
import psutil

import dlns_config
from dlns.agent_sim import Message, MessageKind, Protocol, Simulator
from dlns.bounds import Context
from dlns.dcop import Assignment, DcopInstance
from dlns.errors import CapacityError
from dlns.graph import ConstraintGraph, PseudoTree, dfs_pseudo_tree, induced_subgraph
from dlns.strategies import DestroyFlag, RepairAlgorithm, RepairContext, RepairOutcome
from dlns.utility import eu_sum, to_extended

logger = logging.getLogger(__name__)

BYTES_PER_ENTRY = np.dtype(np.float64).itemsize


@dataclass
class UtilTable:
    """A utility hypercube; axis i is indexed by the domain of variables[i]"""

    variables: Tuple[int, ...]
    table: np.ndarray

    def payload_entries(self) -> int:
        return int(self.table.size)


def _broadcast(util: UtilTable, target: Sequence[int]) -> np.ndarray:
    """View `util` with one axis per target variable (size 1 where absent)"""
    missing = set(util.variables) - set(target)
    if missing:
        raise ValueError(f"variables {sorted(missing)} not in target {list(target)}")
    order = [util.variables.index(v) for v in target if v in util.variables]
    arr = np.transpose(util.table, order)
    dims = iter(arr.shape)
    return arr.reshape([next(dims) if v in util.variables else 1 for v in target])


def memory_limit(max_table_bytes: Optional[int] = None, memory_fraction: Optional[float] = None) -> int:
    config = dlns_config.get_solver_config()
    max_table_bytes = config["max_table_bytes"] if max_table_bytes is None else max_table_bytes
    memory_fraction = config["memory_fraction"] if memory_fraction is None else memory_fraction
    available = psutil.virtual_memory().available
    return int(min(max_table_bytes, available * memory_fraction))


def check_capacity(inst: DcopInstance, tree: PseudoTree, width_cap: int, byte_limit: int):
    """Refuse to start the UTIL phase when any separator or join table is too large"""
    for var in tree.order:
        sep = tree.separator(var)
        if len(sep) > width_cap:
            raise CapacityError(
                f"separator of x{var} has {len(sep)} variables, above width cap {width_cap}",
                size=len(sep), limit=width_cap)
        entries = len(inst.domains[var]) * int(np.prod([len(inst.domains[s]) for s in sep], dtype=np.int64))
        needed = 2 * entries * BYTES_PER_ENTRY
        if needed > byte_limit:
            raise CapacityError(
                f"join tables of x{var} need {needed} bytes, above the {byte_limit} byte memory guard",
                size=needed, limit=byte_limit)


class DpopUtilPropagation(Protocol):
    name = "UTIL-dpop"

    def __init__(self, inst: DcopInstance, tree: PseudoTree, prev_check: Assignment):
        self.inst = inst
        self.tree = tree
        self.prev_check = prev_check
        self.separators = {var: tree.separator(var) for var in tree.order}
        self.joins: Dict[int, Tuple[UtilTable, UtilTable]] = {}
        self._received: Dict[int, List[Tuple[UtilTable, UtilTable]]] = {}

    def step(self, agent, inbox, round_index):
        var = self.inst.variable_of(agent)
        if var not in self.tree or var in self.joins:
            return [], 0
        received = self._received.setdefault(var, [])
        received.extend(m.payload for m in inbox)
        if len(received) < len(self.tree.children[var]):
            return [], 0

        sep = self.separators[var]
        axes = [var] + sep
        shape = [len(self.inst.domains[v]) for v in axes]
        check = np.zeros(shape)
        hat = np.zeros(shape)
        n_preserved = 0
        n_upward = 0
        for f in self.inst.functions_of(var):
            j = f.other(var)
            if j not in self.tree:
                column = f.oriented(var)[:, f.index_of(j, self.prev_check[j])]
                check = check + _broadcast(UtilTable((var,), column), axes)
                n_preserved += 1
            elif j in sep:
                term = _broadcast(UtilTable((var, j), f.oriented(var)), axes)
                check = check + term
                hat = hat + term
                n_upward += 1
        for child_check, child_hat in received:
            check = check + _broadcast(child_check, axes)
            hat = hat + _broadcast(child_hat, axes)
        join_check = UtilTable(tuple(axes), check)
        join_hat = UtilTable(tuple(axes), hat)
        self.joins[var] = (join_check, join_hat)
        checks = int(check.size) * (2 * n_upward + n_preserved)

        parent = self.tree.parent[var]
        if parent is None:
            return [], checks
        payload = (UtilTable(tuple(sep), check.max(axis=0)), UtilTable(tuple(sep), hat.max(axis=0)))
        message = Message(MessageKind.UTIL, agent, self.inst.agent_of(parent), payload)
        return [message], checks


class DpopValuePropagation(Protocol):
    """Top-down argmax over each join; tree children get their separator's values, other neighbors the plain pair"""

    name = "VALUE-dpop"

    def __init__(self, inst: DcopInstance, tree: PseudoTree, joins: Mapping[int, Tuple[UtilTable, UtilTable]],
                 separators: Mapping[int, List[int]], prev_check: Assignment, prev_hat: Assignment):
        self.inst = inst
        self.tree = tree
        self.joins = joins
        self.separators = separators
        self.x_check: Assignment = dict(prev_check)
        self.x_hat: Assignment = dict(prev_hat)
        self.contexts: Dict[int, Context] = {}
        for agent in inst.agents:
            nbrs = inst.variable_neighbors(inst.variable_of(agent))
            self.contexts[agent] = Context({j: prev_check[j] for j in nbrs}, {j: prev_hat[j] for j in nbrs})
        self.decided: Set[int] = set()

    def _learn(self, agent: int, var: int, check_value: int, hat_value: int):
        ctx = self.contexts[agent]
        if var in ctx.check_ctx:
            ctx.check_ctx[var] = check_value
            ctx.hat_ctx[var] = hat_value

    def step(self, agent, inbox, round_index):
        var = self.inst.variable_of(agent)
        sep_values = None
        for message in inbox:
            sender = self.inst.variable_of(message.sender)
            if sender == self.tree.parent.get(var) and var in self.tree:
                sep_values = message.payload
                for s, vc, vh in zip(self.separators[var], *sep_values):
                    self._learn(agent, s, vc, vh)
            else:
                self._learn(agent, sender, *message.payload)
        if var not in self.tree or var in self.decided:
            return [], 0
        if self.tree.parent[var] is not None and sep_values is None:
            return [], 0

        join_check, join_hat = self.joins[var]
        if sep_values is None:
            row_check, row_hat = join_check.table, join_hat.table
        else:
            idx_check = tuple(self.inst.domains[s].index(v) for s, v in zip(self.separators[var], sep_values[0]))
            idx_hat = tuple(self.inst.domains[s].index(v) for s, v in zip(self.separators[var], sep_values[1]))
            row_check = join_check.table[(slice(None),) + idx_check]
            row_hat = join_hat.table[(slice(None),) + idx_hat]
        dom = self.inst.domains[var]
        self.x_check[var] = dom[int(np.argmax(row_check))]
        self.x_hat[var] = dom[int(np.argmax(row_hat))]
        self.decided.add(var)

        out = []
        children = set(self.tree.children[var])
        for j in self.inst.variable_neighbors(var):
            if j in children:
                sep = self.separators[j]
                payload = (tuple(self.x_check[s] for s in sep), tuple(self.x_hat[s] for s in sep))
            else:
                payload = (self.x_check[var], self.x_hat[var])
            out.append(Message(MessageKind.VALUE, agent, self.inst.agent_of(j), payload))
        return out, 0

def solve_relaxed_exact(g_k: ConstraintGraph, inst: DcopInstance, prev_check: Assignment,
                        width_cap: Optional[int] = None, prev_hat: Optional[Assignment] = None,
                        sim: Optional[Simulator] = None, max_table_bytes: Optional[int] = None,
                        memory_fraction: Optional[float] = None):
    """Solve both relaxations exactly over `g_k`.

    Returns (x_check, x_hat, F_check, F_tilde, tree, contexts). Variables outside
    `g_k` keep their values from `prev_check` / `prev_hat`.
    """
    width_cap = dlns_config.get_solver_config()["width_cap"] if width_cap is None else width_cap
    prev_hat = prev_check if prev_hat is None else prev_hat
    sim = sim or Simulator(inst.agents)
    tree = dfs_pseudo_tree(g_k)
    check_capacity(inst, tree, width_cap, memory_limit(max_table_bytes, memory_fraction))

    util = DpopUtilPropagation(inst, tree, prev_check)
    sim.run_phase(util)
    value = DpopValuePropagation(inst, tree, util.joins, util.separators, prev_check, prev_hat)
    sim.run_phase(value)

    f_check = eu_sum(to_extended(util.joins[r][0].table.max()) for r in tree.roots)
    f_tilde = eu_sum(to_extended(util.joins[r][1].table.max()) for r in tree.roots)
    return value.x_check, value.x_hat, f_check, f_tilde, tree, value.contexts


class DpopDbrRepair(RepairAlgorithm):
    """Exact repair over every edge of the destroyed subgraph"""

    def __init__(self, width_cap: Optional[int] = None, max_table_bytes: Optional[int] = None,
                 memory_fraction: Optional[float] = None):
        self.width_cap = dlns_config.get_solver_config()["width_cap"] if width_cap is None else width_cap
        self.max_table_bytes = max_table_bytes
        self.memory_fraction = memory_fraction

    def get_name(self) -> str:
        return "dpop-dbr"

    def get_description(self) -> str:
        return f"DPOP-DBR with width cap {self.width_cap}"

    def repair(self, ctx: RepairContext) -> RepairOutcome:
        destroyed = [ctx.inst.variable_of(a) for a, flag in ctx.flags.items() if flag is DestroyFlag.DESTROYED]
        g_k = induced_subgraph(ctx.graph, destroyed)
        x_check, x_hat, f_check, f_tilde, tree, contexts = solve_relaxed_exact(
            g_k, ctx.inst, ctx.prev_check, self.width_cap, ctx.prev_hat, ctx.sim,
            self.max_table_bytes, self.memory_fraction)
        return RepairOutcome(
            x_check=x_check,
            x_hat=x_hat,
            relaxed_edges=frozenset(g_k.function_ids),
            f_tilde=f_tilde,
            f_check=f_check,
            tree=tree,
            contexts=contexts,
        )
