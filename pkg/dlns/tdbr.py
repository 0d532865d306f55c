"""
T-DBR repair
Relaxes the destroyed subgraph to a pseudo-tree and solves the lower-bound and
upper-bound relaxations together with linear-size UTIL messages.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Set, Tuple

import numpy as np

from dlns.agent_sim import Message, MessageKind, Protocol, Simulator
from dlns.bounds import Context, FHatCache, bound_propagation
from dlns.dcop import Assignment, DcopInstance
from dlns.graph import ConstraintGraph, EdgeHistory, PseudoTree, dfs_pseudo_tree, induced_subgraph
from dlns.strategies import DestroyFlag, RepairAlgorithm, RepairContext, RepairOutcome
from dlns.utility import ExtendedUtility, eu_sum, to_extended

logger = logging.getLogger(__name__)


def relaxation(flags: Mapping[int, DestroyFlag], g: ConstraintGraph, history: Optional[EdgeHistory] = None,
               inst: Optional[DcopInstance] = None, seed: Optional[int] = None) -> PseudoTree:
    """Pseudo-tree over the destroyed variables, ignoring preserved ones and their functions"""
    destroyed = [
        inst.variable_of(agent) if inst is not None else agent
        for agent, flag in flags.items() if flag is DestroyFlag.DESTROYED
    ]
    return dfs_pseudo_tree(induced_subgraph(g, destroyed), history, seed)


@dataclass
class UtilPair:
    """Both relaxations' tables for one agent, rows = own values, columns = parent values"""

    u_check: np.ndarray
    u_hat: np.ndarray
    projected_check: Optional[np.ndarray] = None
    projected_hat: Optional[np.ndarray] = None


class UtilPropagation(Protocol):
    name = "UTIL"

    def __init__(self, inst: DcopInstance, tree: PseudoTree, prev_check: Assignment):
        self.inst = inst
        self.tree = tree
        self.prev_check = prev_check
        self.utils: Dict[int, UtilPair] = {}
        self._received: Dict[int, List[Tuple[np.ndarray, np.ndarray]]] = {}

    def _preserved_terms(self, var: int) -> Tuple[np.ndarray, int]:
        """Sum over preserved neighbors j of f(x_i, x_check_j), indexed by own value"""
        dom = self.inst.domains[var]
        total = np.zeros(len(dom))
        count = 0
        for f in self.inst.functions_of(var):
            j = f.other(var)
            if j in self.tree:
                continue
            total = total + f.oriented(var)[:, f.index_of(j, self.prev_check[j])]
            count += 1
        return total, count

    def step(self, agent, inbox, round_index):
        var = self.inst.variable_of(agent)
        if var not in self.tree or var in self.utils:
            return [], 0
        received = self._received.setdefault(var, [])
        received.extend(m.payload for m in inbox)
        if len(received) < len(self.tree.children[var]):
            return [], 0

        d_i = len(self.inst.domains[var])
        unary_check, n_preserved = self._preserved_terms(var)
        unary_hat = np.zeros(d_i)
        for child_check, child_hat in received:
            unary_check = unary_check + child_check
            unary_hat = unary_hat + child_hat

        parent = self.tree.parent[var]
        if parent is None:
            self.utils[var] = UtilPair(u_check=unary_check, u_hat=unary_hat)
            return [], d_i * n_preserved

        f = self.inst.function_between(var, parent)
        table = f.oriented(var)
        u_check = table + unary_check[:, None]
        u_hat = table + unary_hat[:, None]
        pair = UtilPair(u_check, u_hat, u_check.max(axis=0), u_hat.max(axis=0))
        self.utils[var] = pair
        checks = d_i * len(self.inst.domains[parent]) * (2 + n_preserved)
        message = Message(MessageKind.UTIL, agent, self.inst.agent_of(parent),
                          (pair.projected_check, pair.projected_hat))
        return [message], checks


def util_propagation(tree: PseudoTree, inst: DcopInstance, prev_check: Assignment,
                     sim: Optional[Simulator] = None) -> Dict[int, UtilPair]:
    protocol = UtilPropagation(inst, tree, prev_check)
    (sim or Simulator(inst.agents)).run_phase(protocol)
    return protocol.utils


class ValuePropagation(Protocol):
    name = "VALUE"

    def __init__(self, inst: DcopInstance, tree: PseudoTree, utils: Mapping[int, UtilPair],
                 prev_check: Assignment, prev_hat: Assignment):
        self.inst = inst
        self.tree = tree
        self.utils = utils
        self.x_check: Assignment = dict(prev_check)
        self.x_hat: Assignment = dict(prev_hat)
        self.contexts: Dict[int, Context] = {}
        for agent in inst.agents:
            var = inst.variable_of(agent)
            nbrs = inst.variable_neighbors(var)
            self.contexts[agent] = Context({j: prev_check[j] for j in nbrs}, {j: prev_hat[j] for j in nbrs})
        self.decided: Set[int] = set()

    def step(self, agent, inbox, round_index):
        ctx = self.contexts[agent]
        for message in inbox:
            sender = self.inst.variable_of(message.sender)
            ctx.check_ctx[sender], ctx.hat_ctx[sender] = message.payload
        var = self.inst.variable_of(agent)
        if var not in self.tree or var in self.decided:
            return [], 0
        parent = self.tree.parent[var]
        pair = self.utils[var]
        if parent is None:
            row_check, row_hat = pair.u_check, pair.u_hat
        else:
            parent_agent = self.inst.agent_of(parent)
            if not any(m.sender == parent_agent for m in inbox):
                return [], 0
            f = self.inst.function_between(var, parent)
            row_check = pair.u_check[:, f.index_of(parent, ctx.check_ctx[parent])]
            row_hat = pair.u_hat[:, f.index_of(parent, ctx.hat_ctx[parent])]
        dom = self.inst.domains[var]
        self.x_check[var] = dom[int(np.argmax(row_check))]
        self.x_hat[var] = dom[int(np.argmax(row_hat))]
        self.decided.add(var)
        out = [
            Message(MessageKind.VALUE, agent, self.inst.agent_of(j), (self.x_check[var], self.x_hat[var]))
            for j in self.inst.variable_neighbors(var)
        ]
        return out, 0


def value_propagation(tree: PseudoTree, inst: DcopInstance, utils: Mapping[int, UtilPair],
                      prev_check: Assignment, prev_hat: Assignment,
                      sim: Optional[Simulator] = None) -> Tuple[Assignment, Assignment, Dict[int, Context]]:
    protocol = ValuePropagation(inst, tree, utils, prev_check, prev_hat)
    (sim or Simulator(inst.agents)).run_phase(protocol)
    return protocol.x_check, protocol.x_hat, protocol.contexts


def root_optima(tree: PseudoTree, utils: Mapping[int, UtilPair]) -> Tuple[ExtendedUtility, ExtendedUtility]:
    """Summed root maxima of both relaxations over the forest"""
    check = eu_sum(to_extended(utils[r].u_check.max()) for r in tree.roots)
    hat = eu_sum(to_extended(utils[r].u_hat.max()) for r in tree.roots)
    return check, hat


def fhat_update(cache: FHatCache, tree: PseudoTree, f_tilde: ExtendedUtility, k: int) -> FHatCache:
    return cache.update(k, tree.tree_edges, f_tilde)


class TdbrRepair(RepairAlgorithm):
    """Tree-based bounded repair"""

    def get_name(self) -> str:
        return "tdbr"

    def get_description(self) -> str:
        return "T-DBR: UTIL/VALUE over a pseudo-tree of the destroyed variables"

    def repair(self, ctx: RepairContext) -> RepairOutcome:
        tree = relaxation(ctx.flags, ctx.graph, ctx.history, ctx.inst)
        utils = util_propagation(tree, ctx.inst, ctx.prev_check, ctx.sim)
        x_check, x_hat, contexts = value_propagation(tree, ctx.inst, utils, ctx.prev_check, ctx.prev_hat, ctx.sim)
        f_check, f_tilde = root_optima(tree, utils)
        logger.debug("iteration %d: |LN|=%d, tree edges %s, relaxed optima %s / %s",
                     ctx.k, len(tree.nodes), sorted(tree.tree_edges), f_check, f_tilde)
        return RepairOutcome(
            x_check=x_check,
            x_hat=x_hat,
            relaxed_edges=tree.tree_edges,
            f_tilde=f_tilde,
            f_check=f_check,
            tree=tree,
            contexts=contexts,
        )


__all__ = [
    "TdbrRepair", "UtilPair", "UtilPropagation", "ValuePropagation", "bound_propagation",
    "fhat_update", "relaxation", "root_optima", "util_propagation", "value_propagation",
]
