"""
Bounding phase shared by every repair algorithm
The f-hat cache that turns past relaxation optima into per-function upper
estimates, agent contexts, and BOUNDS propagation over the global pseudo-tree.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from dlns.agent_sim import Message, MessageKind, Protocol, Simulator
from dlns.dcop import Assignment, DcopInstance, max_pair
from dlns.errors import ConfigError
from dlns.graph import PseudoTree
from dlns.utility import NEG_INF, ExtendedUtility, eu_max, eu_sum, is_neg_inf

logger = logging.getLogger(__name__)

BOUND_RULES = ("partition", "memoized-mean")


class FHatCache:
    """Per-function upper estimates built from relaxation optima.

    "memoized-mean": an optimized function reads the largest mean
    F_tilde / |E_tilde| over the relaxations that contained it.
    "partition": an optimized function belongs to the latest relaxation that
    contained it; each such group reads min(F_tilde, sum of its max_pair)
    split in proportion to max_pair.
    Never-optimized functions read max_pair under both rules.
    """

    def __init__(self, inst: DcopInstance, rule: str = "partition"):
        if rule not in BOUND_RULES:
            raise ConfigError(f"unknown bound rule {rule!r}; expected one of {BOUND_RULES}")
        self.rule = rule
        self.max_pair: Dict[int, ExtendedUtility] = {f.fid: max_pair(f) for f in inst.functions}
        self.last_fhat: Dict[int, ExtendedUtility] = {}
        self.owner: Dict[int, int] = {}
        self.relaxations: Dict[int, Tuple[ExtendedUtility, FrozenSet[int]]] = {}
        self._reads: Dict[int, ExtendedUtility] = dict(self.max_pair)

    def ever_optimized(self, fid: int) -> bool:
        return fid in self.owner

    def update(self, k: int, relaxed_edges: Iterable[int], f_tilde: ExtendedUtility) -> "FHatCache":
        edges = frozenset(relaxed_edges)
        if not edges:
            return self
        self.relaxations[k] = (f_tilde, edges)
        mean = f_tilde / len(edges)
        for fid in edges:
            if fid in self.last_fhat:
                self.last_fhat[fid] = eu_max([self.last_fhat[fid], mean])
            else:
                self.last_fhat[fid] = mean
            self.owner[fid] = k
        self._refresh()
        return self

    def _refresh(self):
        reads = dict(self.max_pair)
        if self.rule == "memoized-mean":
            reads.update(self.last_fhat)
        else:
            groups: Dict[int, List[int]] = {}
            for fid, k in self.owner.items():
                groups.setdefault(k, []).append(fid)
            for k, members in groups.items():
                f_tilde = self.relaxations[k][0]
                total_max = eu_sum(self.max_pair[fid] for fid in members)
                if is_neg_inf(f_tilde) or is_neg_inf(total_max):
                    for fid in members:
                        reads[fid] = NEG_INF
                    continue
                budget = min(f_tilde, total_max)
                for fid in members:
                    reads[fid] = budget * self.max_pair[fid] / total_max if total_max > 0 else 0.0
        self._reads = reads

    def read(self, fid: int) -> ExtendedUtility:
        return self._reads[fid]

    def upper_bound(self) -> ExtendedUtility:
        return eu_sum(self._reads[fid] for fid in sorted(self._reads))


@dataclass
class Context:
    """What an agent knows about its neighbors' current values"""

    check_ctx: Dict[int, int] = field(default_factory=dict)
    hat_ctx: Dict[int, int] = field(default_factory=dict)


def build_contexts(inst: DcopInstance, x_check: Mapping[int, int], x_hat: Mapping[int, int]) -> Dict[int, Context]:
    contexts = {}
    for agent in inst.agents:
        var = inst.variable_of(agent)
        nbrs = inst.variable_neighbors(var)
        contexts[agent] = Context(
            check_ctx={j: x_check[j] for j in nbrs},
            hat_ctx={j: x_hat[j] for j in nbrs},
        )
    return contexts


class ValueBroadcast(Protocol):
    """Every agent sends its (x_check, x_hat) pair to all neighbors once"""

    name = "VALUE-init"

    def __init__(self, inst: DcopInstance, x_check: Assignment, x_hat: Assignment):
        self.inst = inst
        self.x_check = x_check
        self.x_hat = x_hat
        self.contexts: Dict[int, Context] = {a: Context() for a in inst.agents}

    def step(self, agent, inbox, round_index):
        for message in inbox:
            var = self.inst.variable_of(message.sender)
            self.contexts[agent].check_ctx[var] = message.payload[0]
            self.contexts[agent].hat_ctx[var] = message.payload[1]
        if round_index > 0:
            return [], 0
        var = self.inst.variable_of(agent)
        out = [
            Message(MessageKind.VALUE, agent, self.inst.agent_of(j), (self.x_check[var], self.x_hat[var]))
            for j in self.inst.variable_neighbors(var)
        ]
        return out, 0


class BoundsPropagation(Protocol):
    """Leaf-to-root accumulation of (LB, UB) over the global pseudo-tree"""

    name = "BOUNDS"

    def __init__(self, inst: DcopInstance, tree: PseudoTree, x_check: Assignment,
                 contexts: Mapping[int, Context], cache: FHatCache):
        self.inst = inst
        self.tree = tree
        self.x_check = x_check
        self.contexts = contexts
        self.cache = cache
        self.received: Dict[int, List[Tuple[ExtendedUtility, ExtendedUtility]]] = {a: [] for a in inst.agents}
        self.done = set()
        self.root_totals: Dict[int, Tuple[ExtendedUtility, ExtendedUtility]] = {}
        self.counted_lb: Counter = Counter()
        self.counted_ub: Counter = Counter()

    def step(self, agent, inbox, round_index):
        self.received[agent].extend(m.payload for m in inbox)
        var = self.inst.variable_of(agent)
        if agent in self.done or len(self.received[agent]) < len(self.tree.children[var]):
            return [], 0
        self.done.add(agent)
        own = self.x_check[var]
        ctx = self.contexts[agent].check_ctx
        lb_terms: List[ExtendedUtility] = []
        ub_terms: List[ExtendedUtility] = []
        upward = list(self.tree.pseudo_parents[var])
        parent = self.tree.parent[var]
        if parent is not None:
            upward.append(parent)
        for j in upward:
            f = self.inst.function_between(var, j)
            lb_terms.append(f.lookup(var, own, j, ctx[j]))
            ub_terms.append(self.cache.read(f.fid))
            self.counted_lb[f.fid] += 1
            self.counted_ub[f.fid] += 1
        for child_lb, child_ub in self.received[agent]:
            lb_terms.append(child_lb)
            ub_terms.append(child_ub)
        lb, ub = eu_sum(lb_terms), eu_sum(ub_terms)
        if parent is None:
            self.root_totals[var] = (lb, ub)
            return [], len(upward)
        return [Message(MessageKind.BOUNDS, agent, self.inst.agent_of(parent), (lb, ub))], len(upward)

    def totals(self) -> Tuple[ExtendedUtility, ExtendedUtility]:
        lb = eu_sum(v[0] for _, v in sorted(self.root_totals.items()))
        ub = eu_sum(v[1] for _, v in sorted(self.root_totals.items()))
        return lb, ub


def bound_propagation(tree: PseudoTree, inst: DcopInstance, x_check: Assignment, x_hat: Assignment,
                      cache: FHatCache, sim: Optional[Simulator] = None,
                      contexts: Optional[Mapping[int, Context]] = None) -> Tuple[ExtendedUtility, ExtendedUtility]:
    """(LB, UB) = (F(x_check), sum of f-hat reads) accumulated over `tree`"""
    sim = sim or Simulator(inst.agents)
    contexts = contexts if contexts is not None else build_contexts(inst, x_check, x_hat)
    protocol = BoundsPropagation(inst, tree, x_check, contexts, cache)
    sim.run_phase(protocol)
    return protocol.totals()
