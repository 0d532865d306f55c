"""
Baselines and the exact oracle
DSA-B local search on the simulated substrate and exhaustive enumeration.
"""

import logging
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

import dlns_config
from dlns.agent_sim import Message, MessageKind, Protocol, Simulator
from dlns.bounds import ValueBroadcast
from dlns.dcop import Assignment, DcopInstance, evaluate_total
from dlns.engine import TerminationRule, initialize_values
from dlns.errors import CapacityError, ConfigError
from dlns.trace import RunTrace, TraceRow
from dlns.utility import ExtendedUtility, is_neg_inf, to_extended

logger = logging.getLogger(__name__)


@dataclass
class ExactResult:
    assignment: Assignment
    utility: ExtendedUtility
    infeasible: bool


def objective_tensor(inst: DcopInstance, row_cap: Optional[int] = None) -> Tuple[List[int], np.ndarray]:
    """F over every complete assignment; axis i follows the i-th variable in id order"""
    row_cap = dlns_config.get_solver_config()["exact_row_cap"] if row_cap is None else row_cap
    order = sorted(inst.variables)
    shape = [len(inst.domains[v]) for v in order]
    rows = int(np.prod(shape, dtype=np.float64))
    if rows > row_cap:
        raise CapacityError(f"exact enumeration needs {rows} rows, above the cap of {row_cap}",
                            size=rows, limit=row_cap)
    axis = {var: i for i, var in enumerate(order)}
    total = np.zeros(shape)
    for f in inst.functions:
        a, b = f.scope
        table = f.table if axis[a] < axis[b] else f.table.T
        view = [1] * len(order)
        view[axis[a]] = shape[axis[a]]
        view[axis[b]] = shape[axis[b]]
        total = total + table.reshape(view)
    return order, total


def exact_solve(inst: DcopInstance, row_cap: Optional[int] = None) -> ExactResult:
    """Optimal assignment by enumeration; the first optimum in lexicographic value order wins ties"""
    order, total = objective_tensor(inst, row_cap)
    if not order:
        return ExactResult({}, 0.0, False)
    flat = int(np.argmax(total))
    best = to_extended(total.flat[flat])
    index = np.unravel_index(flat, total.shape)
    assignment = {var: inst.domains[var][int(i)] for var, i in zip(order, index)}
    if is_neg_inf(best):
        logger.warning("instance %s has no feasible assignment", inst.name)
    return ExactResult(assignment, best, is_neg_inf(best))


def exact_trace(inst: DcopInstance, row_cap: Optional[int] = None) -> RunTrace:
    """Single-row trace whose bounds are both the optimum"""
    started = time.perf_counter()
    result = exact_solve(inst, row_cap)
    rho = 1.0 if not result.infeasible and result.utility > 0 else None
    row = TraceRow(k=0, sim_time=0.0, wall_ms=(time.perf_counter() - started) * 1000.0,
                   lb=result.utility, ub=result.utility, best_lb=result.utility, best_ub=result.utility,
                   rho=rho, msgs=0, payload=0, max_payload=0, ccs=0)
    return RunTrace(algorithm="exact", rows=[row], best_solution=result.assignment,
                    instance_name=inst.name, infeasible=result.infeasible)


class DsaRound(Protocol):
    """One DSA-B round: decide against the current context, announce changes"""

    name = "DSA"

    def __init__(self, inst: DcopInstance, values: Assignment, contexts: Dict[int, Dict[int, int]],
                 p: float, rng: np.random.Generator):
        self.inst = inst
        self.values = values
        self.contexts = contexts
        self.p = p
        self.rng = rng

    def _score(self, var: int, value: int) -> Tuple[int, float]:
        """(-violations, finite utility) of `value` against the context"""
        violations, utility = 0, 0.0
        ctx = self.contexts[var]
        for f in self.inst.functions_of(var):
            j = f.other(var)
            u = f.lookup(var, value, j, ctx[j])
            if is_neg_inf(u):
                violations += 1
            else:
                utility += u
        return -violations, utility

    def step(self, agent, inbox, round_index):
        var = self.inst.variable_of(agent)
        for message in inbox:
            self.contexts[var][self.inst.variable_of(message.sender)] = message.payload[0]
        if round_index > 0:
            return [], 0
        dom = self.inst.domains[var]
        scores = [self._score(var, value) for value in dom]
        checks = len(dom) * len(self.inst.functions_of(var))
        current = scores[dom.index(self.values[var])]
        best = max(scores)
        candidates = [v for v, s in zip(dom, scores) if s == best and v != self.values[var]]
        improving = best > current
        lateral = best == current and current[0] < 0
        draw = self.rng.random()
        if not candidates or not (improving or lateral) or draw >= self.p:
            return [], checks
        self.values[var] = candidates[0]
        out = [
            Message(MessageKind.VALUE, agent, self.inst.agent_of(j), (self.values[var], self.values[var]))
            for j in self.inst.variable_neighbors(var)
        ]
        return out, checks


def dsa_b(inst: DcopInstance, p: Optional[float] = None, iterations: Optional[int] = None, seed: int = 0,
          term: Optional[TerminationRule] = None, init_mode: str = "random",
          t_cc: Optional[float] = None, t_msg: Optional[float] = None) -> RunTrace:
    """DSA-B; the trace carries best-so-far quality and no upper bound"""
    config = dlns_config.get_solver_config()
    p = config["dsa_probability"] if p is None else p
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"DSA probability must lie in [0, 1], got {p}")
    if p == 0.0:
        logger.warning("DSA-B with p=0 never moves; the assignment stays at its initial values")
    if term is None:
        term = TerminationRule(max_iterations=config["iterations"] if iterations is None else iterations)
    term.validate()

    started = time.perf_counter()
    sim = Simulator(inst.agents, t_cc=t_cc, t_msg=t_msg)
    values = initialize_values(inst, init_mode, seed)
    broadcast = ValueBroadcast(inst, values, values)
    sim.run_phase(broadcast)
    contexts = {inst.variable_of(a): dict(ctx.check_ctx) for a, ctx in broadcast.contexts.items()}
    rng = np.random.default_rng([seed, 1])
    trace = RunTrace(algorithm="dsa", instance_name=inst.name, seed=seed)

    quality = evaluate_total(inst, values)
    best = quality
    best_solution = dict(values)

    def record(k: int, row_started: float):
        window = sim.take_window()
        trace.rows.append(TraceRow(
            k=k, sim_time=sim.metrics.simulated_time, wall_ms=(time.perf_counter() - row_started) * 1000.0,
            lb=quality, ub=None, best_lb=best, best_ub=None, rho=None,
            msgs=window.messages, payload=window.total_payload, max_payload=window.max_payload,
            ccs=window.constraint_checks, max_agent_ccs=window.max_agent_checks,
        ))

    record(0, started)

    k = 0
    while not term.should_stop(k, best, None, sim.metrics.simulated_time, time.perf_counter() - started):
        row_started = time.perf_counter()
        k += 1
        sim.run_phase(DsaRound(inst, values, contexts, p, rng))
        quality = evaluate_total(inst, values)
        if quality > best:
            best = quality
            best_solution = dict(values)
        record(k, row_started)

    trace.best_solution = best_solution
    trace.infeasible = is_neg_inf(best)
    logger.info("DSA-B on %s: %d rounds, best %s", inst.name, k, best)
    return trace
