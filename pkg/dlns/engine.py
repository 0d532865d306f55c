"""
D-LNS engine
Value initialization, then destroy -> repair -> accept -> bound iterations
until a termination rule fires, with anytime best-bound bookkeeping.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

import dlns_config
from dlns.agent_sim import Simulator
from dlns.bounds import FHatCache, ValueBroadcast, bound_propagation, build_contexts
from dlns.dcop import Assignment, DcopInstance, evaluate_total, validate_assignment
from dlns.errors import CapacityError, ConfigError, RunError
from dlns.graph import EdgeHistory, build_graph, dfs_pseudo_tree, update_history
from dlns.strategies import DestroyFlag, DestroyStrategy, RepairAlgorithm, RepairContext
from dlns.trace import RunTrace, TraceRow, compute_rho
from dlns.utility import ABS_TOL, ExtendedUtility, eu_sum, is_neg_inf

logger = logging.getLogger(__name__)

INIT_MODES = ("random", "greedy")


def initialize_values(inst: DcopInstance, mode: str = "random", seed: int = 0) -> Assignment:
    """Complete starting assignment.

    "random" draws each value uniformly from a seeded stream; "greedy" walks the
    variables in id order and picks the value with the best utility against the
    neighbors assigned so far (lowest value on ties).
    """
    if mode == "random":
        rng = np.random.default_rng(seed)
        return {var: inst.domains[var][int(rng.integers(len(inst.domains[var])))] for var in sorted(inst.variables)}
    if mode != "greedy":
        raise ConfigError(f"unknown init mode {mode!r}; expected one of {INIT_MODES}")
    assignment: Assignment = {}
    for var in sorted(inst.variables):
        best_value, best_score = None, None
        for value in inst.domains[var]:
            score = eu_sum(
                f.lookup(var, value, f.other(var), assignment[f.other(var)])
                for f in inst.functions_of(var) if f.other(var) in assignment
            )
            if best_score is None or score > best_score:
                best_value, best_score = value, score
        assignment[var] = best_value
    return assignment


def accept(candidate: Assignment, previous: Assignment, inst: DcopInstance) -> Assignment:
    """Keep any candidate that violates no hard constraint"""
    if is_neg_inf(evaluate_total(inst, candidate)):
        return previous
    return candidate


@dataclass
class TerminationRule:
    max_iterations: Optional[int] = None
    wall_timeout: Optional[float] = None        # seconds
    simulated_timeout: Optional[float] = None   # simulated time units
    gap_threshold: Optional[float] = None       # relative (UB - LB) / UB

    def validate(self):
        if all(v is None for v in (self.max_iterations, self.wall_timeout,
                                   self.simulated_timeout, self.gap_threshold)):
            raise ConfigError("termination rule needs at least one criterion")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")
        return self

    def gap(self, best_lb: ExtendedUtility, best_ub: Optional[ExtendedUtility]) -> float:
        if best_ub is None or is_neg_inf(best_lb) or is_neg_inf(best_ub):
            return math.inf
        if best_ub <= 0:
            tol = dlns_config.get_solver_config()["gap_tolerance"]
            return 0.0 if best_ub - best_lb <= tol else math.inf
        return max(0.0, (best_ub - best_lb) / best_ub)

    def should_stop(self, k: int, best_lb: ExtendedUtility, best_ub: Optional[ExtendedUtility],
                    sim_time: float, wall_elapsed: float) -> bool:
        if self.max_iterations is not None and k >= self.max_iterations:
            return True
        if self.wall_timeout is not None and wall_elapsed >= self.wall_timeout:
            return True
        if self.simulated_timeout is not None and sim_time >= self.simulated_timeout:
            return True
        tol = dlns_config.get_solver_config()["gap_tolerance"]
        if self.gap_threshold is not None and self.gap(best_lb, best_ub) <= self.gap_threshold + tol:
            return True
        return False


@dataclass
class IterationState:
    k: int
    x_check: Assignment
    x_hat: Assignment
    best_lb: ExtendedUtility
    best_ub: ExtendedUtility
    best_solution: Assignment = field(default_factory=dict)
    flags: dict = field(default_factory=dict)


class DlnsEngine:
    """Runs the destroy/repair loop on the simulated substrate"""

    def __init__(self, inst: DcopInstance, repair: RepairAlgorithm, destroy: DestroyStrategy,
                 term: TerminationRule, seed: int = 0, init_mode: Optional[str] = None,
                 bound_rule: Optional[str] = None, t_cc: Optional[float] = None,
                 t_msg: Optional[float] = None, initial: Optional[Assignment] = None):
        config = dlns_config.get_solver_config()
        self.inst = inst
        self.repair = repair
        self.destroy = destroy
        self.term = term.validate()
        self.seed = seed
        self.init_mode = init_mode or config["init_mode"]
        if initial is not None:
            validate_assignment(inst, initial, complete=True)
        self.initial = initial
        self.graph = build_graph(inst)
        self.global_tree = dfs_pseudo_tree(self.graph)
        self.sim = Simulator(inst.agents, t_cc=t_cc, t_msg=t_msg)
        self.cache = FHatCache(inst, bound_rule or config["bound_rule"])
        self.history = EdgeHistory()
        self.state: Optional[IterationState] = None
        self.trace = RunTrace(algorithm=repair.get_name(), instance_name=inst.name, seed=seed)

    def _record(self, lb: ExtendedUtility, ub: ExtendedUtility, started: float):
        window = self.sim.take_window()
        state = self.state
        self.trace.rows.append(TraceRow(
            k=state.k,
            sim_time=self.sim.metrics.simulated_time,
            wall_ms=(time.perf_counter() - started) * 1000.0,
            lb=lb,
            ub=ub,
            best_lb=state.best_lb,
            best_ub=state.best_ub,
            rho=compute_rho(state.best_lb, state.best_ub),
            msgs=window.messages,
            payload=window.total_payload,
            max_payload=window.max_payload,
            ccs=window.constraint_checks,
            max_agent_ccs=window.max_agent_checks,
        ))

    def initialize(self):
        started = time.perf_counter()
        if self.initial is not None:
            x_check = dict(self.initial)
        else:
            x_check = initialize_values(self.inst, self.init_mode, self.seed)
        x_hat = dict(x_check)
        broadcast = ValueBroadcast(self.inst, x_check, x_hat)
        self.sim.run_phase(broadcast)
        lb, ub = bound_propagation(self.global_tree, self.inst, x_check, x_hat, self.cache,
                                   self.sim, broadcast.contexts)
        self.state = IterationState(k=0, x_check=x_check, x_hat=x_hat, best_lb=lb, best_ub=ub,
                                    best_solution=dict(x_check))
        self._record(lb, ub, started)
        logger.info("initialized %s: LB=%s UB=%s", self.inst.name, lb, ub)

    def iterate(self):
        started = time.perf_counter()
        state = self.state
        state.k += 1
        k = state.k
        flags = self.destroy.destroy(self.inst, state.x_check, k)
        state.flags = flags
        if not any(flag is DestroyFlag.DESTROYED for flag in flags.values()):
            previous = self.trace.final
            logger.debug("iteration %d: empty neighborhood, repair skipped", k)
            self._record(previous.lb, previous.ub, started)
            return

        ctx = RepairContext(inst=self.inst, graph=self.graph, flags=flags, prev_check=state.x_check,
                            prev_hat=state.x_hat, history=self.history, sim=self.sim, k=k)
        try:
            outcome = self.repair.repair(ctx)
        except CapacityError as e:
            raise RunError(k, e) from e
        if outcome.tree is not None and self.repair.get_name() == "tdbr":
            update_history(self.history, outcome.tree)

        accepted = accept(outcome.x_check, state.x_check, self.inst)
        self.cache.update(k, outcome.relaxed_edges, outcome.f_tilde)
        if accepted is outcome.x_check and outcome.contexts:
            contexts = outcome.contexts
        else:
            contexts = build_contexts(self.inst, accepted, outcome.x_hat)
        lb, ub = bound_propagation(self.global_tree, self.inst, accepted, outcome.x_hat, self.cache,
                                   self.sim, contexts)

        state.x_check = accepted
        state.x_hat = outcome.x_hat
        if lb > state.best_lb:
            state.best_lb = lb
            state.best_solution = dict(accepted)
            logger.info("iteration %d: new best LB %s", k, lb)
        if ub < state.best_ub:
            state.best_ub = ub
            logger.info("iteration %d: new best UB %s", k, ub)
        if (not is_neg_inf(state.best_lb) and not is_neg_inf(state.best_ub)
                and state.best_ub < state.best_lb - ABS_TOL):
            logger.warning("iteration %d: %s bound rule gives UB %s below LB %s",
                           k, self.cache.rule, state.best_ub, state.best_lb)
        logger.debug("iteration %d: LB=%s UB=%s", k, lb, ub)
        self._record(lb, ub, started)

    def run(self) -> RunTrace:
        started = time.perf_counter()
        self.initialize()
        while not self.term.should_stop(self.state.k, self.state.best_lb, self.state.best_ub,
                                        self.sim.metrics.simulated_time, time.perf_counter() - started):
            self.iterate()
        self.trace.best_solution = dict(self.state.best_solution)
        self.trace.infeasible = is_neg_inf(self.state.best_lb)
        logger.info("finished %s on %s after %d iterations: best LB=%s best UB=%s",
                    self.repair.get_name(), self.inst.name, self.state.k,
                    self.state.best_lb, self.state.best_ub)
        return self.trace


def run(inst: DcopInstance, repair: RepairAlgorithm, destroy: DestroyStrategy, term: TerminationRule,
        seed: int = 0, **options) -> RunTrace:
    """Execute D-LNS and return its trace (best solution attached)"""
    return DlnsEngine(inst, repair, destroy, term, seed, **options).run()
