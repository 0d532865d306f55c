#!/usr/bin/env python3
"""
Tests for T-DBR repair and the bounding phase
"""

import numpy as np
import pytest

from dlns.agent_sim import MessageKind, Simulator
from dlns.baselines import exact_solve
from dlns.bounds import BoundsPropagation, FHatCache, bound_propagation, build_contexts
from dlns.dcop import evaluate_function, evaluate_total
from dlns.destroy import RandomDestroy, ScriptedDestroy
from dlns.engine import DlnsEngine, TerminationRule
from dlns.errors import ConfigError
from dlns.fixtures import (
    FOUR_NODE_EXPECTED, FOUR_NODE_INITIAL, FOUR_NODE_SCHEDULE, PATH_OPTIMUM, PATH_SCHEDULE,
    four_node_instance, path_instance,
)
from dlns.generators import gen_random
from dlns.graph import build_graph, dfs_pseudo_tree
from dlns.strategies import DestroyFlag
from dlns.tdbr import TdbrRepair, relaxation, root_optima, util_propagation, value_propagation


def _flags(inst, destroyed):
    return {a: DestroyFlag.DESTROYED if a in destroyed else DestroyFlag.PRESERVED for a in inst.agents}


def _golden_engine(bound_rule="partition"):
    inst = four_node_instance()
    return DlnsEngine(inst, TdbrRepair(), ScriptedDestroy(FOUR_NODE_SCHEDULE),
                      TerminationRule(max_iterations=len(FOUR_NODE_SCHEDULE)),
                      initial=FOUR_NODE_INITIAL, bound_rule=bound_rule)


@pytest.mark.parametrize("bound_rule", ["partition", "memoized-mean"])
def test_golden_four_node_trace(bound_rule):
    engine = _golden_engine(bound_rule)
    engine.initialize()
    assert engine.state.x_check == FOUR_NODE_EXPECTED["x_check"][0]
    for k in range(1, len(FOUR_NODE_SCHEDULE) + 1):
        engine.iterate()
        assert engine.state.x_check == FOUR_NODE_EXPECTED["x_check"][k]
    rows = engine.trace.rows
    assert [row.lb for row in rows] == pytest.approx(FOUR_NODE_EXPECTED["lb"], abs=1e-9)
    assert [row.ub for row in rows] == pytest.approx(FOUR_NODE_EXPECTED["ub"], abs=1e-9)
    assert rows[-1].best_lb == pytest.approx(38.0)
    assert rows[-1].best_ub == pytest.approx(42.0)
    assert rows[-1].rho == pytest.approx(42.0 / 38.0)


def test_golden_tree_edges_and_relaxed_optima():
    inst = four_node_instance()
    g = build_graph(inst)
    engine = _golden_engine()
    engine.initialize()
    for k, destroyed in enumerate(FOUR_NODE_SCHEDULE, start=1):
        tree = relaxation(_flags(inst, destroyed), g, engine.history, inst)
        assert tree.tree_edges == frozenset(FOUR_NODE_EXPECTED["tree_edges"][k - 1])
        utils = util_propagation(tree, inst, engine.state.x_check)
        _, f_tilde = root_optima(tree, utils)
        assert f_tilde == pytest.approx(16.0)
        engine.iterate()


def test_first_iteration_costs():
    engine = _golden_engine()
    engine.initialize()
    engine.iterate()
    init_row, row = engine.trace.rows
    # VALUE to every neighbor, then BOUNDS from three non-roots
    assert init_row.msgs == 2 * 5 + 3
    assert init_row.ccs == 5
    # UTIL 2, VALUE 3 + 2 + 3, BOUNDS 3
    assert row.msgs == 13
    assert row.max_payload == 4
    # x4: 2*2*(2+1), x3: 2*2*2, root x1: 2*1, then one check per function while bounding
    assert row.ccs == 12 + 8 + 2 + 5
    assert row.sim_time > init_row.sim_time


def test_util_tables_cover_parent_values():
    inst = four_node_instance()
    tree = relaxation(_flags(inst, {1, 3, 4}), build_graph(inst), inst=inst)
    utils = util_propagation(tree, inst, FOUR_NODE_INITIAL)
    assert list(utils[4].projected_check) == [16.0, 13.0]
    assert list(utils[3].projected_check) == [26.0, 18.0]
    assert list(utils[1].u_check) == [26.0, 20.0]
    f_check, f_tilde = root_optima(tree, utils)
    assert f_check == pytest.approx(26.0)
    assert f_tilde == pytest.approx(16.0)


def test_value_phase_leaves_preserved_values_alone():
    inst = four_node_instance()
    tree = relaxation(_flags(inst, {1, 3, 4}), build_graph(inst), inst=inst)
    sim = Simulator(inst.agents)
    utils = util_propagation(tree, inst, FOUR_NODE_INITIAL, sim)
    x_check, x_hat, contexts = value_propagation(tree, inst, utils, FOUR_NODE_INITIAL, FOUR_NODE_INITIAL, sim)
    assert x_check == {1: 0, 2: 1, 3: 0, 4: 0}
    assert x_check[2] == FOUR_NODE_INITIAL[2] and x_hat[2] == FOUR_NODE_INITIAL[2]
    # the preserved agent heard from its destroyed neighbors
    assert contexts[2].check_ctx == {1: 0, 4: 0}
    assert sim.metrics.messages_by_kind[MessageKind.UTIL] == 2
    assert sim.metrics.messages_by_kind[MessageKind.VALUE] == 8


def test_lower_bound_is_the_objective():
    inst = four_node_instance()
    tree = dfs_pseudo_tree(build_graph(inst))
    cache = FHatCache(inst)
    x = {1: 1, 2: 0, 3: 1, 4: 1}
    lb, ub = bound_propagation(tree, inst, x, x, cache, contexts=build_contexts(inst, x, x))
    assert lb == pytest.approx(evaluate_total(inst, x))
    assert ub == pytest.approx(50.0)


def test_partition_rule_splits_by_max_pair():
    inst = four_node_instance()
    cache = FHatCache(inst, "partition")
    cache.update(1, {13, 34}, 16.0)
    assert cache.read(13) == pytest.approx(8.0)
    assert cache.read(12) == pytest.approx(10.0)
    assert cache.upper_bound() == pytest.approx(46.0)
    cache.update(2, {13}, 4.0)
    # 13 moves to the newer relaxation; 34 alone keeps min(16, 10)
    assert cache.read(13) == pytest.approx(4.0)
    assert cache.read(34) == pytest.approx(10.0)
    cache.update(3, set(), 0.0)
    assert 3 not in cache.relaxations


def test_memoized_mean_keeps_the_largest_mean():
    inst = four_node_instance()
    cache = FHatCache(inst, "memoized-mean")
    cache.update(1, {13, 34}, 16.0)
    cache.update(2, {13}, 4.0)
    assert cache.read(13) == pytest.approx(8.0)
    assert cache.ever_optimized(13)
    assert not cache.ever_optimized(12)


def test_unknown_bound_rule():
    with pytest.raises(ConfigError):
        FHatCache(four_node_instance(), "optimistic")


def _path_run(bound_rule):
    inst = path_instance()
    engine = DlnsEngine(inst, TdbrRepair(), ScriptedDestroy(PATH_SCHEDULE),
                        TerminationRule(max_iterations=len(PATH_SCHEDULE)),
                        initial={1: 1, 2: 1, 3: 1, 4: 1}, bound_rule=bound_rule)
    return engine.run()


def test_partition_rule_stays_above_the_optimum():
    trace = _path_run("partition")
    assert trace.best_lb == pytest.approx(PATH_OPTIMUM)
    assert all(row.ub >= PATH_OPTIMUM - 1e-9 for row in trace.rows)


def test_memoized_mean_can_undercut_the_lower_bound(caplog):
    with caplog.at_level("WARNING", logger="dlns.engine"):
        trace = _path_run("memoized-mean")
    assert trace.best_lb == pytest.approx(PATH_OPTIMUM)
    assert trace.best_ub == pytest.approx(15.0)
    assert "memoized-mean bound rule gives UB" in caplog.text


def test_bounds_count_every_function_once_whatever_the_tree():
    inst = gen_random(n=10, p1=0.4, d=3, seed=3)
    engine = DlnsEngine(inst, TdbrRepair(), RandomDestroy(0.5, seed=3), TerminationRule(max_iterations=4), seed=3)
    engine.run()
    x_check, x_hat = engine.state.x_check, engine.state.x_hat
    g = build_graph(inst)
    trees = [dfs_pseudo_tree(g), dfs_pseudo_tree(g, priority={fid: -fid for fid in g.function_ids})]
    assert trees[0].tree_edges != trees[1].tree_edges
    every_fid = {f.fid for f in inst.functions}
    for tree in trees:
        protocol = BoundsPropagation(inst, tree, x_check, build_contexts(inst, x_check, x_hat), engine.cache)
        Simulator(inst.agents).run_phase(protocol)
        assert set(protocol.counted_lb) == every_fid and set(protocol.counted_ub) == every_fid
        assert set(protocol.counted_lb.values()) == {1} and set(protocol.counted_ub.values()) == {1}
        lb, ub = protocol.totals()
        assert lb == pytest.approx(evaluate_total(inst, x_check), abs=1e-9)
        assert ub == pytest.approx(engine.cache.upper_bound(), abs=1e-9)


class _RecordingTdbr(TdbrRepair):
    def __init__(self):
        super().__init__()
        self.outcomes = []

    def repair(self, ctx):
        outcome = super().repair(ctx)
        self.outcomes.append(outcome)
        return outcome


@pytest.mark.parametrize("bound_rule", ["partition", "memoized-mean"])
@pytest.mark.parametrize("seed", range(5))
def test_fresh_estimates_cover_the_optimum(bound_rule, seed):
    inst = gen_random(n=7, p1=0.4, d=3, seed=seed)
    optimum = exact_solve(inst).assignment
    by_fid = {f.fid: f for f in inst.functions}
    repair = _RecordingTdbr()
    engine = DlnsEngine(inst, repair, RandomDestroy(0.5, seed=seed), TerminationRule(max_iterations=12),
                        seed=seed, bound_rule=bound_rule)
    engine.initialize()
    checked = 0
    for _ in range(12):
        seen = len(repair.outcomes)
        engine.iterate()
        if len(repair.outcomes) == seen:
            continue
        edges = repair.outcomes[-1].relaxed_edges
        estimate = sum(engine.cache.read(fid) for fid in edges)
        at_optimum = sum(evaluate_function(f, optimum[f.scope[0]], optimum[f.scope[1]])
                         for f in (by_fid[fid] for fid in edges))
        assert estimate >= at_optimum - 1e-9
        checked += 1
    assert checked > 0


def test_random_instances_keep_both_assignments_complete():
    inst = gen_random(n=10, p1=0.3, d=3, seed=5)
    engine = DlnsEngine(inst, TdbrRepair(), RandomDestroy(0.5, seed=5), TerminationRule(max_iterations=10), seed=5)
    trace = engine.run()
    assert set(engine.state.x_check) == set(inst.variables)
    assert set(engine.state.x_hat) == set(inst.variables)
    assert trace.best_lb == pytest.approx(evaluate_total(inst, trace.best_solution))
    lbs = np.array([row.best_lb for row in trace.rows])
    assert (np.diff(lbs) >= 0).all()


if __name__ == "__main__":
    print("🧪 Testing T-DBR")
    print("=" * 50)
    raise SystemExit(pytest.main([__file__, "-v"]))
