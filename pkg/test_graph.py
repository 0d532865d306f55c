#!/usr/bin/env python3
"""
Tests for constraint graphs and DFS pseudo-trees
"""

import pytest

from dlns.dcop import DcopInstance
from dlns.errors import StructuralError
from dlns.fixtures import four_node_instance
from dlns.generators import gen_grid, gen_random, gen_scale_free
from dlns.graph import (
    EdgeHistory, build_graph, dfs_pseudo_tree, elimination_order, induced_subgraph, induced_width,
    update_history,
)


def test_build_graph_carries_function_ids():
    g = build_graph(four_node_instance())
    assert g.nodes == [1, 2, 3, 4]
    assert g.function_ids == {12, 13, 14, 24, 34}
    assert g.fid_of(4, 2) == 24
    assert g.edges[0] == (1, 2, 12)
    assert g.is_connected()
    assert "x1 -- x2" in g.to_dot()


def test_dfs_follows_lowest_function_id():
    tree = dfs_pseudo_tree(build_graph(four_node_instance()))
    assert tree.roots == [1]
    assert tree.order == [1, 2, 4, 3]
    assert tree.parent == {1: None, 2: 1, 4: 2, 3: 4}
    assert tree.tree_edges == frozenset({12, 24, 34})
    assert tree.pseudo_parents[3] == [1]
    assert tree.pseudo_parents[4] == [1]
    assert tree.pseudo_children[1] == [3, 4]
    assert tree.height() == 3
    assert tree.bottom_up() == [3, 4, 2, 1]


def test_separators():
    tree = dfs_pseudo_tree(build_graph(four_node_instance()))
    assert tree.separator(3) == [1, 4]
    assert tree.separator(4) == [1, 2]
    assert tree.separator(2) == [1]
    assert tree.separator(1) == []


def test_history_steers_away_from_used_edges():
    g = build_graph(four_node_instance())
    tree = dfs_pseudo_tree(g, priority={12: 1})
    assert tree.order == [1, 3, 4, 2]
    assert tree.tree_edges == frozenset({13, 34, 24})


def test_replayed_relaxations_rotate_tree_edges():
    g = build_graph(four_node_instance())
    history = EdgeHistory()
    first = dfs_pseudo_tree(induced_subgraph(g, [1, 3, 4]), history)
    assert first.tree_edges == frozenset({13, 34})
    update_history(history, first)
    assert history == {13: 1, 34: 1}
    second = dfs_pseudo_tree(induced_subgraph(g, [1, 2, 4]), history)
    assert second.tree_edges == frozenset({12, 24})


def test_disconnected_subgraph_is_a_forest():
    g = induced_subgraph(build_graph(four_node_instance()), [2, 3])
    tree = dfs_pseudo_tree(g)
    assert tree.roots == [2, 3]
    assert tree.tree_edges == frozenset()
    assert tree.is_leaf(2) and tree.is_leaf(3)
    assert g.components() == [[2], [3]]
    assert not g.is_connected()


def test_unknown_nodes_are_rejected():
    g = build_graph(four_node_instance())
    with pytest.raises(StructuralError):
        induced_subgraph(g, [1, 9])
    with pytest.raises(StructuralError):
        induced_width(g, [1, 2, 3])


def test_induced_width():
    g = build_graph(four_node_instance())
    tree = dfs_pseudo_tree(g)
    assert elimination_order(tree) == [3, 4, 2, 1]
    assert induced_width(g, elimination_order(tree)) == 2


def test_single_node_is_a_lone_root():
    inst = DcopInstance([7], {7: (0, 1)}, [], {7: 7}, name="single")
    tree = dfs_pseudo_tree(build_graph(inst))
    assert tree.roots == [7]
    assert tree.order == [7]
    assert tree.tree_edges == frozenset()
    assert tree.separator(7) == []


def test_history_rotates_the_tree_on_a_cycle():
    # 2x3 grid is biconnected: the root has one tree child and one unused edge
    g = build_graph(gen_grid(rows=2, cols=3, d=2, seed=0))
    history = EdgeHistory()
    first = dfs_pseudo_tree(g, history)
    update_history(history, first)
    second = dfs_pseudo_tree(g, history)
    assert first.tree_edges != second.tree_edges
    assert first.children[0] != second.children[0]
    assert len(second.tree_edges) == len(g.nodes) - 1


@pytest.mark.parametrize("inst", [
    gen_random(n=15, p1=0.3, d=2, seed=3),
    gen_scale_free(n=15, d=2, seed=3),
    gen_grid(rows=3, cols=4, d=2, seed=3),
])
def test_every_back_edge_joins_ancestor_and_descendant(inst):
    g = build_graph(inst)
    tree = dfs_pseudo_tree(g, seed=11)
    assert sorted(tree.nodes) == g.nodes
    assert len(tree.tree_edges) == len(g.nodes) - len(tree.roots)
    for u, v, fid in g.edges:
        if fid in tree.tree_edges:
            assert tree.parent[u] == v or tree.parent[v] == u
        else:
            assert tree.is_ancestor(u, v) or tree.is_ancestor(v, u)


if __name__ == "__main__":
    print("🧪 Testing constraint graphs and pseudo-trees")
    print("=" * 50)
    raise SystemExit(pytest.main([__file__, "-v"]))
