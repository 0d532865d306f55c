"""
Hand-built instances shared by tests, the CLI demo and the docs
"""

from typing import Dict, List, Set

from dlns.dcop import BinaryFunction, DcopInstance

BINARY = (0, 1)

# (x_low, x_high) -> utility, x_low is the lower-numbered variable
_FOUR_NODE_TABLES = {
    12: {(0, 0): 10, (0, 1): 0, (1, 0): 4, (1, 1): 2},
    13: {(0, 0): 10, (0, 1): 0, (1, 0): 2, (1, 1): 0},
    14: {(0, 0): 6, (0, 1): 0, (1, 0): 10, (1, 1): 5},
    24: {(0, 0): 6, (0, 1): 1, (1, 0): 10, (1, 1): 0},
    34: {(0, 0): 6, (0, 1): 0, (1, 0): 3, (1, 1): 10},
}

# x1..x4 at iteration 0
FOUR_NODE_INITIAL = {1: 0, 2: 1, 3: 0, 4: 1}

# destroyed agents per iteration: keep x2, then keep x3
FOUR_NODE_SCHEDULE: List[Set[int]] = [{1, 3, 4}, {1, 2, 4}]

FOUR_NODE_EXPECTED = {
    "lb": [10, 32, 38],
    "ub": [50, 46, 42],
    "tree_edges": [{13, 34}, {12, 24}],
    "x_check": [{1: 0, 2: 1, 3: 0, 4: 1}, {1: 0, 2: 1, 3: 0, 4: 0}, {1: 0, 2: 0, 3: 0, 4: 0}],
}


def _table_function(fid: int, a: int, b: int, table: Dict) -> BinaryFunction:
    return BinaryFunction.from_entries(fid, (a, b), (BINARY, BINARY),
                                       [(va, vb, u) for (va, vb), u in table.items()])


def four_node_instance() -> DcopInstance:
    """Four binary variables on a 5-edge graph (x1 linked to all, plus x2-x4 and x3-x4)"""
    functions = [
        _table_function(fid, fid // 10, fid % 10, table) for fid, table in _FOUR_NODE_TABLES.items()
    ]
    variables = [1, 2, 3, 4]
    return DcopInstance(
        variables=variables,
        domains={v: BINARY for v in variables},
        functions=functions,
        ownership={v: v for v in variables},
        name="four-node",
        params={"family": "fixture"},
    )


# destroyed agents per iteration for the path instance
PATH_SCHEDULE: List[Set[int]] = [{1, 2, 3}, {2, 3, 4}]
PATH_OPTIMUM = 20


def path_instance() -> DcopInstance:
    """x1 - x2 - x3 - x4 path whose end functions pay 10 only for value 0 at x2 / x4.

    Replaying PATH_SCHEDULE leaves the first relaxation's functions behind when
    the middle edge is re-optimized, which the memoized-mean rule undercounts.
    """
    a = {(0, 0): 10, (0, 1): 0, (1, 0): 10, (1, 1): 0}
    b = {(0, 0): 0, (0, 1): 0, (1, 0): 0, (1, 1): 0}
    c = {(0, 0): 10, (0, 1): 0, (1, 0): 10, (1, 1): 0}
    functions = [
        _table_function(1, 1, 2, a),
        _table_function(2, 2, 3, b),
        _table_function(3, 3, 4, c),
    ]
    variables = [1, 2, 3, 4]
    return DcopInstance(
        variables=variables,
        domains={v: BINARY for v in variables},
        functions=functions,
        ownership={v: v for v in variables},
        name="path",
        params={"family": "fixture"},
    )
