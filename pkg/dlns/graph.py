"""
Constraint graphs and DFS pseudo-trees
Graphs are stored as networkx graphs whose edges carry the function id.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple

import networkx as nx
import numpy as np

from dlns.dcop import DcopInstance
from dlns.errors import StructuralError

logger = logging.getLogger(__name__)

# function id -> number of past pseudo-trees that used the edge as a tree edge
EdgeHistory = Counter


class ConstraintGraph:
    """Variables as nodes, one edge per binary function (attribute `fid`)"""

    def __init__(self, graph: Optional[nx.Graph] = None):
        self.graph = graph if graph is not None else nx.Graph()

    @property
    def nodes(self) -> List[int]:
        return sorted(self.graph.nodes)

    @property
    def edges(self) -> List[Tuple[int, int, int]]:
        """(u, v, fid) with u < v, sorted by fid"""
        out = [(min(u, v), max(u, v), data["fid"]) for u, v, data in self.graph.edges(data=True)]
        return sorted(out, key=lambda e: e[2])

    @property
    def function_ids(self) -> Set[int]:
        return {fid for _, _, fid in self.graph.edges(data="fid")}

    def number_of_edges(self) -> int:
        return self.graph.number_of_edges()

    def neighbors(self, node: int) -> List[int]:
        return sorted(self.graph.neighbors(node))

    def fid_of(self, u: int, v: int) -> int:
        return self.graph.edges[u, v]["fid"]

    def has_edge(self, u: int, v: int) -> bool:
        return self.graph.has_edge(u, v)

    def components(self) -> List[List[int]]:
        comps = [sorted(c) for c in nx.connected_components(self.graph)]
        return sorted(comps, key=lambda c: c[0])

    def is_connected(self) -> bool:
        return self.graph.number_of_nodes() > 0 and nx.is_connected(self.graph)

    def to_dot(self, name: str = "G") -> str:
        lines = [f"graph {name} {{"]
        lines += [f"  x{v};" for v in self.nodes]
        lines += [f'  x{u} -- x{v} [label="f{fid}"];' for u, v, fid in self.edges]
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_graph(inst: DcopInstance) -> ConstraintGraph:
    g = nx.Graph()
    g.add_nodes_from(inst.variables)
    for f in inst.functions:
        g.add_edge(f.scope[0], f.scope[1], fid=f.fid)
    return ConstraintGraph(g)


def induced_subgraph(g: ConstraintGraph, keep: Iterable[int]) -> ConstraintGraph:
    keep = set(keep)
    unknown = keep - set(g.graph.nodes)
    if unknown:
        raise StructuralError(f"cannot keep unknown nodes {sorted(unknown)}")
    return ConstraintGraph(g.graph.subgraph(keep).copy())


@dataclass
class PseudoTree:
    """A DFS spanning forest with back-edge roles"""

    parent: Dict[int, Optional[int]] = field(default_factory=dict)
    children: Dict[int, List[int]] = field(default_factory=dict)
    pseudo_parents: Dict[int, List[int]] = field(default_factory=dict)
    pseudo_children: Dict[int, List[int]] = field(default_factory=dict)
    roots: List[int] = field(default_factory=list)
    tree_edges: FrozenSet[int] = frozenset()
    order: List[int] = field(default_factory=list)      # DFS preorder
    depth: Dict[int, int] = field(default_factory=dict)

    @property
    def nodes(self) -> List[int]:
        return list(self.order)

    def __contains__(self, node: int) -> bool:
        return node in self.parent

    def is_leaf(self, node: int) -> bool:
        return not self.children[node]

    def ancestors(self, node: int) -> List[int]:
        out = []
        current = self.parent[node]
        while current is not None:
            out.append(current)
            current = self.parent[current]
        return out

    def is_ancestor(self, candidate: int, node: int) -> bool:
        return candidate in self.ancestors(node)

    def root_of(self, node: int) -> int:
        while self.parent[node] is not None:
            node = self.parent[node]
        return node

    def height(self) -> int:
        """Number of tree edges on the longest root-to-leaf path"""
        return max(self.depth.values(), default=0)

    def bottom_up(self) -> List[int]:
        """Every node after all of its descendants"""
        return list(reversed(self.order))

    def separator(self, node: int) -> List[int]:
        """Ancestors connected to the node's subtree: parent, pseudo-parents and descendants' back-edges"""
        sep = set()
        stack = [node]
        while stack:
            current = stack.pop()
            for p in self.pseudo_parents[current]:
                sep.add(p)
            if self.parent[current] is not None:
                sep.add(self.parent[current])
            stack.extend(self.children[current])
        anc = set(self.ancestors(node))
        return sorted(sep & anc, key=lambda v: self.depth[v])

    def to_dot(self, name: str = "T") -> str:
        lines = [f"digraph {name} {{"]
        for node in self.order:
            lines.append(f"  x{node};")
        for node in self.order:
            if self.parent[node] is not None:
                lines.append(f"  x{self.parent[node]} -> x{node};")
            for pp in self.pseudo_parents[node]:
                lines.append(f"  x{pp} -> x{node} [style=dashed];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def dfs_pseudo_tree(g: ConstraintGraph, priority: Optional[Mapping[int, int]] = None,
                    seed: Optional[int] = None) -> PseudoTree:
    """Build a DFS pseudo-forest of `g`.

    Each component is rooted at its lowest node id. From the current node the
    DFS follows the edge to an unvisited neighbor with the lowest usage count in
    `priority`, then the lowest function id, then a seeded random key.
    """
    priority = priority or {}
    if seed is not None:
        rng = np.random.default_rng(seed)
        jitter = {fid: float(rng.random()) for fid in sorted(g.function_ids)}
    else:
        jitter = {}

    def edge_key(u: int, v: int):
        fid = g.fid_of(u, v)
        return (priority.get(fid, 0), fid, jitter.get(fid, 0.0))

    tree = PseudoTree()
    tree_fids: Set[int] = set()
    for component in g.components():
        root = component[0]
        tree.roots.append(root)
        tree.parent[root] = None
        tree.depth[root] = 0
        tree.order.append(root)
        stack = [root]
        while stack:
            current = stack[-1]
            candidates = [v for v in g.graph.neighbors(current) if v not in tree.parent]
            if not candidates:
                stack.pop()
                continue
            nxt = min(candidates, key=lambda v: edge_key(current, v))
            tree.parent[nxt] = current
            tree.depth[nxt] = tree.depth[current] + 1
            tree.order.append(nxt)
            tree_fids.add(g.fid_of(current, nxt))
            stack.append(nxt)

    for node in tree.order:
        tree.children[node] = []
        tree.pseudo_parents[node] = []
        tree.pseudo_children[node] = []
    for node in tree.order:
        if tree.parent[node] is not None:
            tree.children[tree.parent[node]].append(node)
    for u, v, fid in g.edges:
        if fid in tree_fids:
            continue
        upper, lower = (u, v) if tree.depth[u] < tree.depth[v] else (v, u)
        if not tree.is_ancestor(upper, lower):
            raise StructuralError(f"edge f{fid} crosses branches; DFS property violated")
        tree.pseudo_parents[lower].append(upper)
        tree.pseudo_children[upper].append(lower)
    for node in tree.order:
        tree.children[node].sort()
        tree.pseudo_parents[node].sort(key=lambda v: tree.depth[v])
        tree.pseudo_children[node].sort()
    tree.tree_edges = frozenset(tree_fids)
    return tree


def update_history(history: EdgeHistory, tree: PseudoTree) -> EdgeHistory:
    for fid in tree.tree_edges:
        history[fid] += 1
    return history


def elimination_order(tree: PseudoTree) -> List[int]:
    """Reverse DFS order: leaves are eliminated before their ancestors"""
    return tree.bottom_up()


def induced_width(g: ConstraintGraph, order: List[int]) -> int:
    if sorted(order) != g.nodes:
        raise StructuralError("elimination order must be a permutation of the graph nodes")
    work = nx.Graph(g.graph)
    width = 0
    for node in order:
        nbrs = list(work.neighbors(node))
        width = max(width, len(nbrs))
        for i, a in enumerate(nbrs):
            for b in nbrs[i + 1:]:
                work.add_edge(a, b)
        work.remove_node(node)
    return width
