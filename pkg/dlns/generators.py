"""
Benchmark instance generators
Random networks, scale-free networks, grids and meeting scheduling. Every
generator is a pure function of its parameters and seed; the topology and the
utilities come from separate seeded streams.
"""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

import dlns_config
from dlns.dcop import BinaryFunction, DcopInstance, Meeting, MeetingMetadata
from dlns.errors import ConfigError, StructuralError

logger = logging.getLogger(__name__)


def _streams(seed: int) -> Tuple[np.random.Generator, np.random.Generator]:
    """(topology, utility) generators"""
    return np.random.default_rng([seed, 0]), np.random.default_rng([seed, 1])


def _instance_from_edges(n_nodes: int, edges: Iterable[Tuple[int, int]], d: int, cost_max: int,
                         rng: np.random.Generator, name: str, params: Dict) -> DcopInstance:
    variables = list(range(n_nodes))
    domain = tuple(range(d))
    functions = []
    for fid, (u, v) in enumerate(sorted((min(e), max(e)) for e in edges)):
        table = rng.integers(0, cost_max + 1, size=(d, d)).astype(np.float64)
        functions.append(BinaryFunction(fid, (u, v), (domain, domain), table))
    return DcopInstance(
        variables=variables,
        domains={v: domain for v in variables},
        functions=functions,
        ownership={v: v for v in variables},
        name=name,
        params=params,
    )


def random_edge_count(n: int, p1: float) -> int:
    return min(int(np.floor(n * (n - 1) * p1)), n * (n - 1) // 2)


def random_topology(n: int, n_edges: int, rng: np.random.Generator, max_attempts: Optional[int] = None) -> nx.Graph:
    """Connected G(n, m) graph by rejection"""
    max_attempts = max_attempts or dlns_config.get_generator_config()["max_connect_attempts"]
    if n_edges < n - 1:
        raise StructuralError(f"{n_edges} edges cannot connect {n} nodes")
    for attempt in range(max_attempts):
        g = nx.gnm_random_graph(n, n_edges, seed=int(rng.integers(2 ** 31)))
        if nx.is_connected(g):
            if attempt:
                logger.debug("connected topology after %d rejected draws", attempt)
            return g
    raise StructuralError(f"no connected graph with {n} nodes and {n_edges} edges after {max_attempts} draws")


def gen_random(n: Optional[int] = None, p1: Optional[float] = None, d: Optional[int] = None,
               cost_max: Optional[int] = None, seed: int = 0) -> DcopInstance:
    config = dlns_config.get_generator_config()
    n = config["n"] if n is None else n
    p1 = config["p1"] if p1 is None else p1
    d = config["d"] if d is None else d
    cost_max = config["cost_max"] if cost_max is None else cost_max
    if n < 2 or not 0.0 < p1 <= 1.0:
        raise ConfigError(f"random networks need n >= 2 and 0 < p1 <= 1, got n={n}, p1={p1}")
    topo_rng, util_rng = _streams(seed)
    g = random_topology(n, random_edge_count(n, p1), topo_rng)
    params = {"family": "random", "n": n, "p1": p1, "d": d, "cost_max": cost_max, "seed": seed}
    return _instance_from_edges(n, g.edges, d, cost_max, util_rng, f"random-n{n}-s{seed}", params)


def scale_free_topology(n: int, rng: np.random.Generator) -> nx.Graph:
    """Start from one edge; every new node links to 2 distinct nodes chosen by degree"""
    g = nx.Graph()
    g.add_edge(0, 1)
    for node in range(2, n):
        existing = np.arange(node)
        degrees = np.array([g.degree(v) for v in existing], dtype=np.float64)
        targets = rng.choice(existing, size=2, replace=False, p=degrees / degrees.sum())
        for t in targets:
            g.add_edge(node, int(t))
    return g


def gen_scale_free(n: Optional[int] = None, d: Optional[int] = None, cost_max: Optional[int] = None,
                   seed: int = 0) -> DcopInstance:
    config = dlns_config.get_generator_config()
    n = config["n"] if n is None else n
    d = config["d"] if d is None else d
    cost_max = config["cost_max"] if cost_max is None else cost_max
    if n < 3:
        raise ConfigError(f"scale-free networks need n >= 3, got {n}")
    topo_rng, util_rng = _streams(seed)
    g = scale_free_topology(n, topo_rng)
    params = {"family": "scale-free", "n": n, "d": d, "cost_max": cost_max, "seed": seed}
    return _instance_from_edges(n, g.edges, d, cost_max, util_rng, f"scale-free-n{n}-s{seed}", params)


def gen_grid(rows: Optional[int] = None, cols: Optional[int] = None, d: Optional[int] = None,
             cost_max: Optional[int] = None, seed: int = 0) -> DcopInstance:
    config = dlns_config.get_generator_config()
    rows = config["rows"] if rows is None else rows
    cols = config["cols"] if cols is None else cols
    d = config["d"] if d is None else d
    cost_max = config["cost_max"] if cost_max is None else cost_max
    if rows < 2 or cols < 2:
        raise ConfigError(f"grids need at least 2 rows and 2 columns, got {rows}x{cols}")
    _, util_rng = _streams(seed)
    g = nx.grid_2d_graph(rows, cols)
    edges = [(r1 * cols + c1, r2 * cols + c2) for (r1, c1), (r2, c2) in g.edges]
    params = {"family": "grid", "rows": rows, "cols": cols, "d": d, "cost_max": cost_max, "seed": seed}
    return _instance_from_edges(rows * cols, edges, d, cost_max, util_rng, f"grid-{rows}x{cols}-s{seed}", params)


def meeting_function(fid: int, meta: MeetingMetadata, var_a: int, var_b: int,
                     domains: Dict[int, Tuple[int, ...]]) -> BinaryFunction:
    """NEG_INF where the two meetings overlap, else both meetings' start-slot preferences"""
    starts_a = np.array(domains[var_a])
    starts_b = np.array(domains[var_b])
    dur_a = meta.meetings[var_a].duration
    dur_b = meta.meetings[var_b].duration
    pref_a = np.array([meta.preference(var_a, s) for s in starts_a], dtype=np.float64)
    pref_b = np.array([meta.preference(var_b, s) for s in starts_b], dtype=np.float64)
    table = pref_a[:, None] + pref_b[None, :]
    overlap = (starts_a[:, None] < starts_b[None, :] + dur_b) & (starts_b[None, :] < starts_a[:, None] + dur_a)
    if meta.shared_participants(var_a, var_b):
        table[overlap] = -np.inf
    return BinaryFunction(fid, (var_a, var_b), (domains[var_a], domains[var_b]), table)


def build_meeting_instance(meta: MeetingMetadata, pairs: Sequence[Tuple[int, int]], name: str = "meeting",
                           params: Optional[Dict] = None) -> DcopInstance:
    """One variable per meeting with start slots that fit the horizon; one function per sharing pair"""
    variables = sorted(meta.meetings)
    domains = {}
    for var in variables:
        last = meta.horizon - meta.meetings[var].duration
        if last < 0:
            raise StructuralError(f"meeting {var} is longer than the horizon")
        domains[var] = tuple(range(last + 1))
    functions = [
        meeting_function(fid, meta, min(a, b), max(a, b), domains)
        for fid, (a, b) in enumerate(sorted((min(p), max(p)) for p in pairs))
    ]
    return DcopInstance(variables=variables, domains=domains, functions=functions,
                        ownership={v: v for v in variables}, meetings=meta, name=name,
                        params=params or {})


def gen_meeting(m_meetings: Optional[int] = None, participants_pool: Optional[int] = None,
                horizon: Optional[int] = None, seed: int = 0, density: Optional[float] = None) -> DcopInstance:
    """Meeting scheduling with events as variables.

    Each topology edge gets one fresh participant attending both meetings; the
    rest of the pool attends single meetings. Without a pool size every meeting
    draws its private participants from the configured range.
    """
    config = dlns_config.get_meeting_config()
    m = config["meetings"] if m_meetings is None else m_meetings
    horizon = config["horizon"] if horizon is None else horizon
    density = config["density"] if density is None else density
    if m < 2:
        raise ConfigError(f"meeting scheduling needs at least 2 meetings, got {m}")
    topo_rng, util_rng = _streams(seed)
    n_edges = max(random_edge_count(m, density), m - 1)
    g = random_topology(m, n_edges, topo_rng)
    pairs = sorted((min(e), max(e)) for e in g.edges)

    attendees: Dict[int, List[int]] = {v: [] for v in range(m)}
    participant = 0
    for a, b in pairs:
        attendees[a].append(participant)
        attendees[b].append(participant)
        participant += 1
    if participants_pool is None:
        lo, hi = config["private_participants"]
        extra = [int(x) for x in topo_rng.integers(lo, hi + 1, size=m)]
        owners = [v for v in range(m) for _ in range(extra[v])]
    else:
        if participants_pool < len(pairs):
            raise ConfigError(f"participant pool {participants_pool} is smaller than the {len(pairs)} shared participants")
        owners = [int(v) for v in topo_rng.integers(0, m, size=participants_pool - len(pairs))]
    for v in owners:
        attendees[v].append(participant)
        participant += 1

    d_lo, d_hi = config["duration_range"]
    p_lo, p_hi = config["preference_range"]
    durations = util_rng.integers(d_lo, min(d_hi, horizon) + 1, size=m)
    meetings = {v: Meeting(v, int(durations[v]), tuple(attendees[v])) for v in range(m)}
    preferences = {
        p: tuple(int(x) for x in util_rng.integers(p_lo, p_hi + 1, size=horizon))
        for p in range(participant)
    }
    meta = MeetingMetadata(meetings=meetings, preferences=preferences, horizon=horizon)
    params = {"family": "meeting", "meetings": m, "participants": participant, "horizon": horizon,
              "density": density, "seed": seed}
    return build_meeting_instance(meta, pairs, name=f"meeting-m{m}-s{seed}", params=params)


GENERATORS = {
    "random": gen_random,
    "scale-free": gen_scale_free,
    "grid": gen_grid,
    "meeting": gen_meeting,
}
