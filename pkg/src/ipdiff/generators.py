"""Seeded random generators for the four benchmark instance families.

Set cover (SC) and capacitated facility location (CF) minimize; combinatorial
auction (CA) and independent set (IS) maximize.  Coverage / demand rows are
encoded directly in ``<=`` form (a ``>=`` row appears negated).  Generation is
deterministic given the seed, down to byte-identical instance files.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import networkx as nx
import numpy as np

from .instance import MAX, MIN, IPInstance

FAMILIES = ("set_cover", "cap_facility", "comb_auction", "indep_set")


@dataclass
class GeneratorConfig:
    family: str
    seed: int = 0
    # set cover
    rows: int = 15
    cols: int = 25
    density: float = 0.15
    # capacitated facility location
    facilities: int = 3
    customers: int = 6
    # combinatorial auction
    items: int = 10
    bids: int = 15
    # independent set: exact edge count (G(n, m)) if set, else preferential
    # attachment with the given affinity
    nodes: int = 20
    edges: Optional[int] = None
    affinity: int = 4

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not 0.0 < self.density <= 1.0:
            raise ValueError("density must be in (0, 1]")
        for attr in ("rows", "cols", "facilities", "customers", "items", "bids", "nodes"):
            if getattr(self, attr) < 1:
                raise ValueError(f"{attr} must be >= 1")


def generate(cfg: GeneratorConfig) -> IPInstance:
    rng = np.random.default_rng(cfg.seed)
    if cfg.family == "set_cover":
        return _set_cover(cfg, rng)
    if cfg.family == "cap_facility":
        return _cap_facility(cfg, rng)
    if cfg.family == "comb_auction":
        return _comb_auction(cfg, rng)
    return _indep_set(cfg, rng)


def _set_cover(cfg: GeneratorConfig, rng: np.random.Generator) -> IPInstance:
    """Minimize total column cost s.t. every element is covered at least once."""
    cover = rng.random((cfg.rows, cfg.cols)) < cfg.density
    for k in range(cfg.rows):  # every element must be coverable
        if not cover[k].any():
            cover[k, rng.integers(cfg.cols)] = True
    costs = rng.integers(1, 101, size=cfg.cols).astype(float)
    rows = []
    b = []
    for k in range(cfg.rows):
        # sum_j x_j >= 1  ->  sum_j -x_j <= -1
        rows.append(tuple((int(j), -1.0) for j in np.flatnonzero(cover[k])))
        b.append(-1.0)
    return IPInstance(
        name=f"sc_r{cfg.rows}_c{cfg.cols}_s{cfg.seed}",
        n=cfg.cols, c=costs, rows=tuple(rows), b=np.array(b), sense=MIN,
    )


def _cap_facility(cfg: GeneratorConfig, rng: np.random.Generator) -> IPInstance:
    """0-1 assignment formulation: open y_f plus assignment x_{f,c} variables.

    Each customer is assigned to exactly one facility (equality split into a
    <= pair) and facility capacity binds assignments to opened facilities.
    Capacities get enough slack that a feasible packing exists w.h.p.
    """
    F, C = cfg.facilities, cfg.customers
    demand = rng.integers(1, 11, size=C).astype(float)
    total = demand.sum()
    cap = rng.uniform(1.2 * total / F, 2.0 * total / F, size=F)
    cap = np.maximum(cap, demand.max() + 1.0).round(2)
    open_cost = rng.integers(20, 101, size=F).astype(float)
    assign_cost = rng.integers(1, 21, size=(F, C)).astype(float)

    # variable order: y_0..y_{F-1}, then x_{f,c} row-major
    def xvar(f: int, c: int) -> int:
        return F + f * C + c

    rows: list[tuple[tuple[int, float], ...]] = []
    b: list[float] = []
    for c in range(C):
        assign = tuple((xvar(f, c), 1.0) for f in range(F))
        rows.append(assign)                                  # sum_f x_fc <= 1
        b.append(1.0)
        rows.append(tuple((j, -a) for j, a in assign))       # sum_f x_fc >= 1
        b.append(-1.0)
    for f in range(F):
        # sum_c d_c x_fc - cap_f y_f <= 0
        rows.append(
            tuple((xvar(f, c), float(demand[c])) for c in range(C)) + ((f, -float(cap[f])),)
        )
        b.append(0.0)
    cost = np.concatenate([open_cost, assign_cost.reshape(-1)])
    return IPInstance(
        name=f"cf_f{F}_c{C}_s{cfg.seed}",
        n=F + F * C, c=cost, rows=tuple(rows), b=np.array(b), sense=MIN,
    )


def _comb_auction(cfg: GeneratorConfig, rng: np.random.Generator) -> IPInstance:
    """Maximize accepted bid revenue; each item sold at most once."""
    values = rng.uniform(1.0, 100.0, size=cfg.items)
    bundles = []
    prices = []
    for _ in range(cfg.bids):
        size = int(rng.integers(1, max(2, cfg.items // 2) + 1))
        bundle = np.sort(rng.choice(cfg.items, size=size, replace=False))
        # complementarity: bundle worth slightly more than its parts
        price = values[bundle].sum() * rng.uniform(1.0, 1.5)
        bundles.append(bundle)
        prices.append(round(price, 2))
    used_items = sorted({int(i) for bundle in bundles for i in bundle})
    rows = []
    for item in used_items:
        rows.append(
            tuple((bi, 1.0) for bi, bundle in enumerate(bundles) if item in bundle)
        )
    return IPInstance(
        name=f"ca_i{cfg.items}_b{cfg.bids}_s{cfg.seed}",
        n=cfg.bids, c=np.array(prices), rows=tuple(rows),
        b=np.ones(len(rows)), sense=MAX,
    )


def _indep_set(cfg: GeneratorConfig, rng: np.random.Generator) -> IPInstance:
    max_edges = cfg.nodes * (cfg.nodes - 1) // 2
    if cfg.edges is not None:
        if cfg.edges > max_edges:
            raise ValueError(
                f"{cfg.edges} edges exceed complete-graph count {max_edges} for {cfg.nodes} nodes"
            )
        graph = nx.gnm_random_graph(cfg.nodes, cfg.edges, seed=int(rng.integers(2**31)))
    else:
        m = min(cfg.affinity, cfg.nodes - 1)
        graph = nx.barabasi_albert_graph(cfg.nodes, m, seed=int(rng.integers(2**31)))
    edge_list = sorted((min(u, v), max(u, v)) for u, v in graph.edges())
    inst = graph_to_is_instance(edge_list, cfg.nodes)
    return IPInstance(
        name=f"is_n{cfg.nodes}_e{len(edge_list)}_s{cfg.seed}",
        n=inst.n, c=inst.c, rows=inst.rows, b=inst.b, sense=inst.sense,
    )


def graph_to_is_instance(edge_list: Sequence[tuple[int, int]], num_nodes: int) -> IPInstance:
    """Maximum independent set as a 0-1 program: x_u + x_v <= 1 per edge."""
    seen = set()
    rows = []
    for u, v in edge_list:
        if u == v:
            raise ValueError(f"self-loop on node {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ValueError(f"duplicate edge {key}")
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise ValueError(f"edge {key} endpoint out of range [0,{num_nodes})")
        seen.add(key)
        rows.append(((key[0], 1.0), (key[1], 1.0)))
    return IPInstance(
        name=f"is_n{num_nodes}_e{len(rows)}",
        n=num_nodes, c=np.ones(num_nodes), rows=tuple(rows),
        b=np.ones(len(rows)), sense=MAX,
    )
