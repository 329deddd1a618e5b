"""Independent reference implementations used by the tests.

These work on plain coordinate tuples and networkx graphs and share no code
with the package beyond reading ``config.open_bits`` and the edge endpoints.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import networkx as nx
import numpy as np


def box_points(d, R):
    return list(itertools.product(range(-R, R + 1), repeat=d))


def box_edges(d, R):
    """All in-box nearest-neighbour pairs as coordinate tuples."""
    pts = set(box_points(d, R))
    out = []
    for x in pts:
        for a in range(d):
            y = list(x)
            y[a] += 1
            y = tuple(y)
            if y in pts:
                out.append((x, y))
    return out


def open_graph(config):
    """networkx graph on all box vertices with the open edges of ``config``."""
    lat = config.lattice
    G = nx.Graph()
    G.add_nodes_from(tuple(int(c) for c in row) for row in lat.vertex_coords)
    tails = lat.vertex_coords[lat.edge_tail]
    heads = lat.vertex_coords[lat.edge_head]
    for e in np.flatnonzero(config.open_bits):
        G.add_edge(tuple(int(c) for c in tails[e]), tuple(int(c) for c in heads[e]))
    return G


def cluster_of(config, origin=None):
    G = open_graph(config)
    o = tuple([0] * config.lattice.d) if origin is None else tuple(origin)
    return set(nx.node_connected_component(G, o))


def open_boundary(G, H):
    H = set(H)
    return sum(1 for x in H for y in G[x] if y not in H)


def profile_by_subsets(config, cap, origin=None):
    """Minimal ``|open boundary| / |H|`` over connected ``H`` containing the origin, by plain subset checks.

    Enumerates all subsets of the origin cluster up to size ``cap`` (feasible only
    for clusters of about 16 vertices).
    """
    G = open_graph(config)
    o = tuple([0] * config.lattice.d) if origin is None else tuple(origin)
    C = sorted(nx.node_connected_component(G, o))
    others = [v for v in C if v != o]
    best = None
    for k in range(min(cap, len(C))):
        for rest in itertools.combinations(others, k):
            H = (o,) + rest
            if len(H) > cap:
                continue
            if not nx.is_connected(G.subgraph(H)):
                continue
            r = Fraction(open_boundary(G, H), len(H))
            if best is None or r < best:
                best = r
    return best


def exhaustive_min_cut(config, src, snk):
    """Minimal number of open edges across any partition separating ``src`` from ``snk``."""
    G = open_graph(config)
    src, snk = set(src), set(snk)
    free = [v for v in G.nodes if v not in src and v not in snk]
    best = None
    for mask in range(1 << len(free)):
        S = set(src) | {free[i] for i in range(len(free)) if mask >> i & 1}
        cut = sum(1 for x, y in G.edges if (x in S) != (y in S))
        if best is None or cut < best:
            best = cut
    return best


def networkx_max_flow(config, src, snk):
    G = open_graph(config)
    D = nx.DiGraph()
    for x, y in G.edges:
        D.add_edge(x, y, capacity=1)
        D.add_edge(y, x, capacity=1)
    for s in src:
        D.add_edge("S", s)
    for t in snk:
        D.add_edge(t, "T")
    if "S" not in D or "T" not in D:
        return 0
    return nx.maximum_flow_value(D, "S", "T")
