"""Open clusters and edge boundaries."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .lattice import BondConfig

__all__ = [
    "Cluster",
    "open_cluster",
    "open_cluster_unionfind",
    "cluster_labels",
    "largest_cluster",
    "edge_boundary",
    "open_edge_boundary",
    "open_graph_edges",
    "cluster_to_json",
]


@dataclass(frozen=True, eq=False)
class Cluster:
    """Open cluster of ``origin``, truncated at the simulation box.

    ``vertices`` holds vertex ranks in increasing order.
    """

    config: BondConfig
    origin: int
    vertices: np.ndarray
    touches_box_boundary: bool
    open_edge_count: int

    @property
    def size(self) -> int:
        return int(self.vertices.size)

    def __len__(self) -> int:
        return self.size

    def __contains__(self, v) -> bool:
        r = self.config.lattice.vertex(v)
        i = np.searchsorted(self.vertices, r)
        return bool(i < self.vertices.size and self.vertices[i] == r)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.config.lattice.vertex_count, dtype=bool)
        m[self.vertices] = True
        return m

    def coords(self) -> list[tuple[int, ...]]:
        return [tuple(int(c) for c in row) for row in self.config.lattice.vertex_coords[self.vertices]]


def _make_cluster(config: BondConfig, origin: int, members: np.ndarray) -> Cluster:
    lat = config.lattice
    members = np.sort(members.astype(np.int64))
    mask = np.zeros(lat.vertex_count, dtype=bool)
    mask[members] = True
    ob = config.open_bits.astype(bool)
    inside = ob & mask[lat.edge_tail] & mask[lat.edge_head]
    return Cluster(
        config=config,
        origin=origin,
        vertices=members,
        touches_box_boundary=bool(lat.boundary_mask[members].any()),
        open_edge_count=int(inside.sum()),
    )


def open_cluster(config: BondConfig, origin: int | Sequence[int]) -> Cluster:
    """Breadth-first closure of ``origin`` under open edges."""
    lat = config.lattice
    try:
        o = lat.vertex(origin)
    except ValueError as exc:
        raise ValueError(f"origin outside the box: {exc}") from None
    nbr, nbe = lat.neighbors
    allowed = np.ones(lat.vertex_count, dtype=np.uint8)
    order, *_ = kernels.explore_layers(
        nbr, nbe, config.open_bits, np.array([o], dtype=np.int64), allowed, -1
    )
    return _make_cluster(config, o, order)


def cluster_labels(config: BondConfig) -> np.ndarray:
    """Union-find labels: each vertex maps to the least rank of its open cluster."""
    nbr, nbe = config.lattice.neighbors
    return kernels.label_components(nbr, nbe, config.open_bits)


def open_cluster_unionfind(config: BondConfig, origin: int | Sequence[int]) -> Cluster:
    """Same cluster as :func:`open_cluster`, computed from union-find labels."""
    o = config.lattice.vertex(origin)
    labels = cluster_labels(config)
    return _make_cluster(config, o, np.flatnonzero(labels == labels[o]))


def largest_cluster(config: BondConfig) -> Cluster:
    """A cluster of maximal size; ties go to the cluster with the smallest least rank."""
    labels = cluster_labels(config)
    counts = np.bincount(labels, minlength=config.lattice.vertex_count)
    # argmax returns the first maximum, i.e. the smallest label
    root = int(np.argmax(counts))
    return _make_cluster(config, root, np.flatnonzero(labels == root))


def edge_boundary(
    graph: Mapping[Hashable, Iterable[Hashable]], A: Iterable[Hashable]
) -> set[tuple[Hashable, Hashable]]:
    """Edges ``(x, y)`` of ``graph`` with ``x`` in ``A`` and ``y`` outside.

    ``graph`` maps each vertex to its neighbours (an undirected adjacency).
    """
    A = set(A)
    missing = A.difference(graph)
    if missing:
        raise ValueError(f"{len(missing)} vertices of A are not in the graph")
    return {(x, y) for x in A for y in graph[x] if y not in A}


def open_edge_boundary(config: BondConfig, H: Iterable[int] | np.ndarray) -> np.ndarray:
    """Ids of open edges with exactly one endpoint in ``H`` (H given by ranks or a bool mask)."""
    lat = config.lattice
    H = np.asarray(H if not isinstance(H, (set, frozenset)) else sorted(H))
    if H.dtype == bool and H.shape == (lat.vertex_count,):
        mask = H
    else:
        mask = np.zeros(lat.vertex_count, dtype=bool)
        mask[H.astype(np.int64)] = True
    cross = mask[lat.edge_tail] != mask[lat.edge_head]
    return np.flatnonzero(cross & config.open_bits.astype(bool))


def open_graph_edges(config: BondConfig, vertices: np.ndarray) -> dict[int, list[int]]:
    """Adjacency of the open graph induced on ``vertices``."""
    lat = config.lattice
    mask = np.zeros(lat.vertex_count, dtype=bool)
    mask[vertices] = True
    keep = config.open_bits.astype(bool) & mask[lat.edge_tail] & mask[lat.edge_head]
    adj: dict[int, list[int]] = {int(v): [] for v in vertices}
    for u, w in zip(lat.edge_tail[keep].tolist(), lat.edge_head[keep].tolist()):
        adj[u].append(w)
        adj[w].append(u)
    return adj


def cluster_to_json(cluster: Cluster) -> str:
    lat = cluster.config.lattice
    return json.dumps(
        {
            "origin": list(lat.coords(cluster.origin)),
            "vertices": [list(c) for c in cluster.coords()],
            "touches_box_boundary": cluster.touches_box_boundary,
        }
    )
