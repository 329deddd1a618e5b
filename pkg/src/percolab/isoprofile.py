"""Anchored isoperimetric profile of the open cluster of the origin.

The profile with cap ``m`` is the least ratio ``|∂°H| / |H|`` over vertex sets
``H`` that contain the origin, are connected through open edges and have at
most ``m`` vertices.  With ``m = n^d`` this is the quantity whose scaled value
``n * phi_n`` the campaigns in :mod:`percolab.harness` study.

Two solvers are provided: exhaustive enumeration (exact, small instances) and
simulated annealing (an upper bound, any size).  Ratios are ``Fraction``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .cluster import Cluster, largest_cluster, open_cluster, open_edge_boundary
from .exploration import explore_until_halt
from .lattice import BondConfig, derive_seed

__all__ = [
    "ProfileResult",
    "FaceCount",
    "AnnealSchedule",
    "BudgetExceeded",
    "profile_bruteforce",
    "profile_anneal",
    "profile",
    "supercritical_profile",
    "face_connection_count",
    "face_counts",
    "within_bruteforce_budget",
    "boundary_ratio",
]

EXACT = "exact"
UPPER_BOUND = "upper_bound"
CLUSTER_FITS_CAP = "cluster_fits_cap"


class BudgetExceeded(RuntimeError):
    """The instance is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class ProfileResult:
    value: Fraction | None
    witness: np.ndarray = field(repr=False)
    cap: int
    n: int | None = None
    mode: str = EXACT
    zero_reason: str | None = None
    cluster_size: int = 0
    truncated: bool = False
    discarded: bool = False
    conditioning: str | None = None

    @property
    def scaled(self) -> Fraction | None:
        """``n * value``, the quantity whose n -> infinity behaviour is studied."""
        if self.value is None or self.n is None:
            return None
        return self.n * self.value

    def to_dict(self) -> dict:
        v = self.value
        return {
            "value": None if v is None else f"{v.numerator}/{v.denominator}",
            "witness_size": int(self.witness.size),
            "cap": self.cap,
            "n": self.n,
            "mode": self.mode,
            "zero_reason": self.zero_reason,
            "cluster_size": self.cluster_size,
            "truncated": self.truncated,
            "discarded": self.discarded,
            "conditioning": self.conditioning,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class FaceCount:
    n: int
    face: tuple[int, int]
    count: int


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling from ``t0`` to ``t1`` over ``steps`` moves per restart.

    ``steps=None`` scales the move budget with the cap.
    """

    steps: int | None = None
    t0: float = 2.0
    t1: float = 0.02
    steps_per_vertex: int = 400
    min_steps: int = 20000

    def moves(self, cap: int) -> int:
        if self.steps is not None:
            return int(self.steps)
        return max(self.min_steps, self.steps_per_vertex * int(cap))


def boundary_ratio(config: BondConfig, H: np.ndarray) -> Fraction:
    """``|∂°H| / |H|`` computed from scratch."""
    H = np.asarray(H, dtype=np.int64)
    return Fraction(int(open_edge_boundary(config, H).size), int(np.unique(H).size))


def within_bruteforce_budget(cluster_size: int, cap: int) -> bool:
    return cluster_size <= 24 or cap <= 12


def _zero_result(cluster: Cluster, cap: int, n: int | None) -> ProfileResult:
    return ProfileResult(
        value=Fraction(0),
        witness=cluster.vertices.copy(),
        cap=cap,
        n=n,
        mode=EXACT,
        zero_reason=CLUSTER_FITS_CAP,
        cluster_size=cluster.size,
        truncated=cluster.touches_box_boundary,
    )


def _local_open_graph(config: BondConfig, cluster: Cluster):
    """Open adjacency of the cluster in local indices, plus open degrees."""
    lat = config.lattice
    nbr, nbe = lat.neighbors
    verts = cluster.vertices
    local = {int(v): i for i, v in enumerate(verts.tolist())}
    adj = []
    for v in verts.tolist():
        row = []
        for w, e in zip(nbr[v].tolist(), nbe[v].tolist()):
            if w >= 0 and config.open_bits[e]:
                row.append(local[w])
        adj.append(row)
    return verts, local, adj


def _lex_less(a: Sequence[int], b: Sequence[int]) -> bool:
    return tuple(a) < tuple(b)


def profile_bruteforce(
    config: BondConfig,
    origin: int | Sequence[int] | None = None,
    cap: int = 1,
    n: int | None = None,
    enforce_budget: bool = True,
) -> ProfileResult:
    """Exact profile by enumerating every connected set containing the origin.

    Each connected set is generated once: a branch chooses one candidate from
    the current extension list and bans the candidates before it.
    """
    cap = int(cap)
    if cap < 1:
        raise ValueError("cap must be at least 1")
    lat = config.lattice
    o = lat.origin if origin is None else lat.vertex(origin)
    cluster = open_cluster(config, o)
    if cluster.size <= cap:
        return _zero_result(cluster, cap, n)
    if enforce_budget and not within_bruteforce_budget(cluster.size, cap):
        raise BudgetExceeded(
            f"cluster of {cluster.size} vertices with cap {cap} exceeds the enumeration budget"
        )
    verts, local, adj = _local_open_graph(config, cluster)
    deg = [len(r) for r in adj]
    m = len(verts)
    root = local[o]
    in_s = [False] * m
    banned = [False] * m
    in_ext = [False] * m
    members: list[int] = []
    best = [deg[root], 1, None]  # boundary, size, witness (global ranks, sorted)

    def consider(b: int, s: int) -> None:
        lhs, rhs = b * best[1], best[0] * s
        if lhs < rhs:
            best[0], best[1], best[2] = b, s, None
        elif lhs == rhs:
            pass
        else:
            return
        cand = sorted(verts[i] for i in members)
        if best[2] is None or _lex_less(cand, best[2]):
            best[0], best[1], best[2] = b, s, cand

    def rec(ext: list[int], b: int) -> None:
        consider(b, len(members))
        if len(members) >= cap:
            return
        chosen = []
        for i, v in enumerate(ext):
            k = 0
            fresh = []
            for w in adj[v]:
                if in_s[w]:
                    k += 1
                elif not banned[w] and not in_ext[w]:
                    fresh.append(w)
            for w in fresh:
                in_ext[w] = True
            in_s[v] = True
            members.append(v)
            rec(ext[i + 1 :] + fresh, b + deg[v] - 2 * k)
            members.pop()
            in_s[v] = False
            for w in fresh:
                in_ext[w] = False
            banned[v] = True
            chosen.append(v)
        for v in chosen:
            banned[v] = False

    in_s[root] = True
    members.append(root)
    ext0 = list(adj[root])
    for w in ext0:
        in_ext[w] = True
    rec(ext0, deg[root])
    witness = np.asarray(best[2], dtype=np.int64)
    return ProfileResult(
        value=Fraction(best[0], best[1]),
        witness=witness,
        cap=cap,
        n=n,
        mode=EXACT,
        cluster_size=cluster.size,
        truncated=cluster.touches_box_boundary,
    )


def _articulation_points(adj: dict[int, list[int]], root: int) -> set[int]:
    """Iterative Tarjan low-link over a connected adjacency."""
    disc = {root: 0}
    low = {root: 0}
    parent = {root: None}
    out = set()
    root_children = 0
    stack = [(root, iter(adj[root]))]
    t = 1
    while stack:
        u, it = stack[-1]
        for w in it:
            if w not in disc:
                disc[w] = low[w] = t
                t += 1
                parent[w] = u
                if u == root:
                    root_children += 1
                stack.append((w, iter(adj[w])))
                break
            elif w != parent[u]:
                low[u] = min(low[u], disc[w])
        else:
            stack.pop()
            p = parent[u]
            if p is not None:
                low[p] = min(low[p], low[u])
                if p != root and low[u] >= disc[p]:
                    out.add(p)
    if root_children > 1:
        out.add(root)
    return out


def _polish(config: BondConfig, origin: int, H: np.ndarray, cap: int) -> np.ndarray:
    """Best-improvement local descent over single add/remove moves."""
    lat = config.lattice
    nbr, nbe = lat.neighbors
    ob = config.open_bits

    def onb(v):
        return [w for w, e in zip(nbr[v].tolist(), nbe[v].tolist()) if w >= 0 and ob[e]]

    cache: dict[int, list[int]] = {}

    def nb(v):
        r = cache.get(v)
        if r is None:
            r = cache[v] = onb(v)
        return r

    members = set(int(v) for v in H)
    b = sum(1 for v in members for w in nb(v) if w not in members)
    while True:
        s = len(members)
        best_move = None
        best_num, best_den = b, s
        if s < cap:
            frontier = {w for v in members for w in nb(v) if w not in members}
            for x in sorted(frontier):
                k = sum(1 for w in nb(x) if w in members)
                nb_ = b + len(nb(x)) - 2 * k
                if nb_ * best_den < best_num * (s + 1):
                    best_num, best_den, best_move = nb_, s + 1, ("add", x)
        if s > 1:
            adj = {v: [w for w in nb(v) if w in members] for v in members}
            arts = _articulation_points(adj, origin)
            for y in sorted(members):
                if y == origin or y in arts:
                    continue
                k = len(adj[y])
                nb_ = b + 2 * k - len(nb(y))
                if nb_ * best_den < best_num * (s - 1):
                    best_num, best_den, best_move = nb_, s - 1, ("remove", y)
        if best_move is None:
            return np.asarray(sorted(members), dtype=np.int64)
        kind, v = best_move
        if kind == "add":
            members.add(v)
        else:
            members.remove(v)
        b = best_num


def profile_anneal(
    config: BondConfig,
    origin: int | Sequence[int] | None = None,
    cap: int = 1,
    schedule: AnnealSchedule | None = None,
    restarts: int = 8,
    seed: int = 0,
    n: int | None = None,
) -> ProfileResult:
    """Upper bound on the profile by simulated annealing over connected sets.

    Restart 0 starts from the best prefix of a greedy growth, the others from the
    origin alone; the best visited state over all restarts is then polished by
    local descent.  The returned ratio is always attained by the witness.
    """
    cap = int(cap)
    if cap < 1:
        raise ValueError("cap must be at least 1")
    schedule = schedule or AnnealSchedule()
    lat = config.lattice
    o = lat.origin if origin is None else lat.vertex(origin)
    cluster = open_cluster(config, o)
    if cluster.size <= cap:
        return _zero_result(cluster, cap, n)
    nbr, nbe = lat.neighbors
    ob = config.open_bits
    order, bnd = kernels.greedy_grow(nbr, nbe, ob, o, cap)
    sizes = np.arange(1, order.size + 1)
    # best greedy prefix under exact comparison
    gi = 0
    for i in range(1, order.size):
        if bnd[i] * sizes[gi] < bnd[gi] * sizes[i]:
            gi = i
    best = np.sort(order[: gi + 1])
    best_b, best_s = int(bnd[gi]), gi + 1
    steps = schedule.moves(cap)
    for r in range(max(1, int(restarts))):
        init = order[: gi + 1] if r == 0 else np.array([o], dtype=np.int64)
        H, hb, hs = kernels.anneal(
            nbr, nbe, ob, o, cap, init, steps, schedule.t0, schedule.t1, derive_seed(seed, r)
        )
        if hb * best_s < best_b * hs or (
            hb * best_s == best_b * hs and _lex_less(np.sort(H).tolist(), best.tolist())
        ):
            best, best_b, best_s = np.sort(H), int(hb), int(hs)
    best = _polish(config, o, best, cap)
    value = boundary_ratio(config, best)
    return ProfileResult(
        value=value,
        witness=best,
        cap=cap,
        n=n,
        mode=UPPER_BOUND,
        cluster_size=cluster.size,
        truncated=cluster.touches_box_boundary,
    )


def profile(
    config: BondConfig,
    origin: int | Sequence[int] | None = None,
    n: int = 1,
    cap: int | None = None,
    schedule: AnnealSchedule | None = None,
    restarts: int = 8,
    seed: int = 0,
) -> ProfileResult:
    """Profile with cap ``n^d``: zero fast path, else exact enumeration within budget, else annealing."""
    lat = config.lattice
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    cap = n**lat.d if cap is None else int(cap)
    o = lat.origin if origin is None else lat.vertex(origin)
    cluster = open_cluster(config, o)
    if cluster.size <= cap:
        return _zero_result(cluster, cap, n)
    if within_bruteforce_budget(cluster.size, cap):
        return profile_bruteforce(config, o, cap, n=n)
    return profile_anneal(config, o, cap, schedule=schedule, restarts=restarts, seed=seed, n=n)


def _origin_in_largest(config: BondConfig, cluster: Cluster) -> bool:
    big = largest_cluster(config)
    return cluster.size == big.size and cluster.origin in big


def supercritical_profile(
    config: BondConfig,
    n: int,
    conditioning: str = "boundary",
    origin: int | Sequence[int] | None = None,
    **solver,
) -> ProfileResult:
    """Profile conditioned on a finite-box proxy for the origin lying in the infinite cluster.

    ``conditioning="boundary"`` keeps samples whose origin cluster reaches the box
    boundary, ``"largest"`` keeps samples whose origin lies in the largest cluster.
    Rejected samples come back with ``discarded=True`` and no value.
    """
    if conditioning not in ("boundary", "largest"):
        raise ValueError(f"unknown conditioning proxy {conditioning!r}")
    lat = config.lattice
    o = lat.origin if origin is None else lat.vertex(origin)
    cluster = open_cluster(config, o)
    if conditioning == "boundary":
        ok = cluster.touches_box_boundary
    else:
        ok = _origin_in_largest(config, cluster)
    if not ok:
        return ProfileResult(
            value=None,
            witness=np.empty(0, dtype=np.int64),
            cap=int(n) ** lat.d,
            n=int(n),
            mode=EXACT,
            cluster_size=cluster.size,
            truncated=cluster.touches_box_boundary,
            discarded=True,
            conditioning=conditioning,
        )
    res = profile(config, o, n, **solver)
    return replace(res, conditioning=conditioning)


def _parse_face(face, d: int) -> tuple[int, int]:
    axis, sign = face
    axis, sign = int(axis), int(sign)
    if not 0 <= axis < d or sign not in (-1, 1):
        raise ValueError(f"invalid face {face!r}")
    return axis, sign


def _constrained_terminal(config: BondConfig, n: int, origin) -> np.ndarray:
    lat = config.lattice
    R = lat.radius
    if R is None or n > R:
        raise ValueError(f"face radius {n} exceeds the simulation radius {R}")
    if n < 1:
        raise ValueError("n must be at least 1")
    o = lat.origin if origin is None else lat.vertex(origin)
    hist = explore_until_halt(config, o, box_radius=n, retain_sets=True)
    return hist.terminal_set()


def face_connection_count(
    config: BondConfig, n: int, face: tuple[int, int], origin=None
) -> FaceCount:
    """Vertices of the face ``x[axis] = sign * n`` joined to the origin inside ``[-n, n]^d``."""
    axis, sign = _parse_face(face, config.lattice.d)
    term = _constrained_terminal(config, n, origin)
    x = config.lattice.vertex_coords[term]
    return FaceCount(n=int(n), face=(axis, sign), count=int(np.sum(x[:, axis] == sign * n)))


def face_counts(config: BondConfig, n: int, origin=None) -> tuple[list[FaceCount], int]:
    """Counts on all 2d faces and the number of distinct boundary vertices reached."""
    term = _constrained_terminal(config, n, origin)
    x = config.lattice.vertex_coords[term]
    out = []
    for axis in range(config.lattice.d):
        for sign in (1, -1):
            out.append(FaceCount(int(n), (axis, sign), int(np.sum(x[:, axis] == sign * n))))
    union = int(np.sum(np.any(np.abs(x) == n, axis=1)))
    return out, union
