"""Pure-Python kernels.  Same algorithms, argument conventions and RNG stream as ``_ckernels``.

Array conventions: ``nbr``/``nbe`` are (V, 2d) int64 neighbour and edge tables
(-1 where absent), ``open_bits`` is a uint8 array over edges, vertex lists are
int64 arrays.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

BACKEND = "python"

_MASK = (1 << 64) - 1


class _SplitMix:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next() >> 11) * (1.0 / 9007199254740992.0)


def explore_layers(nbr, nbe, open_bits, seeds, allowed, max_steps):
    """Layered exploration from ``seeds`` along open edges into ``allowed`` vertices.

    Returns ``(order, layer_end, bnd_allowed, bnd_total, halted)``: vertices in
    discovery order, cumulative |C_l|, and per step l the number of open edges
    leaving C_l towards allowed vertices and in total.
    """
    nbr = nbr.tolist()
    nbe = nbe.tolist()
    ob = open_bits.tolist()
    al = allowed.tolist()
    V = len(nbr)
    dist = [-1] * V
    order = []
    outside = 0
    for s in seeds.tolist():
        if dist[s] < 0:
            dist[s] = 0
            order.append(s)
    for s in order:
        for j, w in enumerate(nbr[s]):
            if w >= 0 and ob[nbe[s][j]] and not al[w]:
                outside += 1
    layer_end = [len(order)]
    bnd_allowed = []
    bnd_total = []
    start = 0
    step = 0
    halted = False
    while True:
        stop = layer_end[-1]
        inner = 0
        for i in range(start, stop):
            u = order[i]
            row = nbr[u]
            erow = nbe[u]
            for j in range(len(row)):
                w = row[j]
                if w < 0 or not ob[erow[j]] or not al[w]:
                    continue
                dw = dist[w]
                if dw < 0:
                    dist[w] = step + 1
                    order.append(w)
                    inner += 1
                elif dw == step + 1:
                    inner += 1
        bnd_allowed.append(inner)
        bnd_total.append(inner + outside)
        if len(order) == stop:
            halted = True
            break
        if max_steps >= 0 and step >= max_steps:
            for i in range(stop, len(order)):
                dist[order[i]] = -1
            del order[stop:]
            break
        for i in range(stop, len(order)):
            u = order[i]
            for j, w in enumerate(nbr[u]):
                if w >= 0 and ob[nbe[u][j]] and not al[w]:
                    outside += 1
        layer_end.append(len(order))
        start = stop
        step += 1
    return (
        np.asarray(order, dtype=np.int64),
        np.asarray(layer_end, dtype=np.int64),
        np.asarray(bnd_allowed, dtype=np.int64),
        np.asarray(bnd_total, dtype=np.int64),
        halted,
    )


def label_components(nbr, nbe, open_bits):
    """Union-find over open edges; each vertex is labelled by the least rank in its cluster."""
    V = nbr.shape[0]
    parent = list(range(V))
    nbr_l = nbr.tolist()
    nbe_l = nbe.tolist()
    ob = open_bits.tolist()
    d2 = nbr.shape[1]

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u in range(V):
        row = nbr_l[u]
        erow = nbe_l[u]
        for j in range(0, d2, 2):
            w = row[j]
            if w >= 0 and ob[erow[j]]:
                a, b = find(u), find(w)
                if a != b:
                    if a < b:
                        parent[b] = a
                    else:
                        parent[a] = b
    return np.asarray([find(u) for u in range(V)], dtype=np.int64)


def dinic(first, adj, head, cap, s, t):
    """Dinic max-flow on a CSR arc list; ``cap`` is updated in place to residuals.

    Arcs ``2k`` and ``2k+1`` are mutual reverses.  Returns the flow value.
    """
    first = first.tolist()
    adj = adj.tolist()
    head = head.tolist()
    res = cap.tolist()
    n = len(first) - 1
    flow = 0
    while True:
        level = [-1] * n
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for i in range(first[u], first[u + 1]):
                a = adj[i]
                v = head[a]
                if res[a] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    q.append(v)
        if level[t] < 0:
            break
        it = first[:-1]
        while True:
            # iterative DFS along the level graph with current-arc pointers
            path = []
            u = s
            while u != t:
                advanced = False
                while it[u] < first[u + 1]:
                    a = adj[it[u]]
                    v = head[a]
                    if res[a] > 0 and level[v] == level[u] + 1:
                        path.append(a)
                        u = v
                        advanced = True
                        break
                    it[u] += 1
                if not advanced:
                    if u == s:
                        break
                    level[u] = -1
                    a = path.pop()
                    u = head[a ^ 1]
                    it[u] += 1
            if u != t:
                break
            push = min(res[a] for a in path)
            for a in path:
                res[a] -= push
                res[a ^ 1] += push
            flow += push
    cap[:] = res
    return flow


def residual_reach(first, adj, head, res, s):
    """Vertices reachable from ``s`` in the residual graph (uint8 mask)."""
    first_l = first.tolist()
    adj_l = adj.tolist()
    head_l = head.tolist()
    res_l = res.tolist()
    n = len(first_l) - 1
    seen = [0] * n
    seen[s] = 1
    q = deque([s])
    while q:
        u = q.popleft()
        for i in range(first_l[u], first_l[u + 1]):
            a = adj_l[i]
            v = head_l[a]
            if res_l[a] > 0 and not seen[v]:
                seen[v] = 1
                q.append(v)
    return np.asarray(seen, dtype=np.uint8)


def greedy_grow(nbr, nbe, open_bits, origin, cap):
    """Grow from ``origin`` adding the frontier vertex with least boundary increase.

    Ties go to the shallower discovery depth, then the smaller rank.  Returns
    ``(order, boundary)`` where ``boundary[i]`` is |∂°H| after adding ``order[:i+1]``.
    """
    nbr_l = nbr.tolist()
    nbe_l = nbe.tolist()
    ob = open_bits.tolist()
    V = len(nbr_l)
    inH = [0] * V
    cnt = [0] * V
    depth = [-1] * V
    frontier = []
    order = [origin]
    inH[origin] = 1
    depth[origin] = 0
    row = nbr_l[origin]
    b = 0
    for j, w in enumerate(row):
        if w >= 0 and ob[nbe_l[origin][j]]:
            b += 1
            cnt[w] += 1
            if cnt[w] == 1:
                frontier.append(w)
                depth[w] = 1
    boundary = [b]
    while len(order) < cap and frontier:
        best_i = -1
        best_key = None
        for i, x in enumerate(frontier):
            dx = 0
            for j, w in enumerate(nbr_l[x]):
                if w >= 0 and ob[nbe_l[x][j]]:
                    dx += 1
            key = (dx - 2 * cnt[x], depth[x], x)
            if best_key is None or key < best_key:
                best_key = key
                best_i = i
        x = frontier[best_i]
        frontier[best_i] = frontier[-1]
        frontier.pop()
        b += best_key[0]
        inH[x] = 1
        order.append(x)
        boundary.append(b)
        for j, w in enumerate(nbr_l[x]):
            if w >= 0 and ob[nbe_l[x][j]]:
                cnt[w] += 1
                if not inH[w] and cnt[w] == 1:
                    frontier.append(w)
                    depth[w] = depth[x] + 1
    return np.asarray(order, dtype=np.int64), np.asarray(boundary, dtype=np.int64)


def anneal(nbr, nbe, open_bits, origin, cap, init, steps, t0, t1, seed):
    """Simulated annealing over connected vertex sets containing ``origin``.

    Moves add a frontier vertex or remove a non-origin, non-articulation member.
    The energy change of a move is ``(b'/s' - b/s) * s``; the temperature decays
    geometrically from ``t0`` to ``t1``.  Returns ``(best_members, best_b, best_s)``.
    """
    nbr_l = nbr.tolist()
    nbe_l = nbe.tolist()
    ob = open_bits.tolist()
    V = len(nbr_l)
    rng = _SplitMix(seed)
    inH = bytearray(V)
    cnt = [0] * V
    pos_m = [-1] * V
    pos_f = [-1] * V
    members = []
    frontier = []
    stamp = [0] * V
    cur_stamp = 0

    def onbrs(u):
        row = nbr_l[u]
        erow = nbe_l[u]
        return [row[j] for j in range(len(row)) if row[j] >= 0 and ob[erow[j]]]

    cache = {}

    def nb(u):
        r = cache.get(u)
        if r is None:
            r = onbrs(u)
            cache[u] = r
        return r

    def add(x):
        inH[x] = 1
        i = pos_f[x]
        if i >= 0:
            last = frontier.pop()
            if last != x:
                frontier[i] = last
                pos_f[last] = i
            pos_f[x] = -1
        pos_m[x] = len(members)
        members.append(x)
        for w in nb(x):
            cnt[w] += 1
            if not inH[w] and cnt[w] == 1:
                pos_f[w] = len(frontier)
                frontier.append(w)

    def remove(y):
        inH[y] = 0
        i = pos_m[y]
        last = members.pop()
        if last != y:
            members[i] = last
            pos_m[last] = i
        pos_m[y] = -1
        for w in nb(y):
            cnt[w] -= 1
            if not inH[w] and cnt[w] == 0:
                j = pos_f[w]
                lastf = frontier.pop()
                if lastf != w:
                    frontier[j] = lastf
                    pos_f[lastf] = j
                pos_f[w] = -1
        if cnt[y] > 0:
            pos_f[y] = len(frontier)
            frontier.append(y)

    b = 0
    for x in init.tolist():
        if inH[x]:
            continue
        dx = len(nb(x))
        b += dx - 2 * cnt[x]
        add(x)
    s = len(members)
    best = list(members)
    best_b, best_s = b, s
    T = t0
    factor = (t1 / t0) ** (1.0 / steps) if steps > 0 else 1.0
    for _ in range(steps):
        T *= factor
        r = rng.next()
        if (r >> 63) == 0:
            nf = len(frontier)
            if s >= cap or nf == 0:
                continue
            x = frontier[rng.next() % nf]
            nbv = b + len(nb(x)) - 2 * cnt[x]
            ns = s + 1
            dE = (nbv / ns - b / s) * s
            if dE > 0.0 and rng.uniform() >= math.exp(-dE / T):
                continue
            add(x)
        else:
            if s <= 1:
                continue
            y = members[rng.next() % s]
            if y == origin:
                continue
            nbv = b + 2 * cnt[y] - len(nb(y))
            ns = s - 1
            dE = (nbv / ns - b / s) * s
            if dE > 0.0 and rng.uniform() >= math.exp(-dE / T):
                continue
            k = cnt[y]
            if k > 1:
                cur_stamp += 1
                stamp[y] = cur_stamp
                start = -1
                for w in nb(y):
                    if inH[w]:
                        start = w
                        break
                stamp[start] = cur_stamp
                found = 1
                q = deque([start])
                while q and found < k:
                    u = q.popleft()
                    for w in nb(u):
                        if inH[w] and stamp[w] != cur_stamp:
                            stamp[w] = cur_stamp
                            q.append(w)
                            if w in nb(y):
                                found += 1
                if found < k:
                    continue
            remove(y)
        b, s = nbv, ns
        if b * best_s < best_b * s:
            best = list(members)
            best_b, best_s = b, s
    return np.asarray(best, dtype=np.int64), best_b, best_s
