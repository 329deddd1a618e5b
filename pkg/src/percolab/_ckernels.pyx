# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels.  Mirrors ``_pykernels`` exactly, including the annealing RNG stream."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, pow
from libc.stdint cimport int64_t, uint64_t, uint8_t

cnp.import_array()

BACKEND = "cython"


cdef inline uint64_t _next(uint64_t* state) noexcept nogil:
    cdef uint64_t z
    state[0] += 0x9E3779B97F4A7C15ULL
    z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t* state) noexcept nogil:
    return <double>(_next(state) >> 11) * (1.0 / 9007199254740992.0)


def explore_layers(const int64_t[:, :] nbr, const int64_t[:, :] nbe,
                   const uint8_t[:] open_bits, const int64_t[:] seeds,
                   const uint8_t[:] allowed, int64_t max_steps):
    cdef Py_ssize_t V = nbr.shape[0], D2 = nbr.shape[1]
    cdef int64_t[:] dist = np.full(V, -1, dtype=np.int64)
    cdef int64_t[:] order = np.empty(V, dtype=np.int64)
    cdef Py_ssize_t n = 0, i, j, start = 0, stop
    cdef int64_t u, w, step = 0, inner, outside = 0
    cdef bint halted = False
    layer_end = []
    bnd_allowed = []
    bnd_total = []
    for i in range(seeds.shape[0]):
        u = seeds[i]
        if dist[u] < 0:
            dist[u] = 0
            order[n] = u
            n += 1
    for i in range(n):
        u = order[i]
        for j in range(D2):
            w = nbr[u, j]
            if w >= 0 and open_bits[nbe[u, j]] and not allowed[w]:
                outside += 1
    layer_end.append(n)
    while True:
        stop = n
        inner = 0
        for i in range(start, stop):
            u = order[i]
            for j in range(D2):
                w = nbr[u, j]
                if w < 0 or not open_bits[nbe[u, j]] or not allowed[w]:
                    continue
                if dist[w] < 0:
                    dist[w] = step + 1
                    order[n] = w
                    n += 1
                    inner += 1
                elif dist[w] == step + 1:
                    inner += 1
        bnd_allowed.append(inner)
        bnd_total.append(inner + outside)
        if n == stop:
            halted = True
            break
        if max_steps >= 0 and step >= max_steps:
            for i in range(stop, n):
                dist[order[i]] = -1
            n = stop
            break
        for i in range(stop, n):
            u = order[i]
            for j in range(D2):
                w = nbr[u, j]
                if w >= 0 and open_bits[nbe[u, j]] and not allowed[w]:
                    outside += 1
        layer_end.append(n)
        start = stop
        step += 1
    return (
        np.asarray(order[:n]).copy(),
        np.asarray(layer_end, dtype=np.int64),
        np.asarray(bnd_allowed, dtype=np.int64),
        np.asarray(bnd_total, dtype=np.int64),
        halted,
    )


cdef inline int64_t _find(int64_t[:] parent, int64_t x) noexcept nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def label_components(const int64_t[:, :] nbr, const int64_t[:, :] nbe, const uint8_t[:] open_bits):
    cdef Py_ssize_t V = nbr.shape[0], D2 = nbr.shape[1], u, j
    cdef int64_t w, a, b
    out = np.arange(V, dtype=np.int64)
    cdef int64_t[:] parent = out
    with nogil:
        for u in range(V):
            for j in range(0, D2, 2):
                w = nbr[u, j]
                if w >= 0 and open_bits[nbe[u, j]]:
                    a = _find(parent, u)
                    b = _find(parent, w)
                    if a != b:
                        if a < b:
                            parent[b] = a
                        else:
                            parent[a] = b
        for u in range(V):
            parent[u] = _find(parent, u)
    return out


def dinic(const int64_t[:] first, const int64_t[:] adj, const int64_t[:] head,
          int64_t[:] cap, int64_t s, int64_t t):
    cdef Py_ssize_t n = first.shape[0] - 1
    cdef int64_t[:] level = np.empty(n, dtype=np.int64)
    cdef int64_t[:] it = np.empty(n, dtype=np.int64)
    cdef int64_t[:] queue = np.empty(n, dtype=np.int64)
    cdef int64_t[:] path = np.empty(n + 1, dtype=np.int64)
    cdef Py_ssize_t qh, qt, plen, i
    cdef int64_t u, v, a, push, flow = 0
    cdef bint advanced
    with nogil:
        while True:
            for i in range(n):
                level[i] = -1
            level[s] = 0
            queue[0] = s
            qh = 0
            qt = 1
            while qh < qt:
                u = queue[qh]
                qh += 1
                for i in range(first[u], first[u + 1]):
                    a = adj[i]
                    v = head[a]
                    if cap[a] > 0 and level[v] < 0:
                        level[v] = level[u] + 1
                        queue[qt] = v
                        qt += 1
            if level[t] < 0:
                break
            for i in range(n):
                it[i] = first[i]
            while True:
                plen = 0
                u = s
                while u != t:
                    advanced = False
                    while it[u] < first[u + 1]:
                        a = adj[it[u]]
                        v = head[a]
                        if cap[a] > 0 and level[v] == level[u] + 1:
                            path[plen] = a
                            plen += 1
                            u = v
                            advanced = True
                            break
                        it[u] += 1
                    if not advanced:
                        if u == s:
                            break
                        level[u] = -1
                        plen -= 1
                        a = path[plen]
                        u = head[a ^ 1]
                        it[u] += 1
                if u != t:
                    break
                push = cap[path[0]]
                for i in range(1, plen):
                    if cap[path[i]] < push:
                        push = cap[path[i]]
                for i in range(plen):
                    cap[path[i]] -= push
                    cap[path[i] ^ 1] += push
                flow += push
    return flow


def residual_reach(const int64_t[:] first, const int64_t[:] adj, const int64_t[:] head,
                   const int64_t[:] res, int64_t s):
    cdef Py_ssize_t n = first.shape[0] - 1, qh = 0, qt = 1, i
    out = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[:] seen = out
    cdef int64_t[:] queue = np.empty(n, dtype=np.int64)
    cdef int64_t u, v, a
    seen[s] = 1
    queue[0] = s
    with nogil:
        while qh < qt:
            u = queue[qh]
            qh += 1
            for i in range(first[u], first[u + 1]):
                a = adj[i]
                v = head[a]
                if res[a] > 0 and not seen[v]:
                    seen[v] = 1
                    queue[qt] = v
                    qt += 1
    return out


def greedy_grow(const int64_t[:, :] nbr, const int64_t[:, :] nbe, const uint8_t[:] open_bits,
                int64_t origin, int64_t cap):
    cdef Py_ssize_t V = nbr.shape[0], D2 = nbr.shape[1], j, i, best_i, nf = 0, no = 0
    cdef uint8_t[:] inH = np.zeros(V, dtype=np.uint8)
    cdef int64_t[:] cnt = np.zeros(V, dtype=np.int64)
    cdef int64_t[:] depth = np.full(V, -1, dtype=np.int64)
    cdef int64_t[:] frontier = np.empty(V, dtype=np.int64)
    order_arr = np.empty(min(cap, V), dtype=np.int64)
    bnd_arr = np.empty(min(cap, V), dtype=np.int64)
    cdef int64_t[:] order = order_arr
    cdef int64_t[:] boundary = bnd_arr
    cdef int64_t w, x, b = 0, dx, key0, key1, key2, b0, b1, b2
    with nogil:
        inH[origin] = 1
        depth[origin] = 0
        order[0] = origin
        no = 1
        for j in range(D2):
            w = nbr[origin, j]
            if w >= 0 and open_bits[nbe[origin, j]]:
                b += 1
                cnt[w] += 1
                if cnt[w] == 1:
                    frontier[nf] = w
                    nf += 1
                    depth[w] = 1
        boundary[0] = b
        while no < cap and nf > 0:
            best_i = -1
            b0 = 0
            b1 = 0
            b2 = 0
            for i in range(nf):
                x = frontier[i]
                dx = 0
                for j in range(D2):
                    w = nbr[x, j]
                    if w >= 0 and open_bits[nbe[x, j]]:
                        dx += 1
                key0 = dx - 2 * cnt[x]
                key1 = depth[x]
                key2 = x
                if best_i < 0 or key0 < b0 or (key0 == b0 and (key1 < b1 or (key1 == b1 and key2 < b2))):
                    best_i = i
                    b0 = key0
                    b1 = key1
                    b2 = key2
            x = frontier[best_i]
            frontier[best_i] = frontier[nf - 1]
            nf -= 1
            b += b0
            inH[x] = 1
            order[no] = x
            boundary[no] = b
            no += 1
            for j in range(D2):
                w = nbr[x, j]
                if w >= 0 and open_bits[nbe[x, j]]:
                    cnt[w] += 1
                    if not inH[w] and cnt[w] == 1:
                        frontier[nf] = w
                        nf += 1
                        depth[w] = depth[x] + 1
    return order_arr[:no].copy(), bnd_arr[:no].copy()


cdef struct AnnealState:
    const int64_t* nbr
    const int64_t* nbe
    const uint8_t* ob
    Py_ssize_t D2
    uint8_t* inH
    int64_t* cnt
    int64_t* pos_m
    int64_t* pos_f
    int64_t* members
    int64_t* frontier
    Py_ssize_t nm
    Py_ssize_t nf


cdef inline bint _onb(AnnealState* st, int64_t u, Py_ssize_t j, int64_t* w) noexcept nogil:
    w[0] = st.nbr[u * st.D2 + j]
    return w[0] >= 0 and st.ob[st.nbe[u * st.D2 + j]] != 0


cdef inline int64_t _odeg(AnnealState* st, int64_t u) noexcept nogil:
    cdef int64_t w, k = 0
    cdef Py_ssize_t j
    for j in range(st.D2):
        if _onb(st, u, j, &w):
            k += 1
    return k


cdef void _add(AnnealState* st, int64_t x) noexcept nogil:
    cdef int64_t i, last, w
    cdef Py_ssize_t j
    st.inH[x] = 1
    i = st.pos_f[x]
    if i >= 0:
        st.nf -= 1
        last = st.frontier[st.nf]
        if last != x:
            st.frontier[i] = last
            st.pos_f[last] = i
        st.pos_f[x] = -1
    st.pos_m[x] = st.nm
    st.members[st.nm] = x
    st.nm += 1
    for j in range(st.D2):
        if _onb(st, x, j, &w):
            st.cnt[w] += 1
            if not st.inH[w] and st.cnt[w] == 1:
                st.pos_f[w] = st.nf
                st.frontier[st.nf] = w
                st.nf += 1


cdef void _remove(AnnealState* st, int64_t y) noexcept nogil:
    cdef int64_t i, last, w, k
    cdef Py_ssize_t j
    st.inH[y] = 0
    i = st.pos_m[y]
    st.nm -= 1
    last = st.members[st.nm]
    if last != y:
        st.members[i] = last
        st.pos_m[last] = i
    st.pos_m[y] = -1
    for j in range(st.D2):
        if _onb(st, y, j, &w):
            st.cnt[w] -= 1
            if not st.inH[w] and st.cnt[w] == 0:
                k = st.pos_f[w]
                st.nf -= 1
                last = st.frontier[st.nf]
                if last != w:
                    st.frontier[k] = last
                    st.pos_f[last] = k
                st.pos_f[w] = -1
    if st.cnt[y] > 0:
        st.pos_f[y] = st.nf
        st.frontier[st.nf] = y
        st.nf += 1


def anneal(const int64_t[:, ::1] nbr, const int64_t[:, ::1] nbe, const uint8_t[::1] open_bits,
           int64_t origin, int64_t cap, const int64_t[:] init, int64_t steps,
           double t0, double t1, uint64_t seed):
    cdef Py_ssize_t V = nbr.shape[0], j, qh, qt
    inH_a = np.zeros(V, dtype=np.uint8)
    cnt_a = np.zeros(V, dtype=np.int64)
    pos_m_a = np.full(V, -1, dtype=np.int64)
    pos_f_a = np.full(V, -1, dtype=np.int64)
    members_a = np.empty(V, dtype=np.int64)
    frontier_a = np.empty(V, dtype=np.int64)
    best_a = np.empty(V, dtype=np.int64)
    stamp_a = np.zeros(V, dtype=np.int64)
    queue_a = np.empty(V, dtype=np.int64)
    cdef uint8_t[::1] inH = inH_a
    cdef int64_t[::1] cnt = cnt_a
    cdef int64_t[::1] pos_m = pos_m_a
    cdef int64_t[::1] pos_f = pos_f_a
    cdef int64_t[::1] members = members_a
    cdef int64_t[::1] frontier = frontier_a
    cdef int64_t[::1] best = best_a
    cdef int64_t[::1] stamp = stamp_a
    cdef int64_t[::1] queue = queue_a
    cdef AnnealState st
    st.nbr = &nbr[0, 0]
    st.nbe = &nbe[0, 0]
    st.ob = &open_bits[0]
    st.D2 = nbr.shape[1]
    st.inH = &inH[0]
    st.cnt = &cnt[0]
    st.pos_m = &pos_m[0]
    st.pos_f = &pos_f[0]
    st.members = &members[0]
    st.frontier = &frontier[0]
    st.nm = 0
    st.nf = 0
    cdef uint64_t rng = seed
    cdef uint64_t r
    cdef int64_t b = 0, s, nbv = 0, ns = 0, best_b, best_s, x, y, w, k, found, start, cur_stamp = 0, u
    cdef Py_ssize_t i, it, nbest
    cdef double T = t0, factor, dE
    cdef bint ok
    for i in range(init.shape[0]):
        x = init[i]
        if inH[x]:
            continue
        b += _odeg(&st, x) - 2 * cnt[x]
        _add(&st, x)
    s = st.nm
    for i in range(st.nm):
        best[i] = members[i]
    nbest = st.nm
    best_b = b
    best_s = s
    if steps > 0:
        factor = pow(t1 / t0, 1.0 / steps)
    else:
        factor = 1.0
    with nogil:
        for it in range(steps):
            T *= factor
            r = _next(&rng)
            if (r >> 63) == 0:
                if s >= cap or st.nf == 0:
                    continue
                x = frontier[_next(&rng) % <uint64_t>st.nf]
                nbv = b + _odeg(&st, x) - 2 * cnt[x]
                ns = s + 1
                dE = (<double>nbv / ns - <double>b / s) * s
                if dE > 0.0 and _uniform(&rng) >= exp(-dE / T):
                    continue
                _add(&st, x)
            else:
                if s <= 1:
                    continue
                y = members[_next(&rng) % <uint64_t>s]
                if y == origin:
                    continue
                nbv = b + 2 * cnt[y] - _odeg(&st, y)
                ns = s - 1
                dE = (<double>nbv / ns - <double>b / s) * s
                if dE > 0.0 and _uniform(&rng) >= exp(-dE / T):
                    continue
                k = cnt[y]
                if k > 1:
                    # y must not be an articulation point of H
                    cur_stamp += 2
                    start = -1
                    for j in range(st.D2):
                        if _onb(&st, y, j, &w) and inH[w]:
                            stamp[w] = cur_stamp + 1
                            if start < 0:
                                start = w
                    stamp[y] = cur_stamp
                    stamp[start] = cur_stamp
                    found = 1
                    queue[0] = start
                    qh = 0
                    qt = 1
                    while qh < qt and found < k:
                        u = queue[qh]
                        qh += 1
                        for j in range(st.D2):
                            if _onb(&st, u, j, &w) and inH[w] and stamp[w] != cur_stamp:
                                if stamp[w] == cur_stamp + 1:
                                    found += 1
                                stamp[w] = cur_stamp
                                queue[qt] = w
                                qt += 1
                    if found < k:
                        continue
                _remove(&st, y)
            b = nbv
            s = ns
            if b * best_s < best_b * s:
                for i in range(st.nm):
                    best[i] = members[i]
                nbest = st.nm
                best_b = b
                best_s = s
    return best_a[:nbest].copy(), best_b, best_s
