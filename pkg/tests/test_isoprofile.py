import json
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from percolab.cluster import open_cluster
from percolab.isoprofile import (
    CLUSTER_FITS_CAP,
    EXACT,
    UPPER_BOUND,
    AnnealSchedule,
    BudgetExceeded,
    boundary_ratio,
    face_connection_count,
    face_counts,
    profile,
    profile_anneal,
    profile_bruteforce,
    supercritical_profile,
)
from percolab.lattice import build_box, sample_config

from oracles import open_graph, profile_by_subsets

small_configs = st.tuples(st.integers(1, 2), st.floats(0.3, 0.8), st.integers(0, 2**32))


def _witness_ok(cfg, res, origin=None):
    lat = cfg.lattice
    o = lat.origin if origin is None else lat.vertex(origin)
    W = res.witness.tolist()
    assert o in W and 1 <= len(W) <= res.cap
    assert set(W) <= set(open_cluster(cfg, o).vertices.tolist())
    G = open_graph(cfg)
    assert nx.is_connected(G.subgraph([tuple(int(c) for c in lat.vertex_coords[v]) for v in W]))
    assert boundary_ratio(cfg, res.witness) == res.value


def test_zero_density():
    cfg = sample_config(build_box(2, 2), 0.0, 0)
    res = profile_bruteforce(cfg, cap=1)
    assert res.value == 0 and res.witness.tolist() == [cfg.lattice.origin]


def test_small_example_caps(small_config):
    lat = small_config.lattice
    res = profile_bruteforce(small_config, cap=2)
    assert res.value == Fraction(1, 2)
    assert res.witness.tolist() == sorted([lat.rank((0, 0)), lat.rank((0, 1))])
    res4 = profile_bruteforce(small_config, cap=4)
    assert res4.value == 0 and res4.zero_reason == CLUSTER_FITS_CAP


@pytest.mark.parametrize("n,value", [(2, Fraction(2)), (3, Fraction(4, 3))])
def test_full_lattice_squares_exact(n, value):
    cfg = sample_config(build_box(2, 2 * n), 1.0, 0)
    res = profile_bruteforce(cfg, cap=n * n, n=n)
    assert res.value == value and res.scaled == 4
    _witness_ok(cfg, res)
    x = cfg.lattice.vertex_coords[res.witness]
    assert (x.max(axis=0) - x.min(axis=0)).tolist() == [n - 1, n - 1]


@given(small_configs, st.integers(1, 8))
def test_bruteforce_matches_subset_oracle(args, cap):
    R, p, seed = args
    cfg = sample_config(build_box(2, R), p, seed)
    if open_cluster(cfg, cfg.lattice.origin).size > 14:
        return
    res = profile_bruteforce(cfg, cap=cap)
    assert res.value == profile_by_subsets(cfg, cap)
    _witness_ok(cfg, res)


@given(small_configs, st.integers(1, 8))
def test_witness_is_lexicographically_least(args, cap):
    import itertools

    R, p, seed = args
    cfg = sample_config(build_box(2, R), p, seed)
    cl = open_cluster(cfg, cfg.lattice.origin)
    if cl.size > 12 or cl.size <= cap:
        return
    res = profile_bruteforce(cfg, cap=cap)
    G = open_graph(cfg)
    lat = cfg.lattice
    o = lat.origin
    best = None
    others = [v for v in cl.vertices.tolist() if v != o]
    for k in range(cap):
        for rest in itertools.combinations(others, k):
            H = sorted((o,) + rest)
            if not nx.is_connected(G.subgraph([tuple(int(c) for c in lat.vertex_coords[v]) for v in H])):
                continue
            if boundary_ratio(cfg, np.array(H)) == res.value and (best is None or H < best):
                best = H
    assert res.witness.tolist() == best


@given(small_configs)
def test_profile_monotone_in_cap(args):
    R, p, seed = args
    cfg = sample_config(build_box(2, R), p, seed)
    vals = [profile_bruteforce(cfg, cap=c).value for c in range(1, 10)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_budget_refusal():
    cfg = sample_config(build_box(2, 6), 1.0, 0)
    with pytest.raises(BudgetExceeded):
        profile_bruteforce(cfg, cap=20)


@given(st.tuples(st.integers(1, 3), st.floats(0, 1), st.integers(0, 2**32)), st.integers(1, 3))
def test_zero_iff_cluster_fits(args, n):
    R, p, seed = args
    cfg = sample_config(build_box(2, R), p, seed)
    cl = open_cluster(cfg, cfg.lattice.origin)
    res = profile(cfg, n=n, schedule=AnnealSchedule(steps=2000), restarts=2)
    assert (res.value == 0) == (cl.size <= n * n)
    if res.value == 0:
        assert np.array_equal(res.witness, cl.vertices)
        assert res.zero_reason == CLUSTER_FITS_CAP
    _witness_ok(cfg, res)


def test_anneal_fast_path():
    cfg = sample_config(build_box(2, 3), 0.0, 0)
    res = profile_anneal(cfg, cap=5)
    assert res.value == 0 and res.mode == EXACT


@given(small_configs, st.integers(2, 8), st.integers(0, 2**32))
def test_anneal_is_an_upper_bound(args, cap, seed):
    R, p, s = args
    cfg = sample_config(build_box(2, R), p, s)
    exact = profile_bruteforce(cfg, cap=cap)
    heur = profile_anneal(cfg, cap=cap, schedule=AnnealSchedule(steps=500), restarts=2, seed=seed)
    assert heur.value >= exact.value
    _witness_ok(cfg, heur)


def test_anneal_full_lattice_n4():
    cfg = sample_config(build_box(2, 8), 1.0, 0)
    res = profile(cfg, n=4)
    assert res.mode == UPPER_BOUND and res.scaled == 4


def test_dispatch_modes():
    cfg = sample_config(build_box(2, 6), 1.0, 0)
    assert profile(cfg, n=3).mode == EXACT
    assert profile(cfg, n=4).mode == UPPER_BOUND


def test_anneal_deterministic():
    cfg = sample_config(build_box(2, 12), 0.6, 4)
    a = profile_anneal(cfg, cap=36, restarts=3, seed=9)
    b = profile_anneal(cfg, cap=36, restarts=3, seed=9)
    assert a.value == b.value and np.array_equal(a.witness, b.witness)


def test_result_json():
    cfg = sample_config(build_box(2, 6), 1.0, 0)
    doc = json.loads(profile(cfg, n=3).to_json())
    assert doc["value"] == "4/3" and doc["witness_size"] == 9 and doc["mode"] == "exact"
    assert doc["zero_reason"] is None and doc["truncated"] is True and doc["discarded"] is False


@pytest.mark.slow
@pytest.mark.xfail(
    strict=True,
    reason="critical clusters exceed 64 vertices in about 70-75% of samples at R=32 "
    "(independent networkx sampling gives the same share), so a 60% zero share is out of reach",
)
def test_critical_zero_share_n8():
    """At least 60% of critical samples give 0 at n=8, R=32."""
    lat = build_box(2, 32)
    zeros = 0
    for s in range(200):
        cfg = sample_config(lat, 0.5, s)
        zeros += open_cluster(cfg, lat.origin).size <= 64
    assert zeros >= 0.6 * 200


def test_supercritical_extremes():
    lat = build_box(2, 8)
    for cond in ("boundary", "largest"):
        full = supercritical_profile(sample_config(lat, 1.0, 0), 2, cond)
        assert not full.discarded and full.value == 2 and full.conditioning == cond
        empty = supercritical_profile(sample_config(lat, 0.0, 0), 2, cond)
        assert empty.discarded and empty.value is None
    with pytest.raises(ValueError):
        supercritical_profile(sample_config(lat, 1.0, 0), 2, "bogus")


@pytest.mark.slow
def test_supercritical_positive_median():
    lat = build_box(2, 64)
    vals, s = [], 0
    while len(vals) < 200:
        res = supercritical_profile(sample_config(lat, 0.7, s), 16, "boundary", restarts=2)
        s += 1
        if not res.discarded:
            vals.append(res.scaled)
    assert sorted(vals)[100] > 0


def test_face_counts_extremes():
    lat = build_box(2, 5)
    for face in ((0, 1), (0, -1), (1, 1), (1, -1)):
        assert face_connection_count(sample_config(lat, 0.0, 0), 3, face).count == 0
        assert face_connection_count(sample_config(lat, 1.0, 0), 3, face).count == 7


def test_face_count_small_example(small_config):
    assert face_connection_count(small_config, 1, (0, 1)).count == 2


def test_face_count_domain_errors():
    cfg = sample_config(build_box(2, 3), 0.5, 0)
    with pytest.raises(ValueError):
        face_connection_count(cfg, 4, (0, 1))
    with pytest.raises(ValueError):
        face_connection_count(cfg, 2, (2, 1))


@given(st.tuples(st.integers(1, 6), st.floats(0, 1), st.integers(0, 2**32)), st.integers(1, 6))
def test_face_sum_and_union(args, n):
    R, p, seed = args
    n = min(n, R)
    cfg = sample_config(build_box(2, R), p, seed)
    counts, union = face_counts(cfg, n)
    assert all(0 <= fc.count <= 2 * n + 1 for fc in counts)
    assert sum(fc.count for fc in counts) >= union
    G = open_graph(cfg)
    sub = G.subgraph([x for x in G if max(map(abs, x)) <= n])
    comp = nx.node_connected_component(sub, (0, 0))
    assert union == sum(1 for x in comp if max(map(abs, x)) == n)
    for fc in counts:
        a, sgn = fc.face
        assert fc.count == sum(1 for x in comp if x[a] == sgn * n)
