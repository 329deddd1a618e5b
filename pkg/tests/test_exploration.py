from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from percolab.cluster import open_cluster, open_edge_boundary
from percolab.exploration import (
    block_length,
    explore_step,
    explore_until_halt,
    growth_certificate,
    history_violations,
)
from percolab.lattice import build_box, sample_config

from oracles import open_graph

configs = st.tuples(st.integers(2, 8), st.floats(0, 1), st.integers(0, 2**32))


def _coords(cfg, ranks):
    return {tuple(int(c) for c in x) for x in cfg.lattice.vertex_coords[np.asarray(ranks, dtype=np.int64)]}


def test_first_step_full_lattice():
    cfg = sample_config(build_box(2, 3), 1.0, 0)
    A, C = explore_step(cfg, [cfg.lattice.origin])
    assert A.size == 4 and C.size == 5


def test_small_example_step(small_config):
    lat = small_config.lattice
    A, C = explore_step(small_config, [lat.rank((0, 0))])
    assert _coords(small_config, A) == {(1, 0), (0, 1)}


def test_empty_start_rejected(small_config):
    with pytest.raises(ValueError):
        explore_step(small_config, [])


def test_start_outside_constraint(small_config):
    with pytest.raises(ValueError):
        explore_step(small_config, [small_config.lattice.rank((1, 1))], box_radius=0)


@given(configs, st.data())
def test_step_halts_iff_no_allowed_boundary(args, data):
    R, p, seed = args
    cfg = sample_config(build_box(2, R), p, seed)
    cl = open_cluster(cfg, cfg.lattice.origin)
    C = data.draw(st.lists(st.sampled_from(cl.vertices.tolist()), min_size=1, unique=True))
    A, nxt = explore_step(cfg, C)
    assert (A.size == 0) == (open_edge_boundary(cfg, C).size == 0)
    assert not set(A.tolist()) & set(C)
    assert set(nxt.tolist()) == set(C) | set(A.tolist())


def test_zero_density_halts_immediately():
    h = explore_until_halt(sample_config(build_box(2, 3), 0.0, 0))
    assert h.halted and h.length == 0 and h.c_sizes.tolist() == [1]


def test_full_density_constrained():
    cfg = sample_config(build_box(2, 6), 1.0, 0)
    h = explore_until_halt(cfg, box_radius=3, retain_sets=True)
    assert h.terminal_set().size == 49
    assert h.length == 6  # the l1 radius of the sub-box


@given(configs, st.one_of(st.none(), st.integers(1, 8)))
def test_history_invariants(args, n):
    R, p, seed = args
    cfg = sample_config(build_box(2, R), p, seed)
    n = None if n is None else min(n, R)
    h = explore_until_halt(cfg, box_radius=n, retain_sets=True)
    assert history_violations(h) == []
    for l in range(h.length):
        Cl, A = set(h.vertex_set(l).tolist()), set(h.shell(l + 1).tolist())
        assert not Cl & A
        assert h.c_sizes[l + 1] == h.c_sizes[l] + len(A)
        if n is None:
            assert h.boundary[l] <= 2 * cfg.lattice.d * len(A)


@given(configs)
def test_layers_are_graph_distances(args):
    R, p, seed = args
    cfg = sample_config(build_box(2, R), p, seed)
    h = explore_until_halt(cfg, retain_sets=True)
    G = open_graph(cfg)
    dist = nx.single_source_shortest_path_length(G, (0, 0))
    for l in range(h.length + 1):
        layer = _coords(cfg, h.vertex_set(l))
        assert layer == {x for x, k in dist.items() if k <= l}
        # contained in the l1 ball, hence in [-l, l]^d
        assert all(sum(map(abs, x)) <= l for x in layer)


@given(configs, st.integers(1, 8))
def test_constrained_terminal_is_subbox_cluster(args, n):
    R, p, seed = args
    n = min(n, R)
    cfg = sample_config(build_box(2, R), p, seed)
    h = explore_until_halt(cfg, box_radius=n, retain_sets=True)
    G = open_graph(cfg)
    sub = G.subgraph([x for x in G if max(map(abs, x)) <= n])
    assert _coords(cfg, h.terminal_set()) == set(nx.node_connected_component(sub, (0, 0)))


def test_terminal_matches_bfs_cluster():
    lat = build_box(2, 16)
    for s in range(100):
        cfg = sample_config(lat, 0.5, s)
        h = explore_until_halt(cfg, retain_sets=True)
        assert np.array_equal(h.terminal_set(), open_cluster(cfg, lat.origin).vertices)


def test_allowed_mask_restricts():
    lat = build_box(2, 4)
    cfg = sample_config(lat, 1.0, 0)
    h = explore_until_halt(cfg, allowed=lat.vertex_coords[:, 0] >= 0, retain_sets=True)
    assert h.terminal_set().size == 5 * 9


def test_max_steps_flagged():
    cfg = sample_config(build_box(2, 5), 1.0, 0)
    h = explore_until_halt(cfg, max_steps=2)
    assert not h.halted and h.length == 2


def test_csv_export():
    h = explore_until_halt(sample_config(build_box(2, 2), 1.0, 0))
    lines = h.to_csv().splitlines()
    assert lines[0] == "l,C_size,A_size,open_boundary"
    assert lines[1] == "0,1,0,4"
    assert lines[2] == "1,5,4,12"


@pytest.mark.parametrize("c,d,k", [(1, 2, 17), (Fraction(1, 3), 2, 49), (2, 3, 25), (16, 2, 2)])
def test_block_length(c, d, k):
    assert block_length(c, d) == k
    assert k > Fraction(2 ** (d + 1) * d) / Fraction(c)


def test_certificate_full_lattice():
    cfg = sample_config(build_box(2, 40), 1.0, 0)
    cert = growth_certificate(explore_until_halt(cfg), 1, 2)
    assert cert.k == 17 and cert.alpha == Fraction(1, 4)
    assert cert.verified_range and cert.passed and cert.implication_ok
    assert not cert.flags or cert.flags == ["cluster exhausted"]


def test_certificate_single_step():
    cfg = sample_config(build_box(2, 3), 1.0, 0)
    cert = growth_certificate(explore_until_halt(cfg, max_steps=1), 1, 2)
    assert cert.verified_range == [] and cert.truncated


def test_certificate_exhausted():
    cfg = sample_config(build_box(2, 3), 0.0, 0)
    cert = growth_certificate(explore_until_halt(cfg), 1, 2)
    assert not cert.passed and "cluster exhausted" in cert.flags


@given(configs, st.integers(1, 3), st.sampled_from([Fraction(1, 2), Fraction(1), Fraction(4)]))
def test_certificate_recomputable(args, n0, c):
    R, p, seed = args
    h = explore_until_halt(sample_config(build_box(2, R), p, seed))
    cert = growth_certificate(h, c, n0)
    for r in cert.verified_range:
        assert r.holds == (h.size_at(r.index) * n0**2 >= r.n**2)
    for s in cert.step_checks:
        assert s.scale == s.n + 1 == n0 + s.l // cert.k + 1
        assert s.in_regime == (s.size * n0**2 < s.scale**2)


@given(st.tuples(st.integers(4, 12), st.floats(0.3, 1), st.integers(0, 2**32)), st.integers(2, 3),
       st.sampled_from([Fraction(1, 2), Fraction(1), Fraction(3)]))
def test_ratio_bound_forces_growth(args, n0, c):
    """Whenever the ratio bound held on every admissible step so far, the growth target was met."""
    R, p, seed = args
    h = explore_until_halt(sample_config(build_box(2, R), p, seed))
    assert growth_certificate(h, c, n0).implication_ok


def test_certificate_rejects_bad_constants():
    h = explore_until_halt(sample_config(build_box(2, 2), 1.0, 0))
    with pytest.raises(ValueError):
        growth_certificate(h, 0, 2)
    with pytest.raises(ValueError):
        growth_certificate(h, 1, 0)
