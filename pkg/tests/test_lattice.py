import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from percolab.lattice import (
    BondConfig,
    ConfigFormatError,
    ConfigStateError,
    LatticeSizeError,
    build_box,
    build_grid,
    derive_seed,
    dumps_config,
    edge_uniforms,
    load_config,
    loads_config,
    monotone_couple,
    sample_config,
    save_config,
)

from oracles import box_edges, box_points

boxes = st.tuples(st.integers(2, 3), st.integers(1, 3)).filter(lambda t: (2 * t[1] + 1) ** t[0] <= 400)


@pytest.mark.parametrize("d,R,V,E", [(2, 1, 9, 12), (3, 1, 27, 54), (2, 2, 25, 40)])
def test_box_counts(d, R, V, E):
    lat = build_box(d, R)
    assert lat.vertex_count == V
    assert lat.edge_count == E


@given(boxes)
def test_edge_counts_match_enumeration(dR):
    d, R = dR
    lat = build_box(d, R)
    assert lat.vertex_count == len(box_points(d, R))
    assert lat.edge_count == len(box_edges(d, R))


@given(boxes)
def test_vertex_rank_is_lexicographic(dR):
    d, R = dR
    lat = build_box(d, R)
    pts = sorted(box_points(d, R))
    assert [lat.rank(x) for x in pts] == list(range(len(pts)))
    assert [lat.coords(i) for i in range(len(pts))] == pts


@given(boxes)
def test_edges_are_unit_steps_inside_the_box(dR):
    d, R = dR
    lat = build_box(d, R)
    t = lat.vertex_coords[lat.edge_tail]
    h = lat.vertex_coords[lat.edge_head]
    assert (np.abs(h - t).sum(axis=1) == 1).all()
    assert (np.abs(t) <= R).all() and (np.abs(h) <= R).all()
    pairs = {(tuple(a), tuple(b)) for a, b in zip(t.tolist(), h.tolist())}
    assert pairs == set(box_edges(d, R))


@given(boxes)
def test_edge_encoding_round_trip(dR):
    lat = build_box(*dR)
    for e in range(lat.edge_count):
        rank, axis = lat.decode_edge(e)
        assert lat.encode_edge(rank, axis) == e
    # edge ids follow (rank, axis) order
    keys = [lat.decode_edge(e) for e in range(lat.edge_count)]
    assert keys == sorted(keys)


def test_boundary_mask():
    lat = build_box(2, 2)
    on = {tuple(x) for x in lat.vertex_coords[lat.boundary_mask].tolist()}
    assert on == {x for x in box_points(2, 2) if max(map(abs, x)) == 2}


def test_invalid_boxes():
    with pytest.raises(ValueError):
        build_box(1, 3)
    with pytest.raises(ValueError):
        build_box(2, 0)
    with pytest.raises(LatticeSizeError):
        build_box(3, 10**6)


def test_grid_shape():
    lat = build_grid((3, 5))
    assert lat.vertex_count == 15
    assert lat.edge_count == 2 * 5 + 3 * 4
    assert lat.radius is None


@pytest.mark.parametrize("p,expected", [(0.0, 0), (1.0, 1)])
def test_degenerate_densities(p, expected):
    cfg = sample_config(build_box(2, 3), p, 5)
    assert (cfg.open_bits == expected).all()


def test_sampling_is_deterministic():
    lat = build_box(2, 6)
    a = sample_config(lat, 0.4, 99)
    b = sample_config(lat, 0.4, 99)
    c = sample_config(lat, 0.4, 100)
    assert np.array_equal(a.open_bits, b.open_bits)
    assert not np.array_equal(a.open_bits, c.open_bits)


def test_shared_edges_agree_across_box_sizes():
    small, big = build_box(2, 3), build_box(2, 7)
    us, ub = edge_uniforms(small, 11), edge_uniforms(big, 11)
    for e in range(small.edge_count):
        u = tuple(small.vertex_coords[small.edge_tail[e]])
        v = tuple(small.vertex_coords[small.edge_head[e]])
        assert us[e] == ub[big.edge_between(u, v)]


def test_mean_open_fraction_half():
    lat = build_box(2, 64)
    fr = np.array([sample_config(lat, 0.5, s).open_count / lat.edge_count for s in range(1000)])
    se = np.sqrt(0.25 / (lat.edge_count * fr.size))
    assert abs(fr.mean() - 0.5) < 3 * se


def test_per_edge_frequency():
    lat = build_box(2, 4)
    freq = np.mean([sample_config(lat, 0.3, s).open_bits for s in range(600)], axis=0)
    se = np.sqrt(0.3 * 0.7 / 600)
    assert (np.abs(freq - 0.3) < 5 * se).all()


def test_uniforms_threshold_to_bits():
    cfg = sample_config(build_box(2, 5), 0.37, 3, retain_uniforms=True)
    assert np.array_equal(cfg.open_bits.astype(bool), cfg.uniforms < 0.37)
    assert ((cfg.uniforms >= 0) & (cfg.uniforms < 1)).all()


@given(st.integers(0, 2**64 - 1), st.floats(0, 0.9), st.floats(0, 1))
def test_monotone_coupling(seed, p, q):
    lat = build_box(2, 4)
    cfg = sample_config(lat, p, seed, retain_uniforms=True)
    up = monotone_couple(cfg, max(p, q))
    assert (up.open_bits >= cfg.open_bits).all()
    assert np.array_equal(monotone_couple(cfg, p).open_bits, cfg.open_bits)
    assert np.array_equal(up.open_bits, sample_config(lat, max(p, q), seed).open_bits)


def test_coupling_examples():
    lat = build_box(2, 8)
    for s in range(100):
        cfg = sample_config(lat, 0.45, s, retain_uniforms=True)
        assert monotone_couple(cfg, 0.55).open_count >= cfg.open_count
        assert monotone_couple(cfg, 1.0).open_count == lat.edge_count


def test_coupling_needs_uniforms():
    with pytest.raises(ConfigStateError):
        monotone_couple(sample_config(build_box(2, 2), 0.5, 0), 0.7)


def test_invalid_density():
    with pytest.raises(ValueError):
        sample_config(build_box(2, 2), 1.5, 0)


def test_derive_seed_is_stable_and_spread():
    assert derive_seed(1, 2) == derive_seed(1, 2)
    seeds = {derive_seed(7, t) for t in range(1000)}
    assert len(seeds) == 1000
    assert all(0 <= s < 2**64 for s in seeds)


@given(st.integers(2, 3), st.integers(1, 3), st.floats(0, 1), st.integers(0, 2**64 - 1))
def test_binary_round_trip(d, R, p, seed):
    cfg = sample_config(build_box(d, R), p, seed)
    back = loads_config(dumps_config(cfg))
    assert back.lattice == cfg.lattice
    assert back.p == cfg.p and back.master_seed == cfg.master_seed
    assert np.array_equal(back.open_bits, cfg.open_bits)


def test_binary_layout():
    cfg = sample_config(build_box(2, 1), 1.0, 7)
    blob = dumps_config(cfg)
    assert blob[:4] == b"BPCF"
    # 12 open edges, little-endian bit packing: 0xff then 0x0f
    assert blob[-2:] == bytes([0xFF, 0x0F])


def test_binary_rejects_corruption(tmp_path):
    cfg = sample_config(build_box(2, 2), 0.5, 1)
    blob = dumps_config(cfg)
    with pytest.raises(ConfigFormatError):
        loads_config(b"XXXX" + blob[4:])
    with pytest.raises(ConfigFormatError):
        loads_config(blob[:-1])
    with pytest.raises(ConfigFormatError):
        loads_config(blob + b"\x00")
    # padding bits past the last edge must be zero (12 edges leave 4 spare bits)
    small = dumps_config(sample_config(build_box(2, 1), 0.5, 1))
    with pytest.raises(ConfigFormatError):
        loads_config(small[:-1] + bytes([small[-1] | 0x80]))
    path = tmp_path / "c.bin"
    save_config(cfg, path)
    assert np.array_equal(load_config(path).open_bits, cfg.open_bits)


def test_config_is_read_only():
    cfg = sample_config(build_box(2, 2), 0.5, 1)
    with pytest.raises(ValueError):
        cfg.open_bits[0] = 1
    with pytest.raises(ValueError):
        BondConfig(cfg.lattice, 0.5, np.zeros(3, dtype=np.uint8), 0)
