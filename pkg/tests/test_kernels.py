"""Both kernel backends return identical results."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from percolab import kernels
from percolab.lattice import build_box, sample_config
from percolab.wulff.flow import strip_lattice

py = kernels.python_backend
cy = kernels.compiled_backend
needs_compiled = pytest.mark.skipif(cy is None, reason="compiled extension not built")

configs = st.tuples(st.integers(2, 3), st.integers(1, 4), st.sampled_from([0.0, 0.3, 0.5, 0.7, 1.0]), st.integers(0, 2**32))


def _cfg(d, R, p, seed):
    R = min(R, 2) if d == 3 else R
    return sample_config(build_box(d, R), p, seed)


def _same(a, b):
    if isinstance(a, tuple):
        assert len(a) == len(b)
        for x, y in zip(a, b):
            _same(x, y)
    elif isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        assert np.array_equal(np.asarray(a), np.asarray(b))
    else:
        assert a == b


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")
    if cy is not None:
        assert kernels.BACKEND == "cython"


@needs_compiled
@given(configs, st.integers(-1, 6))
def test_explore_parity(args, steps):
    cfg = _cfg(*args)
    lat = cfg.lattice
    nbr, nbe = lat.neighbors
    seeds = np.array([lat.origin], dtype=np.int64)
    allowed = lat.sub_box_mask(max(1, (lat.radius or 1) - 1)).astype(np.uint8)
    _same(
        py.explore_layers(nbr, nbe, cfg.open_bits, seeds, allowed, steps),
        cy.explore_layers(nbr, nbe, cfg.open_bits, seeds, allowed, steps),
    )


@needs_compiled
@given(configs)
def test_labels_parity(args):
    cfg = _cfg(*args)
    nbr, nbe = cfg.lattice.neighbors
    _same(py.label_components(nbr, nbe, cfg.open_bits), cy.label_components(nbr, nbe, cfg.open_bits))


@needs_compiled
@given(configs, st.integers(1, 30))
def test_greedy_parity(args, cap):
    cfg = _cfg(*args)
    lat = cfg.lattice
    nbr, nbe = lat.neighbors
    _same(
        py.greedy_grow(nbr, nbe, cfg.open_bits, lat.origin, cap),
        cy.greedy_grow(nbr, nbe, cfg.open_bits, lat.origin, cap),
    )


@needs_compiled
@given(configs, st.integers(1, 20), st.integers(0, 2**63))
def test_anneal_parity(args, cap, seed):
    cfg = _cfg(*args)
    lat = cfg.lattice
    nbr, nbe = lat.neighbors
    init = np.array([lat.origin], dtype=np.int64)
    a = py.anneal(nbr, nbe, cfg.open_bits, lat.origin, cap, init, 400, 2.0, 0.05, seed)
    b = cy.anneal(nbr, nbe, cfg.open_bits, lat.origin, cap, init, 400, 2.0, 0.05, seed)
    _same(a, b)


@needs_compiled
@pytest.mark.parametrize("p", [0.0, 0.4, 0.6, 1.0])
def test_flow_parity(p, monkeypatch):
    from percolab.wulff import flow

    lat, src, snk = strip_lattice(2, 8, 8)
    for s in range(5):
        cfg = sample_config(lat, p, s)
        values = []
        for backend in (py, cy):
            monkeypatch.setattr(flow, "kernels", backend)
            res = flow.max_flow(cfg, src, snk)
            values.append((res.value, res.cut_edges.tolist(), res.source_side.tolist()))
        assert values[0] == values[1]
