"""Max-flow through open edges, flow-constant estimates, percolation probability and the vanishing scan."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .. import kernels
from ..cluster import open_cluster
from ..lattice import BondConfig, build_box, build_grid, derive_seed, sample_config
from .geometry import NormTable, phi_of_p

__all__ = [
    "CertificateError",
    "FlowResult",
    "FlowEstimate",
    "ScanRow",
    "max_flow",
    "strip_lattice",
    "estimate_flow_constant",
    "theta_estimate",
    "vanishing_scan",
    "scan_row",
    "scan_to_csv",
]

# stream tags keep derived seeds of different estimators apart
FLOW_STREAM = 0xF10
THETA_STREAM = 0x7E7A


class CertificateError(RuntimeError):
    """Flow value and cut capacity disagree."""


@dataclass(frozen=True)
class FlowResult:
    value: int
    cut_edges: np.ndarray = field(repr=False)
    source_side: np.ndarray = field(repr=False)

    @property
    def cut_capacity(self) -> int:
        return int(self.cut_edges.size)


def _as_rank_array(config: BondConfig, vs) -> np.ndarray:
    lat = config.lattice
    arr = np.asarray(vs)
    if arr.dtype == bool:
        return np.flatnonzero(arr)
    if arr.ndim == 2:
        return np.asarray([lat.rank(r) for r in arr], dtype=np.int64)
    return np.asarray([lat.vertex(int(v)) for v in arr], dtype=np.int64)


def max_flow(config: BondConfig, source, sink) -> FlowResult:
    """Maximum flow from ``source`` to ``sink`` with unit capacity on open edges.

    The min cut read off the final residual graph is checked against the flow
    value on every call.
    """
    lat = config.lattice
    src = np.unique(_as_rank_array(config, source))
    snk = np.unique(_as_rank_array(config, sink))
    if src.size == 0 or snk.size == 0:
        raise ValueError("source and sink must be nonempty")
    if np.intersect1d(src, snk).size:
        raise ValueError("source and sink must be disjoint")
    V = lat.vertex_count
    S, T = V, V + 1
    inf = lat.edge_count + 1
    open_e = np.flatnonzero(config.open_bits)
    u, w = lat.edge_tail[open_e], lat.edge_head[open_e]
    m = open_e.size
    tails = np.empty(2 * m + 2 * src.size + 2 * snk.size, dtype=np.int64)
    heads = np.empty_like(tails)
    cap = np.empty_like(tails)
    tails[0 : 2 * m : 2], heads[0 : 2 * m : 2] = u, w
    tails[1 : 2 * m : 2], heads[1 : 2 * m : 2] = w, u
    cap[: 2 * m] = 1
    o = 2 * m
    tails[o : o + 2 * src.size : 2], heads[o : o + 2 * src.size : 2] = S, src
    tails[o + 1 : o + 2 * src.size : 2], heads[o + 1 : o + 2 * src.size : 2] = src, S
    cap[o : o + 2 * src.size : 2], cap[o + 1 : o + 2 * src.size : 2] = inf, 0
    o += 2 * src.size
    tails[o::2], heads[o::2] = snk, T
    tails[o + 1 :: 2], heads[o + 1 :: 2] = T, snk
    cap[o::2], cap[o + 1 :: 2] = inf, 0
    adj = np.argsort(tails, kind="stable").astype(np.int64)
    first = np.searchsorted(tails[adj], np.arange(V + 3)).astype(np.int64)
    value = int(kernels.dinic(first, adj, heads, cap, S, T))
    reach = kernels.residual_reach(first, adj, heads, cap, S)[:V].astype(bool)
    if not reach[src].all() or reach[snk].any():
        raise CertificateError("residual reachability separates source and sink incorrectly")
    cut = open_e[reach[u] != reach[w]]
    if cut.size != value:
        raise CertificateError(f"flow {value} != cut capacity {cut.size}")
    return FlowResult(value=value, cut_edges=cut, source_side=reach)


def strip_lattice(d: int, K: int, L: int, axis: int = 0):
    """Grid with ``L`` vertices along ``axis`` and ``K`` across; returns (lattice, source, sink)."""
    shape = [K] * d
    shape[axis] = L
    lat = build_grid(shape)
    x = lat.vertex_coords[:, axis]
    return lat, np.flatnonzero(x == 0), np.flatnonzero(x == L - 1)


@dataclass(frozen=True)
class FlowEstimate:
    p: float
    direction: int
    box_dims: tuple[int, int]
    trials: int
    mean_flow_per_area: float
    stderr: float
    flows: tuple[int, ...] = field(default=(), repr=False)


def _mean_stderr(x: np.ndarray) -> tuple[float, float]:
    if x.size == 0:
        return float("nan"), float("nan")
    mean = float(x.mean())
    if x.size < 2:
        return mean, 0.0
    return mean, float(x.std(ddof=1) / math.sqrt(x.size))


def estimate_flow_constant(
    p: float,
    direction: int = 0,
    K: int = 16,
    L: int = 16,
    trials: int = 10,
    seed: int = 0,
    d: int = 2,
) -> FlowEstimate:
    """Mean max-flow between the two faces orthogonal to ``direction``, per cross-section vertex.

    Trial ``t`` samples with ``derive_seed(seed, FLOW_STREAM, t)``; because bond
    uniforms depend only on the seed and the edge, trials at different ``p``
    share uniforms and their flows are monotone in ``p``.
    """
    if K < 2 or L < 2:
        raise ValueError("K and L must be at least 2")
    if not 0 <= direction < d:
        raise ValueError("direction must be an axis index")
    lat, src, snk = strip_lattice(d, K, L, direction)
    flows = []
    for t in range(int(trials)):
        cfg = sample_config(lat, p, derive_seed(seed, FLOW_STREAM, t))
        flows.append(max_flow(cfg, src, snk).value)
    per_area = np.asarray(flows, dtype=float) / K ** (d - 1)
    mean, se = _mean_stderr(per_area)
    return FlowEstimate(float(p), int(direction), (int(L), int(K)), int(trials), mean, se, tuple(flows))


def theta_estimate(p: float, n: int, trials: int, seed: int = 0, d: int = 2) -> float:
    """Fraction of trials whose origin cluster reaches the boundary of ``[-n, n]^d``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if trials < 1:
        raise ValueError("trials must be positive")
    lat = build_box(d, n)
    hits = 0
    for t in range(int(trials)):
        cfg = sample_config(lat, p, derive_seed(seed, THETA_STREAM, t))
        hits += open_cluster(cfg, lat.origin).touches_box_boundary
    return hits / trials


@dataclass(frozen=True)
class ScanRow:
    p: float
    beta_hat: float
    beta_stderr: float
    theta_hat: float
    phi_hat: float
    flag: str = ""


def vanishing_scan(
    p_list: Sequence[float],
    K: int,
    L: int,
    trials: int,
    theta_estimates: Mapping[float, float] | Sequence[float] | None = None,
    seed: int = 0,
    d: int = 2,
    theta_n: int = 32,
    theta_trials: int = 200,
) -> list[ScanRow]:
    """Per ``p``: axis flow constant, percolation probability and the crystal's surface tension.

    The axis estimate is extended to all directions by lattice symmetry and the
    largest convex homogeneous extension, which makes the norm ``beta * l1``.
    """
    if theta_estimates is not None and not isinstance(theta_estimates, Mapping):
        theta_estimates = dict(zip(p_list, theta_estimates))
    rows = []
    for p in p_list:
        est = estimate_flow_constant(p, 0, K, L, trials, seed, d)
        if theta_estimates is not None:
            theta = float(theta_estimates[p])
        else:
            theta = theta_estimate(p, theta_n, theta_trials, seed, d)
        rows.append(scan_row(p, est.mean_flow_per_area, est.stderr, theta, d))
    return rows


def scan_row(p: float, beta: float, stderr: float, theta: float, d: int = 2) -> ScanRow:
    """Surface tension of the crystal for an axis flow estimate ``beta`` and percolation probability ``theta``."""
    if theta <= 0.0:
        return ScanRow(p, beta, stderr, theta, float("nan"), "theta=0: crystal undefined")
    if beta <= 0.0:
        return ScanRow(p, beta, stderr, theta, 0.0, "beta=0")
    phi = phi_of_p(NormTable.axis_symmetric(d, beta), theta).value
    return ScanRow(p, beta, stderr, theta, phi)


def scan_to_csv(rows: Iterable[ScanRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "beta_hat", "beta_stderr", "theta_hat", "phi_hat"])
    for r in rows:
        w.writerow([repr(r.p), repr(r.beta_hat), repr(r.beta_stderr), repr(r.theta_hat), repr(r.phi_hat)])
    return buf.getvalue()
