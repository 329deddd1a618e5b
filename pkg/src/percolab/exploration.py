"""Layer-by-layer exploration of the cluster of the origin and growth certificates.

Step ``l -> l+1`` adds every vertex joined to ``C_l`` by an open edge; with a
constraint radius ``n`` only vertices of ``[-n, n]^d`` may be added.  The
history records ``|C_l|``, ``|A_l|`` and ``|∂°C_l|`` for each step.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .lattice import BondConfig

__all__ = [
    "ExplorationHistory",
    "GrowthCertificate",
    "StepCheck",
    "RangeCheck",
    "explore_step",
    "explore_until_halt",
    "growth_certificate",
    "history_violations",
]


def _as_ranks(config: BondConfig, vertices) -> np.ndarray:
    lat = config.lattice
    arr = np.asarray(sorted(vertices) if isinstance(vertices, (set, frozenset)) else vertices)
    if arr.dtype == bool:
        return np.flatnonzero(arr).astype(np.int64)
    if arr.ndim == 2:
        return np.asarray([lat.rank(row) for row in arr], dtype=np.int64)
    return np.asarray([lat.vertex(int(v)) for v in arr.ravel()], dtype=np.int64)


def _allowed_mask(config: BondConfig, box_radius: int | None) -> np.ndarray:
    lat = config.lattice
    if box_radius is None:
        return np.ones(lat.vertex_count, dtype=np.uint8)
    return lat.sub_box_mask(box_radius).astype(np.uint8)


def explore_step(
    config: BondConfig, C: Iterable[int], box_radius: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """One exploration step from ``C``; returns ``(A_next, C_next)`` as sorted rank arrays."""
    ranks = np.unique(_as_ranks(config, C))
    if ranks.size == 0:
        raise ValueError("exploration needs a nonempty starting set")
    allowed = _allowed_mask(config, box_radius)
    if not allowed[ranks].all():
        raise ValueError(f"starting set leaves the constraint box of radius {box_radius}")
    nbr, nbe = config.lattice.neighbors
    order, layer_end, *_ = kernels.explore_layers(
        nbr, nbe, config.open_bits, ranks, allowed, 1
    )
    new = order[ranks.size:]
    return np.sort(new), np.sort(order)


@dataclass(frozen=True)
class ExplorationHistory:
    """Sizes along one exploration run.

    ``c_sizes[l] = |C_l|``, ``a_sizes[l] = |A_l|`` (``a_sizes[0] = 0``),
    ``boundary[l] = |∂°C_l|`` and ``boundary_allowed[l]`` counts only the open
    boundary edges whose outer endpoint may still be explored.
    """

    d: int
    c_sizes: np.ndarray
    a_sizes: np.ndarray
    boundary: np.ndarray
    boundary_allowed: np.ndarray
    halted: bool
    constrained_box_radius: int | None = None
    order: np.ndarray | None = field(default=None, repr=False)

    @property
    def length(self) -> int:
        """Index of the last recorded set ``C_L``."""
        return int(self.c_sizes.size - 1)

    @property
    def max_steps_exhausted(self) -> bool:
        return not self.halted

    @property
    def steps(self) -> list[tuple[int, int, int]]:
        return [
            (int(c), int(a), int(b))
            for c, a, b in zip(self.c_sizes, self.a_sizes, self.boundary)
        ]

    def vertex_set(self, l: int) -> np.ndarray:
        if self.order is None:
            raise ValueError("vertex sets were not retained; rerun with retain_sets=True")
        l = min(int(l), self.length)
        return np.sort(self.order[: self.c_sizes[l]])

    def shell(self, l: int) -> np.ndarray:
        if self.order is None:
            raise ValueError("vertex sets were not retained; rerun with retain_sets=True")
        if l == 0 or l > self.length:
            return np.empty(0, dtype=np.int64)
        return np.sort(self.order[self.c_sizes[l - 1] : self.c_sizes[l]])

    def terminal_set(self) -> np.ndarray:
        return self.vertex_set(self.length)

    def size_at(self, l: int) -> int:
        """|C_l|, extended past a halt by the terminal size."""
        if l <= self.length:
            return int(self.c_sizes[l])
        if not self.halted:
            raise IndexError(f"step {l} was not reached")
        return int(self.c_sizes[-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l", "C_size", "A_size", "open_boundary"])
        for l, (c, a, b) in enumerate(self.steps):
            w.writerow([l, c, a, b])
        return buf.getvalue()


def explore_until_halt(
    config: BondConfig,
    origin: int | Sequence[int] | None = None,
    box_radius: int | None = None,
    max_steps: int | None = None,
    retain_sets: bool = False,
    start: Iterable[int] | None = None,
    allowed: np.ndarray | None = None,
) -> ExplorationHistory:
    """Iterate :func:`explore_step` until no vertex is added or ``max_steps`` is reached.

    ``start`` replaces the single-vertex ``C_0 = {origin}`` (the constrained
    exploration is resumed from an earlier set this way).  ``allowed`` is an
    optional boolean vertex mask intersected with the constraint box.
    """
    lat = config.lattice
    if start is None:
        if origin is None:
            origin = lat.origin
        seeds = np.array([lat.vertex(origin)], dtype=np.int64)
    else:
        seeds = np.unique(_as_ranks(config, start))
        if seeds.size == 0:
            raise ValueError("exploration needs a nonempty starting set")
    mask = _allowed_mask(config, box_radius)
    if allowed is not None:
        allowed = np.asarray(allowed, dtype=bool)
        if allowed.shape != (lat.vertex_count,):
            raise ValueError("allowed mask must have one entry per vertex")
        mask &= allowed.astype(np.uint8)
    if not mask[seeds].all():
        raise ValueError("starting set leaves the allowed region")
    if max_steps is None:
        max_steps = lat.vertex_count
    nbr, nbe = lat.neighbors
    order, layer_end, b_allowed, b_total, halted = kernels.explore_layers(
        nbr, nbe, config.open_bits, seeds, mask, int(max_steps)
    )
    a_sizes = np.diff(layer_end, prepend=0)
    a_sizes[0] = 0
    return ExplorationHistory(
        d=lat.d,
        c_sizes=layer_end,
        a_sizes=a_sizes,
        boundary=b_total,
        boundary_allowed=b_allowed,
        halted=bool(halted),
        constrained_box_radius=box_radius,
        order=order if retain_sets else None,
    )


def history_violations(history: ExplorationHistory) -> list[str]:
    """Deterministic step inequalities that fail along ``history`` (empty when all hold).

    Checks ``|C_{l+1}| = |C_l| + |A_{l+1}|``, strict growth while ``A_{l+1}`` is
    nonempty, ``|∂°C_l| <= 2d |A_{l+1}|`` and ``|C_{l+1}| >= |C_l| + |∂°C_l|/(2d)``
    on the explorable part of the boundary.
    """
    out = []
    c, a, b = history.c_sizes, history.a_sizes, history.boundary_allowed
    two_d = 2 * history.d
    for l in range(history.length):
        if c[l + 1] != c[l] + a[l + 1]:
            out.append(f"step {l}: |C_l+1| != |C_l| + |A_l+1|")
        if a[l + 1] > 0 and c[l + 1] <= c[l]:
            out.append(f"step {l}: no strict growth")
        if b[l] > two_d * a[l + 1]:
            out.append(f"step {l}: |∂°C_l| = {b[l]} > 2d|A_l+1| = {two_d * a[l + 1]}")
        if two_d * c[l + 1] < two_d * c[l] + b[l]:
            out.append(f"step {l}: growth recursion fails")
    if history.halted and b[history.length] != 0:
        out.append("halted with explorable boundary edges left")
    return out


@dataclass(frozen=True)
class StepCheck:
    l: int
    n: int
    scale: int
    size: int
    boundary: int
    in_regime: bool
    ratio_held: bool
    per_step_held: bool


@dataclass(frozen=True)
class RangeCheck:
    n: int
    index: int
    size: int
    holds: bool
    hypothesis_held: bool

    @property
    def implication_ok(self) -> bool:
        return self.holds or not self.hypothesis_held


@dataclass(frozen=True)
class GrowthCertificate:
    c: Fraction
    n0: int
    alpha: Fraction
    k: int
    d: int
    verified_range: list[RangeCheck]
    step_checks: list[StepCheck]
    truncated: bool
    cluster_exhausted: bool

    @property
    def passed(self) -> bool:
        """Every verifiable n satisfies |C_{(n-n0)k}| >= alpha n^d."""
        return all(r.holds for r in self.verified_range)

    @property
    def implication_ok(self) -> bool:
        """No n where the ratio hypothesis held on all earlier blocks but growth failed."""
        return all(r.implication_ok for r in self.verified_range)

    @property
    def flags(self) -> list[str]:
        out = []
        if self.truncated:
            out.append("history truncated")
        if self.cluster_exhausted:
            out.append("cluster exhausted")
        return out


def block_length(c: Fraction | float, d: int) -> int:
    """Smallest integer strictly greater than ``2^(d+1) d / c``."""
    return math.floor(Fraction(2 ** (d + 1) * d) / Fraction(c)) + 1


def growth_certificate(
    history: ExplorationHistory, c: float | Fraction, n0: int, n_max: int | None = None
) -> GrowthCertificate:
    """Replay the block induction ``|C_{(n-n0)k}| >= n^d / n0^d`` along a run.

    Step ``l`` lies in the block ``n = n0 + l // k`` that grows towards the
    scale ``m = n + 1``.  While ``|C_l| < alpha m^d`` the set is admissible at
    scale ``m``; the step records whether the profile bound
    ``m |∂°C_l| > c |C_l|`` held there and whether ``|∂°C_l| >= alpha c n^(d-1)``
    followed.  ``verified_range`` covers
    ``n > n0`` up to the last block the history reaches; a halted run is
    continued by its terminal set.
    """
    c = Fraction(c)
    if c <= 0:
        raise ValueError("c must be positive")
    n0 = int(n0)
    if n0 < 1:
        raise ValueError("n0 must be at least 1")
    d = history.d
    k = block_length(c, d)
    alpha = Fraction(1, n0**d)
    L = history.length
    reach = n0 + L // k
    if n_max is None:
        n_max = max(reach, n0 + 1) if history.halted else reach
    # an unfinished run could always be extended further
    truncated = not history.halted
    if not history.halted:
        n_max = min(n_max, reach)

    steps = []
    # past a halt the terminal set (and its boundary) stays fixed
    last_l = (n_max - n0) * k if history.halted else min(L, (n_max - n0) * k)
    for l in range(last_l + 1):
        n = n0 + l // k
        m = n + 1
        size = history.size_at(l)
        bnd = int(history.boundary[min(l, L)])
        steps.append(
            StepCheck(
                l=l,
                n=n,
                scale=m,
                size=size,
                boundary=bnd,
                in_regime=size < alpha * m**d,
                ratio_held=m * bnd > c * size,
                per_step_held=bnd >= alpha * c * n ** (d - 1),
            )
        )

    ranges = []
    hyp = True
    for n in range(n0 + 1, n_max + 1):
        for s in steps[(n - 1 - n0) * k : (n - n0) * k]:
            if s.in_regime and not s.ratio_held:
                hyp = False
        idx = (n - n0) * k
        size = history.size_at(idx)
        ranges.append(
            RangeCheck(
                n=n,
                index=idx,
                size=size,
                holds=size * n0**d >= n**d,
                hypothesis_held=hyp,
            )
        )
    exhausted = history.halted and any(not r.holds for r in ranges)
    return GrowthCertificate(
        c=c,
        n0=n0,
        alpha=alpha,
        k=k,
        d=d,
        verified_range=ranges,
        step_checks=steps,
        truncated=truncated,
        cluster_exhausted=exhausted,
    )
