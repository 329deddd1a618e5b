"""Finite boxes of Z^d, canonical edge indexing and seeded bond sampling.

Vertices of a box are ranked lexicographically over their coordinates (first
coordinate most significant).  Edges are the pairs ``(rank, axis)`` joining a
vertex to its neighbour in the positive direction of ``axis``; edge ids are
assigned in increasing ``(rank, axis)`` order over the pairs that stay inside
the box.

Per-edge uniforms come from a SplitMix64 hash of the master seed, the absolute
coordinates of the edge's tail vertex and its axis.  Because the key does not
depend on the box, two boxes sampled with the same seed agree on every edge
they share, and the sample does not depend on the order edges are visited.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "BoxLattice",
    "BondConfig",
    "LatticeSizeError",
    "ConfigStateError",
    "ConfigFormatError",
    "build_box",
    "build_grid",
    "sample_config",
    "monotone_couple",
    "config_from_open_edges",
    "edge_uniforms",
    "derive_seed",
    "dumps_config",
    "loads_config",
    "save_config",
    "load_config",
]

MASK64 = (1 << 64) - 1
MAX_VERTICES = 1 << 28

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


class LatticeSizeError(ValueError):
    """The requested box does not fit in addressable memory."""


class ConfigStateError(RuntimeError):
    """A configuration lacks state required by the operation."""


class ConfigFormatError(ValueError):
    """A serialized configuration failed validation."""


def _splitmix(z: np.ndarray) -> np.ndarray:
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _splitmix_int(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def derive_seed(master_seed: int, *keys: int) -> int:
    """Stable 64-bit child seed of ``master_seed`` for the integer path ``keys``."""
    h = _splitmix_int(_check_seed(master_seed) ^ 0x5EED5EED5EED5EED)
    for k in keys:
        h = _splitmix_int(h ^ (int(k) & MASK64))
    return h


class BoxLattice:
    """Axis-aligned box ``prod_i [lows[i], highs[i]]`` of Z^d with nearest-neighbour edges.

    ``build_box(d, R)`` gives the centred cube ``[-R, R]^d``; ``build_grid`` gives
    arbitrary rectangular boxes (used for flow strips).
    """

    def __init__(self, lows: Sequence[int], highs: Sequence[int]):
        lows = tuple(int(v) for v in lows)
        highs = tuple(int(v) for v in highs)
        if len(lows) != len(highs) or not lows:
            raise ValueError("lows and highs must be non-empty and of equal length")
        if any(h < l for l, h in zip(lows, highs)):
            raise ValueError("empty box")
        self.d = len(lows)
        self.lows = lows
        self.highs = highs
        self.shape = tuple(h - l + 1 for l, h in zip(lows, highs))
        count = 1
        for s in self.shape:
            count *= s
        if count * 2 * self.d > MAX_VERTICES * 8 or count > MAX_VERTICES:
            raise LatticeSizeError(f"box with {count} vertices is too large")
        self.vertex_count = count
        strides = [1] * self.d
        for i in range(self.d - 2, -1, -1):
            strides[i] = strides[i + 1] * self.shape[i + 1]
        self.strides = tuple(strides)
        self.edge_count = sum(
            (self.shape[a] - 1) * (count // self.shape[a]) for a in range(self.d)
        )

    @property
    def radius(self) -> int | None:
        """Radius R when the box is the centred cube ``[-R, R]^d``, else None."""
        r = self.highs[0]
        if all(h == r for h in self.highs) and all(l == -r for l in self.lows):
            return r
        return None

    def __repr__(self) -> str:
        r = self.radius
        if r is not None:
            return f"BoxLattice(d={self.d}, R={r})"
        return f"BoxLattice(lows={self.lows}, highs={self.highs})"

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BoxLattice)
            and self.lows == other.lows
            and self.highs == other.highs
        )

    def __hash__(self) -> int:
        return hash((self.lows, self.highs))

    # vertex ranks ---------------------------------------------------------

    def contains(self, coords: Sequence[int]) -> bool:
        return len(coords) == self.d and all(
            l <= int(x) <= h for x, l, h in zip(coords, self.lows, self.highs)
        )

    def rank(self, coords: Sequence[int]) -> int:
        if not self.contains(coords):
            raise ValueError(f"vertex {tuple(coords)} lies outside {self!r}")
        return sum((int(x) - l) * s for x, l, s in zip(coords, self.lows, self.strides))

    def coords(self, rank: int) -> tuple[int, ...]:
        rank = int(rank)
        if not 0 <= rank < self.vertex_count:
            raise ValueError(f"vertex rank {rank} out of range")
        out = []
        for l, s, n in zip(self.lows, self.strides, self.shape):
            out.append((rank // s) % n + l)
        return tuple(out)

    def vertex(self, v: int | Sequence[int]) -> int:
        """Normalize a vertex given as a rank or a coordinate tuple to its rank."""
        if isinstance(v, (int, np.integer)):
            if not 0 <= int(v) < self.vertex_count:
                raise ValueError(f"vertex rank {v} out of range")
            return int(v)
        return self.rank(v)

    @property
    def origin(self) -> int:
        return self.rank((0,) * self.d)

    @cached_property
    def vertex_coords(self) -> np.ndarray:
        """(V, d) int64 array of coordinates in rank order."""
        ranks = np.arange(self.vertex_count, dtype=np.int64)
        out = np.empty((self.vertex_count, self.d), dtype=np.int64)
        for i in range(self.d):
            out[:, i] = (ranks // self.strides[i]) % self.shape[i] + self.lows[i]
        out.flags.writeable = False
        return out

    def coords_of(self, ranks: Iterable[int]) -> np.ndarray:
        return self.vertex_coords[np.asarray(list(ranks) if not isinstance(ranks, np.ndarray) else ranks, dtype=np.int64)]

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        """Vertices with some coordinate on a face of the box."""
        x = self.vertex_coords
        m = np.any((x == np.asarray(self.lows)) | (x == np.asarray(self.highs)), axis=1)
        m.flags.writeable = False
        return m

    def sub_box_mask(self, radius: int) -> np.ndarray:
        """Vertices inside the centred cube ``[-radius, radius]^d``."""
        m = np.all(np.abs(self.vertex_coords) <= radius, axis=1)
        return m

    # edges ------------------------------------------------------------------

    @cached_property
    def _edge_of(self) -> np.ndarray:
        x = self.vertex_coords
        valid = x < np.asarray(self.highs)
        ids = np.full(valid.shape, -1, dtype=np.int64)
        flat = valid.ravel()
        ids.ravel()[flat] = np.arange(int(flat.sum()), dtype=np.int64)
        ids.flags.writeable = False
        return ids

    @cached_property
    def edge_tail(self) -> np.ndarray:
        r, _ = np.nonzero(self._edge_of >= 0)
        r = r.astype(np.int64)
        r.flags.writeable = False
        return r

    @cached_property
    def edge_axis(self) -> np.ndarray:
        _, a = np.nonzero(self._edge_of >= 0)
        a = a.astype(np.int64)
        a.flags.writeable = False
        return a

    @cached_property
    def edge_head(self) -> np.ndarray:
        h = self.edge_tail + np.asarray(self.strides, dtype=np.int64)[self.edge_axis]
        h.flags.writeable = False
        return h

    def encode_edge(self, rank: int, axis: int) -> int:
        if not 0 <= axis < self.d:
            raise ValueError(f"axis {axis} out of range")
        e = int(self._edge_of[self.vertex(rank), axis])
        if e < 0:
            raise ValueError(f"edge ({rank}, +{axis}) leaves the box")
        return e

    def decode_edge(self, e: int) -> tuple[int, int]:
        e = int(e)
        if not 0 <= e < self.edge_count:
            raise ValueError(f"edge id {e} out of range")
        return int(self.edge_tail[e]), int(self.edge_axis[e])

    def edge_between(self, u: int | Sequence[int], v: int | Sequence[int]) -> int:
        """Edge id joining two neighbouring vertices (either order)."""
        ru, rv = self.vertex(u), self.vertex(v)
        if ru > rv:
            ru, rv = rv, ru
        diff = rv - ru
        for a, s in enumerate(self.strides):
            if diff == s and self._edge_of[ru, a] >= 0:
                return int(self._edge_of[ru, a])
        raise ValueError(f"vertices {u} and {v} are not adjacent")

    @cached_property
    def neighbors(self) -> tuple[np.ndarray, np.ndarray]:
        """``(nbr, nbr_edge)``, both (V, 2d) int64; slot ``2a`` is +e_a, ``2a+1`` is -e_a, -1 if absent."""
        V, d = self.vertex_count, self.d
        nbr = np.full((V, 2 * d), -1, dtype=np.int64)
        nbe = np.full((V, 2 * d), -1, dtype=np.int64)
        ranks = np.arange(V, dtype=np.int64)
        eo = self._edge_of
        for a in range(d):
            s = self.strides[a]
            plus = eo[:, a] >= 0
            nbr[plus, 2 * a] = ranks[plus] + s
            nbe[plus, 2 * a] = eo[plus, a]
            minus = self.vertex_coords[:, a] > self.lows[a]
            nbr[minus, 2 * a + 1] = ranks[minus] - s
            nbe[minus, 2 * a + 1] = eo[ranks[minus] - s, a]
        nbr.flags.writeable = False
        nbe.flags.writeable = False
        return nbr, nbe


def build_box(d: int, R: int) -> BoxLattice:
    """The centred cube ``[-R, R]^d``."""
    if int(d) < 2:
        raise ValueError("dimension must be at least 2")
    if int(R) < 1:
        raise ValueError("radius must be at least 1")
    return BoxLattice((-int(R),) * int(d), (int(R),) * int(d))


def build_grid(shape: Sequence[int]) -> BoxLattice:
    """The box ``prod_i [0, shape[i]-1]``."""
    return BoxLattice((0,) * len(shape), tuple(int(s) - 1 for s in shape))


def edge_uniforms(lattice: BoxLattice, seed: int) -> np.ndarray:
    """Per-edge uniforms in [0, 1) keyed on (seed, tail coordinates, axis)."""
    seed = _check_seed(seed)
    h = _splitmix(np.full(lattice.edge_count, seed, dtype=np.uint64))
    x = lattice.vertex_coords[lattice.edge_tail]
    for i in range(lattice.d):
        xi = x[:, i]
        zig = ((xi << 1) ^ (xi >> 63)).astype(np.uint64)
        h = _splitmix(h ^ zig)
    h = _splitmix(h ^ lattice.edge_axis.astype(np.uint64))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


@dataclass(frozen=True, eq=False)
class BondConfig:
    """An immutable bond configuration on a box lattice."""

    lattice: BoxLattice
    p: float
    open_bits: np.ndarray
    master_seed: int
    uniforms: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.open_bits.shape != (self.lattice.edge_count,):
            raise ValueError("open_bits length must equal the lattice edge count")
        if self.open_bits.dtype != np.uint8:
            object.__setattr__(self, "open_bits", self.open_bits.astype(np.uint8))
        self.open_bits.flags.writeable = False
        if self.uniforms is not None:
            self.uniforms.flags.writeable = False

    @property
    def open_count(self) -> int:
        return int(self.open_bits.sum())

    def is_open(self, e: int) -> bool:
        return bool(self.open_bits[e])

    def open_edges(self) -> np.ndarray:
        return np.flatnonzero(self.open_bits)

    def fingerprint(self) -> tuple:
        return (self.lattice.lows, self.lattice.highs, self.p, self.master_seed)


def _check_p(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    return p


def sample_config(
    lattice: BoxLattice, p: float, seed: int, retain_uniforms: bool = False
) -> BondConfig:
    """I.i.d. Bernoulli(p) bonds, a deterministic function of ``(lattice, p, seed)``."""
    p = _check_p(p)
    u = edge_uniforms(lattice, seed)
    bits = (u < p).astype(np.uint8)
    return BondConfig(lattice, p, bits, int(seed), u if retain_uniforms else None)


def monotone_couple(config: BondConfig, p: float) -> BondConfig:
    """Rethreshold the retained uniforms at ``p``; open sets grow with ``p``."""
    if config.uniforms is None:
        raise ConfigStateError("monotone coupling needs a config sampled with retain_uniforms=True")
    p = _check_p(p)
    bits = (config.uniforms < p).astype(np.uint8)
    return BondConfig(config.lattice, p, bits, config.master_seed, config.uniforms)


def config_from_open_edges(
    lattice: BoxLattice, edges: Iterable[tuple], p: float = float("nan"), seed: int = 0
) -> BondConfig:
    """Hand-built configuration whose open edges are given as vertex pairs."""
    bits = np.zeros(lattice.edge_count, dtype=np.uint8)
    for u, v in edges:
        bits[lattice.edge_between(u, v)] = 1
    return BondConfig(lattice, p, bits, seed)


# binary dump ----------------------------------------------------------------

MAGIC = b"BPCF"
VERSION = 1
_HEADER = struct.Struct("<4sHHIdQ")


def dumps_config(config: BondConfig) -> bytes:
    lat = config.lattice
    R = lat.radius
    if R is None:
        raise ValueError("binary dumps are defined for centred cubes only")
    header = _HEADER.pack(MAGIC, VERSION, lat.d, R, config.p, config.master_seed)
    return header + np.packbits(config.open_bits, bitorder="little").tobytes()


def loads_config(blob: bytes) -> BondConfig:
    if len(blob) < _HEADER.size:
        raise ConfigFormatError("truncated header")
    magic, version, d, R, p, seed = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ConfigFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ConfigFormatError(f"unsupported version {version}")
    if d < 2 or R < 1:
        raise ConfigFormatError(f"invalid lattice d={d} R={R}")
    if not (0.0 <= p <= 1.0 or p != p):
        raise ConfigFormatError(f"invalid probability {p}")
    lat = build_box(d, R)
    payload = np.frombuffer(blob, dtype=np.uint8, offset=_HEADER.size)
    nbytes = (lat.edge_count + 7) // 8
    if payload.size != nbytes:
        raise ConfigFormatError(
            f"payload has {payload.size} bytes, expected {nbytes} for {lat.edge_count} edges"
        )
    bits = np.unpackbits(payload, bitorder="little")
    if bits[lat.edge_count:].any():
        raise ConfigFormatError("nonzero padding bits")
    return BondConfig(lat, p, bits[: lat.edge_count].copy(), seed)


def save_config(config: BondConfig, path: str | Path) -> None:
    Path(path).write_bytes(dumps_config(config))


def load_config(path: str | Path) -> BondConfig:
    return loads_config(Path(path).read_bytes())
