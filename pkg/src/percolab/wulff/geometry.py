"""Norm tables, convex polytopes and the Wulff construction in dimensions 2 and 3."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection, cKDTree

__all__ = [
    "GeometryError",
    "NormTable",
    "Polytope",
    "quasi_uniform_directions",
    "wulff_set",
    "volume",
    "surface_tension",
    "dilate_to_volume",
    "PhiResult",
    "phi_of_p",
    "IsoperimetricReport",
    "isoperimetric_check",
    "candidate_battery",
    "load_norm_table",
]

UNIT_TOL = 1e-12


class GeometryError(ValueError):
    """Degenerate or unbounded geometric input."""


def quasi_uniform_directions(d: int, count: int) -> np.ndarray:
    """Equally spaced angles in d=2, a Fibonacci lattice on the sphere in d=3."""
    count = int(count)
    if d == 2:
        t = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(t), np.sin(t)])
    if d == 3:
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = np.pi * (3.0 - math.sqrt(5.0)) * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    raise GeometryError(f"the geometry kernel supports d in {{2, 3}}, got {d}")


def _dedupe_rows(x: np.ndarray, tol: float) -> np.ndarray:
    """Rows in lexicographic order, dropping any row within ``tol`` (max-norm) of an earlier one."""
    if x.shape[0] == 0:
        return x
    x = x[np.lexsort(x.T[::-1])]
    pairs = cKDTree(x).query_pairs(tol, p=np.inf, output_type="ndarray")
    drop = np.zeros(x.shape[0], dtype=bool)
    drop[pairs.max(axis=1)] = True
    return x[~drop]


class NormTable:
    """A norm known on finitely many unit directions.

    Off the sampled directions the norm is the largest convex, positively
    homogeneous function not exceeding the samples: the support function of
    ``{x : x.v <= value(v) for every sample v}``.
    """

    def __init__(
        self,
        directions: np.ndarray,
        values: Sequence[float],
        symmetric: bool = True,
    ):
        dirs = np.atleast_2d(np.asarray(directions, dtype=float))
        vals = np.asarray(values, dtype=float).ravel()
        if dirs.shape[0] != vals.size:
            raise ValueError("one value per direction")
        lengths = np.linalg.norm(dirs, axis=1)
        if np.any(lengths == 0):
            raise ValueError("zero direction")
        dirs = dirs / lengths[:, None]
        if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
            raise ValueError("norm values must be finite and strictly positive")
        self.d = dirs.shape[1]
        self.symmetric = bool(symmetric)
        if self.symmetric:
            dirs, vals = self._symmetrize(dirs, vals)
        self.directions = dirs
        self.values = vals
        self.directions.flags.writeable = False
        self.values.flags.writeable = False
        self._wulff: Polytope | None = None

    @staticmethod
    def _symmetrize(dirs: np.ndarray, vals: np.ndarray):
        out_d = list(dirs)
        out_v = list(vals)
        for v, t in zip(dirs, vals):
            match = np.flatnonzero(np.max(np.abs(dirs + v), axis=1) <= 1e-12)
            if match.size:
                if not math.isclose(vals[match[0]], t, rel_tol=1e-9):
                    raise ValueError(f"asymmetric samples at direction {v}")
            else:
                out_d.append(-v)
                out_v.append(t)
        return np.asarray(out_d), np.asarray(out_v)

    # constructors -------------------------------------------------------

    @classmethod
    def from_function(
        cls, f: Callable[[np.ndarray], float], d: int, count: int, extra: Iterable = ()
    ) -> "NormTable":
        dirs = quasi_uniform_directions(d, count)
        extra = [np.asarray(v, float) / np.linalg.norm(v) for v in extra]
        if extra:
            dirs = np.vstack([dirs, extra])
        return cls(dirs, [f(v) for v in dirs], symmetric=True)

    @classmethod
    def l1(cls, d: int) -> "NormTable":
        """``sum_i |v_i|``: its Wulff set is the cube ``[-1, 1]^d``."""
        return cls.axis_symmetric(d, 1.0)

    @classmethod
    def linf(cls, d: int) -> "NormTable":
        """``max_i |v_i|``, sampled on axes and all diagonals."""
        import itertools

        dirs = []
        for signs in itertools.product((-1.0, 0.0, 1.0), repeat=d):
            if any(signs):
                dirs.append(signs)
        dirs = np.asarray(dirs)
        vals = np.max(np.abs(dirs), axis=1) / np.linalg.norm(dirs, axis=1)
        return cls(dirs, vals)

    @classmethod
    def constant(cls, d: int, count: int = 360) -> "NormTable":
        """Value 1 on ``count`` quasi-uniform directions (Euclidean norm, discretised)."""
        return cls(quasi_uniform_directions(d, count), np.ones(count))

    @classmethod
    def axis_symmetric(cls, d: int, value: float | Sequence[float]) -> "NormTable":
        """Samples only on ``±e_i``; a scalar value gives ``value * l1``."""
        vals = np.broadcast_to(np.asarray(value, dtype=float), (d,))
        return cls(np.eye(d), vals)

    def scaled(self, t: float) -> "NormTable":
        return NormTable(self.directions, self.values * float(t), self.symmetric)

    # evaluation ---------------------------------------------------------

    @property
    def sample_wulff(self) -> "Polytope":
        """``{x : x.v <= value(v)}`` over the samples."""
        if self._wulff is None:
            self._wulff = Polytope.from_halfspaces(self.directions, self.values)
        return self._wulff

    def value(self, v: Sequence[float]) -> float:
        v = np.asarray(v, dtype=float)
        length = float(np.linalg.norm(v))
        if length == 0.0:
            return 0.0
        u = v / length
        hit = np.flatnonzero(np.max(np.abs(self.directions - u), axis=1) <= UNIT_TOL)
        if hit.size:
            return float(self.values[hit[0]]) * length
        return float(np.max(self.sample_wulff.vertices @ v))

    def __call__(self, v) -> float:
        return self.value(v)

    def values_at(self, dirs: np.ndarray) -> np.ndarray:
        return np.asarray([self.value(v) for v in np.atleast_2d(dirs)])

    # text format --------------------------------------------------------

    def dumps(self) -> str:
        lines = [" ".join(repr(float(c)) for c in v) + f" {float(t)!r}" for v, t in zip(self.directions, self.values)]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "NormTable":
        rows = []
        for ln, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                rows.append([float(t) for t in line.split()])
            except ValueError:
                raise ValueError(f"line {ln}: non-numeric entry") from None
        if not rows:
            raise ValueError("empty norm table")
        width = {len(r) for r in rows}
        if len(width) != 1 or width.pop() < 3:
            raise ValueError("every line needs d coordinates and a value, d >= 2")
        arr = np.asarray(rows)
        return cls(arr[:, :-1], arr[:, -1])


def load_norm_table(path: str | Path) -> NormTable:
    return NormTable.loads(Path(path).read_text())


def _check_bounded(normals: np.ndarray, offsets: np.ndarray) -> None:
    d = normals.shape[1]
    for k in range(d):
        for sgn in (1.0, -1.0):
            c = np.zeros(d)
            c[k] = -sgn
            res = linprog(c, A_ub=normals, b_ub=offsets, bounds=[(None, None)] * d, method="highs")
            if res.status == 3:
                raise GeometryError("half-space intersection is unbounded")
            if res.status != 0:
                raise GeometryError(f"half-space intersection failed: {res.message}")


def _polygon_order(pts: np.ndarray) -> np.ndarray:
    c = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
    return pts[np.argsort(ang)]


def _shoelace(pts: np.ndarray) -> tuple[float, np.ndarray]:
    """Area and centroid of a simple polygon with ordered vertices."""
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2.0
    cx = ((x + xn) * cross).sum() / (6.0 * a)
    cy = ((y + yn) * cross).sum() / (6.0 * a)
    return abs(a), np.array([cx, cy])


def _vertices_2d(normals: np.ndarray, offsets: np.ndarray, tol: float) -> np.ndarray:
    """All pairwise line intersections that satisfy every constraint."""
    m = normals.shape[0]
    i, j = np.triu_indices(m, 1)
    a, b = normals[i], normals[j]
    det = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    ok = np.abs(det) > 1e-14
    i, j, a, b, det = i[ok], j[ok], a[ok], b[ok], det[ok]
    hi, hj = offsets[i], offsets[j]
    x = (hi * b[:, 1] - hj * a[:, 1]) / det
    y = (a[:, 0] * hj - b[:, 0] * hi) / det
    pts = np.column_stack([x, y])
    slack = pts @ normals.T - offsets
    feas = np.all(slack <= tol, axis=1)
    return _dedupe_rows(pts[feas], tol * 10)


@dataclass(frozen=True)
class Polytope:
    """Bounded convex polytope with resolved facets.

    ``normals[i]`` is the outward unit normal of facet ``i``, ``offsets[i]`` its
    support value, ``measures[i]`` its (d-1)-measure and ``centroids[i]`` its
    centroid.  Only facets of positive measure are kept.
    """

    d: int
    normals: np.ndarray
    offsets: np.ndarray
    vertices: np.ndarray
    measures: np.ndarray
    centroids: np.ndarray

    @classmethod
    def from_halfspaces(cls, normals: np.ndarray, offsets: Sequence[float]) -> "Polytope":
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        offsets = np.asarray(offsets, dtype=float).ravel()
        d = normals.shape[1]
        if d not in (2, 3):
            raise GeometryError(f"the geometry kernel supports d in {{2, 3}}, got {d}")
        lengths = np.linalg.norm(normals, axis=1)
        normals = normals / lengths[:, None]
        offsets = offsets / lengths
        if np.any(offsets <= 0):
            raise GeometryError("the origin must be strictly inside every half-space")
        _check_bounded(normals, offsets)
        scale = float(np.max(offsets))
        tol = 1e-11 * scale
        if d == 2:
            verts = _vertices_2d(normals, offsets, tol)
        else:
            hs = HalfspaceIntersection(np.column_stack([normals, -offsets]), np.zeros(d))
            verts = _dedupe_rows(hs.intersections, 1e-9 * scale)
        keep_n, keep_h, meas, cents = [], [], [], []
        # repeated normals: only the first one that forms a facet is kept
        twins: list[list[int]] = [[] for _ in range(normals.shape[0])]
        for a, b in cKDTree(normals).query_pairs(1e-12, p=np.inf, output_type="ndarray"):
            twins[a].append(b)
            twins[b].append(a)
        kept = np.zeros(normals.shape[0], dtype=bool)
        for idx, (nv, h) in enumerate(zip(normals, offsets)):
            if any(kept[j] for j in twins[idx]):
                continue
            on = verts[np.abs(verts @ nv - h) <= 1e-9 * scale]
            if d == 2:
                if on.shape[0] < 2:
                    continue
                t = on @ np.array([-nv[1], nv[0]])
                lo, hi = np.argmin(t), np.argmax(t)
                mu = float(t[hi] - t[lo])
                cen = (on[lo] + on[hi]) / 2.0
            else:
                if on.shape[0] < 3:
                    continue
                e1 = np.cross(nv, [1.0, 0.0, 0.0] if abs(nv[0]) < 0.9 else [0.0, 1.0, 0.0])
                e1 /= np.linalg.norm(e1)
                e2 = np.cross(nv, e1)
                uv = np.column_stack([on @ e1, on @ e2])
                uv = _polygon_order(uv)
                mu, c2 = _shoelace(uv) if uv.shape[0] >= 3 else (0.0, uv.mean(axis=0))
                cen = c2[0] * e1 + c2[1] * e2 + h * nv
            if mu <= 1e-12 * scale ** (d - 1):
                continue
            kept[idx] = True
            keep_n.append(nv)
            keep_h.append(h)
            meas.append(mu)
            cents.append(cen)
        return cls(
            d=d,
            normals=np.asarray(keep_n),
            offsets=np.asarray(keep_h),
            vertices=verts,
            measures=np.asarray(meas),
            centroids=np.asarray(cents),
        )

    @classmethod
    def from_points(cls, points: np.ndarray) -> "Polytope":
        """Convex hull of ``points`` (the origin must be interior)."""
        hull = ConvexHull(np.asarray(points, dtype=float))
        eq = hull.equations
        return cls.from_halfspaces(eq[:, :-1], -eq[:, -1])

    @classmethod
    def cube(cls, d: int, half_side: float = 1.0) -> "Polytope":
        eye = np.eye(d)
        return cls.from_halfspaces(np.vstack([eye, -eye]), np.full(2 * d, float(half_side)))

    @classmethod
    def ball(cls, d: int, count: int = 64) -> "Polytope":
        """Polytope circumscribed about the unit ball with ``count`` facet directions."""
        dirs = quasi_uniform_directions(d, count)
        return cls.from_halfspaces(dirs, np.ones(len(dirs)))

    def volume(self) -> float:
        """``(1/d) sum offset * measure`` over facets (cone decomposition from the origin)."""
        return float(np.dot(self.offsets, self.measures) / self.d)

    def simplex_volume(self) -> float:
        """Volume from the vertex description alone."""
        if self.d == 2:
            return _shoelace(_polygon_order(self.vertices))[0]
        return float(ConvexHull(self.vertices).volume)

    def perimeter(self) -> float:
        return float(self.measures.sum())

    def scaled(self, lam: float) -> "Polytope":
        lam = float(lam)
        if lam <= 0:
            raise ValueError("dilation factor must be positive")
        return Polytope(
            d=self.d,
            normals=self.normals,
            offsets=self.offsets * lam,
            vertices=self.vertices * lam,
            measures=self.measures * lam ** (self.d - 1),
            centroids=self.centroids * lam,
        )

    def is_consistent(self, rtol: float = 1e-9) -> bool:
        v = self.volume()
        return abs(v - self.simplex_volume()) <= rtol * abs(v)


def volume(poly: Polytope) -> float:
    v = poly.volume()
    if not poly.is_consistent():
        raise GeometryError("facet and vertex descriptions disagree")
    return v


def surface_tension(poly: Polytope, norm: NormTable | Callable) -> float:
    """``sum_facets norm(normal) * measure``."""
    tau = norm.value if isinstance(norm, NormTable) else norm
    return float(sum(tau(nv) * mu for nv, mu in zip(poly.normals, poly.measures)))


def wulff_set(norm: NormTable, direction_count: int = 64) -> Polytope:
    """Intersection of ``{x : x.v <= norm(v)}`` over quasi-uniform directions and the samples."""
    d = norm.d
    if int(direction_count) < 2 * d:
        raise ValueError(f"need at least {2 * d} directions")
    dirs = np.vstack([quasi_uniform_directions(d, direction_count), norm.directions])
    dirs = _dedupe_rows(dirs, 1e-12)
    return Polytope.from_halfspaces(dirs, norm.values_at(dirs))


def dilate_to_volume(poly: Polytope, target_volume: float) -> Polytope:
    target_volume = float(target_volume)
    if not target_volume > 0:
        raise ValueError("target volume must be positive")
    lam = (target_volume / poly.volume()) ** (1.0 / poly.d)
    return poly.scaled(lam)


@dataclass(frozen=True)
class PhiResult:
    value: float
    degenerate: bool
    crystal: Polytope | None


def phi_of_p(
    norm: NormTable, theta: float, direction_count: int = 64, tiny: float = 1e-12
) -> PhiResult:
    """Surface tension of the Wulff crystal of ``norm`` dilated to volume ``1/theta``."""
    theta = float(theta)
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    if float(np.max(norm.values)) < tiny:
        return PhiResult(0.0, True, None)
    crystal = dilate_to_volume(wulff_set(norm, direction_count), 1.0 / theta)
    return PhiResult(surface_tension(crystal, norm), False, crystal)


def _unit_volume_tension(poly: Polytope, norm: NormTable) -> float:
    lam = poly.volume() ** (-1.0 / poly.d)
    return surface_tension(poly, norm) * lam ** (poly.d - 1)


def candidate_battery(d: int, random_count: int = 20, seed: int = 0) -> list[tuple[str, Polytope]]:
    """Cube, a ball approximation and random centrally symmetric polytopes."""
    rng = np.random.default_rng(seed)
    out = [("cube", Polytope.cube(d)), ("ball", Polytope.ball(d, 64 if d == 2 else 200))]
    for i in range(random_count):
        k = int(rng.integers(d + 1, 4 * d + 3))
        pts = rng.normal(size=(k, d)) * rng.uniform(0.3, 2.0, size=d)
        out.append((f"random{i}", Polytope.from_points(np.vstack([pts, -pts]))))
    return out


@dataclass(frozen=True)
class IsoperimetricReport:
    wulff_tension: float
    candidates: list[tuple[str, float]]
    slack: float

    @property
    def best_candidate(self) -> tuple[str, float]:
        return min(self.candidates, key=lambda c: c[1])

    @property
    def wulff_is_minimal(self) -> bool:
        return self.wulff_tension <= self.best_candidate[1] + self.slack


def isoperimetric_check(
    norm: NormTable,
    candidates: Sequence[Polytope | tuple[str, Polytope]],
    direction_count: int = 64,
    slack: float = 1e-6,
) -> IsoperimetricReport:
    """Compare the surface tension at unit volume of the Wulff set with each candidate."""
    if not candidates:
        raise ValueError("need at least one candidate")
    w = wulff_set(norm, direction_count)
    rows = []
    for i, c in enumerate(candidates):
        name, poly = c if isinstance(c, tuple) else (f"candidate{i}", c)
        rows.append((name, _unit_volume_tension(poly, norm)))
    return IsoperimetricReport(_unit_volume_tension(w, norm), rows, slack)
