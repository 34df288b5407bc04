"""Bounded convex domains and their lattice masks.

Supported shapes are open intervals, open axis-aligned boxes, and open
strictly convex polygons (counterclockwise vertex order). These admit exact
Minkowski interpolation (1-s)*Omega0 + s*Omega1, which is why smooth shapes
like disks are deliberately not supported. Membership is strict: boundary
points are outside.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .grid import Grid


@dataclass(frozen=True)
class Interval:
    a: float
    b: float


@dataclass(frozen=True)
class AxisBox:
    lo: tuple[float, float]
    hi: tuple[float, float]


@dataclass(frozen=True)
class ConvexPolygon:
    vertices: tuple[tuple[float, float], ...]


ConvexDomain = Union[Interval, AxisBox, ConvexPolygon]


def domain_dim(domain: ConvexDomain) -> int:
    return 1 if isinstance(domain, Interval) else 2


def bounding_box(domain: ConvexDomain) -> tuple[tuple[float, ...], tuple[float, ...]]:
    if isinstance(domain, Interval):
        return (domain.a,), (domain.b,)
    if isinstance(domain, AxisBox):
        return tuple(domain.lo), tuple(domain.hi)
    v = np.asarray(domain.vertices, dtype=float)
    return tuple(v.min(axis=0)), tuple(v.max(axis=0))


def _edge_crosses(vertices: np.ndarray) -> np.ndarray:
    """Cross products of consecutive edge pairs, one per vertex."""
    nxt = np.roll(vertices, -1, axis=0)
    prv = np.roll(vertices, 1, axis=0)
    e_in = vertices - prv
    e_out = nxt - vertices
    return e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]


def verify_convexity(domain: ConvexDomain) -> bool:
    """True iff the domain invariants hold; never raises."""
    if isinstance(domain, Interval):
        return float(domain.a) < float(domain.b)
    if isinstance(domain, AxisBox):
        return all(a < b for a, b in zip(domain.lo, domain.hi))
    if isinstance(domain, ConvexPolygon):
        v = np.asarray(domain.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
            return False
        for i in range(len(v)):
            for j in range(i + 1, len(v)):
                if np.all(v[i] == v[j]):
                    return False
        return bool(np.all(_edge_crosses(v) > 0.0))
    return False


def _require_valid(domain: ConvexDomain) -> None:
    if not verify_convexity(domain):
        raise ValueError(f"invalid convex domain: {domain!r}")


def contains(domain: ConvexDomain, point) -> bool:
    """Strict interior membership; boundary points are outside."""
    if isinstance(domain, Interval):
        x = float(point) if np.isscalar(point) else float(np.asarray(point).reshape(-1)[0])
        return domain.a < x < domain.b
    p = np.asarray(point, dtype=float).reshape(2)
    if isinstance(domain, AxisBox):
        return all(a < x < b for a, x, b in zip(domain.lo, p, domain.hi))
    v = np.asarray(domain.vertices, dtype=float)
    nxt = np.roll(v, -1, axis=0)
    edge = nxt - v
    rel = p[None, :] - v
    return bool(np.all(edge[:, 0] * rel[:, 1] - edge[:, 1] * rel[:, 0] > 0.0))


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain hull, counterclockwise, collinear points dropped."""
    pts = np.unique(points, axis=0)  # sorts lexicographically
    if len(pts) < 3:
        raise ValueError("fewer than 3 distinct points for a polygon hull")

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) > 1 and cross(lower[-2], lower[-1], p) <= 0.0:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) > 1 and cross(upper[-2], upper[-1], p) <= 0.0:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        raise ValueError("degenerate (collinear) polygon hull")
    return hull


def minkowski_interpolate(om0: ConvexDomain, om1: ConvexDomain, s: float) -> ConvexDomain:
    """The set {(1-s) x0 + s x1 : x0 in om0, x1 in om1}."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"interpolation parameter s={s} outside [0, 1]")
    if type(om0) is not type(om1):
        raise ValueError(
            f"incompatible domain variants: {type(om0).__name__} vs {type(om1).__name__}"
        )
    _require_valid(om0)
    _require_valid(om1)
    c0, c1 = 1.0 - s, s
    if isinstance(om0, Interval):
        return Interval(c0 * om0.a + c1 * om1.a, c0 * om0.b + c1 * om1.b)
    if isinstance(om0, AxisBox):
        lo = tuple(c0 * a + c1 * b for a, b in zip(om0.lo, om1.lo))
        hi = tuple(c0 * a + c1 * b for a, b in zip(om0.hi, om1.hi))
        return AxisBox(lo, hi)
    v0 = np.asarray(om0.vertices, dtype=float)
    v1 = np.asarray(om1.vertices, dtype=float)
    sums = (c0 * v0[:, None, :] + c1 * v1[None, :, :]).reshape(-1, 2)
    hull = _convex_hull(sums)
    return ConvexPolygon(tuple(map(tuple, hull.tolist())))


def mask(domain: ConvexDomain, grid: Grid) -> np.ndarray:
    """Boolean strict-membership flag per grid point (flat, C-order)."""
    _require_valid(domain)
    if domain_dim(domain) != grid.dim:
        raise ValueError(f"domain dimension {domain_dim(domain)} vs grid dimension {grid.dim}")
    lo, hi = bounding_box(domain)
    eps = 1e-12
    for gl, gh, dl, dh in zip(grid.lo, grid.hi, lo, hi):
        if gl > dl + eps or gh < dh - eps:
            raise ValueError("grid bounding box does not cover the domain closure")
    pts = grid.points
    if isinstance(domain, Interval):
        m = (pts[:, 0] > domain.a) & (pts[:, 0] < domain.b)
    elif isinstance(domain, AxisBox):
        m = np.ones(len(pts), dtype=bool)
        for k in range(2):
            m &= (pts[:, k] > domain.lo[k]) & (pts[:, k] < domain.hi[k])
    else:
        v = np.asarray(domain.vertices, dtype=float)
        nxt = np.roll(v, -1, axis=0)
        edge = nxt - v
        m = np.ones(len(pts), dtype=bool)
        for k in range(len(v)):
            rel = pts - v[k]
            m &= edge[k, 0] * rel[:, 1] - edge[k, 1] * rel[:, 0] > 0.0
    if not m.any():
        raise ValueError("domain mask is empty on this grid")
    return m


def domain_from_config(spec: dict) -> ConvexDomain:
    """Parse a domain declaration from a run configuration tree."""
    kind = spec.get("type")
    if kind == "interval":
        return Interval(float(spec["a"]), float(spec["b"]))
    if kind == "box":
        lo = tuple(float(v) for v in spec["lo"])
        hi = tuple(float(v) for v in spec["hi"])
        return AxisBox(lo, hi)
    if kind == "polygon":
        verts = tuple(tuple(float(c) for c in v) for v in spec["vertices"])
        return ConvexPolygon(verts)
    raise ValueError(f"unknown domain type: {kind!r}")
