"""Uniform tensor grids with Gaussian-measure quadrature.

The discrete weighted L2 structure shared by every other module: a uniform
closed-interval lattice per axis, and per-point quadrature weights equal to
the composite trapezoid cell measure times the standard Gaussian density

    (2 pi)^(-dim/2) exp(-|x|^2 / 2).

Whole-space integrals are truncated to a bounding box of [-R, R] per axis
(R = 8 by default; the Gaussian tail mass beyond that is below 1e-14).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

TRUNCATION_RADIUS = 8.0


def _as_axis_tuple(value, dim: int) -> tuple[float, ...]:
    if np.isscalar(value):
        return (float(value),) * dim
    out = tuple(float(v) for v in value)
    if len(out) != dim:
        raise ValueError(f"expected {dim} per-axis values, got {len(out)}")
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform lattice over a bounding box, endpoints included."""

    dim: int
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    n_per_axis: tuple[int, ...]

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple(
            (b - a) / (n - 1) for a, b, n in zip(self.lo, self.hi, self.n_per_axis)
        )

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(
            np.linspace(a, b, n) for a, b, n in zip(self.lo, self.hi, self.n_per_axis)
        )

    @cached_property
    def points(self) -> np.ndarray:
        """All lattice points, shape (total, dim), C-order over the axes."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n_per_axis

    @property
    def total(self) -> int:
        return int(np.prod(self.n_per_axis))

    def reshape(self, flat: np.ndarray) -> np.ndarray:
        return np.asarray(flat).reshape(self.shape)


def build_grid(dim: int, lo, hi, n_per_axis) -> Grid:
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    lo_t = _as_axis_tuple(lo, dim)
    hi_t = _as_axis_tuple(hi, dim)
    if np.isscalar(n_per_axis):
        n_t = (int(n_per_axis),) * dim
    else:
        n_t = tuple(int(n) for n in n_per_axis)
        if len(n_t) != dim:
            raise ValueError(f"expected {dim} point counts, got {len(n_t)}")
    for a, b in zip(lo_t, hi_t):
        if not a < b:
            raise ValueError(f"degenerate bounds: lo={lo_t}, hi={hi_t}")
    for n in n_t:
        if n < 3:
            raise ValueError(f"need at least 3 points per axis, got {n}")
    return Grid(dim=dim, lo=lo_t, hi=hi_t, n_per_axis=n_t)


def whole_space_grid(dim: int = 1, radius: float = TRUNCATION_RADIUS, n: int = 1601) -> Grid:
    """Truncation grid standing in for R^dim."""
    return build_grid(dim, -radius, radius, n)


def gaussian_weights(grid: Grid) -> np.ndarray:
    """Trapezoid cell measure times the Gaussian density, per grid point.

    The per-axis trapezoid weight is h, halved at the two endpoints; the
    tensor product of those is multiplied by (2 pi)^(-dim/2) e^(-|x|^2/2).
    """
    cell = np.array(1.0)
    for n, h in zip(grid.n_per_axis, grid.spacing):
        w = np.full(n, h)
        w[0] *= 0.5
        w[-1] *= 0.5
        cell = np.multiply.outer(cell, w)
    cell = cell.reshape(-1)
    sq = np.sum(grid.points**2, axis=-1)
    density = (2.0 * np.pi) ** (-grid.dim / 2.0) * np.exp(-0.5 * sq)
    return cell * density


@dataclass
class GridFunction:
    """Real values sampled at every grid point (flat, C-order)."""

    grid: Grid
    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.size != self.grid.total:
            raise ValueError(
                f"value count {self.values.size} does not match grid size {self.grid.total}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function values must be finite")
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool).reshape(-1)
            if self.mask.size != self.grid.total:
                raise ValueError("mask size does not match grid")
            if np.any(self.values[~self.mask] != 0.0):
                raise ValueError("values outside the mask must be exactly 0")

    @property
    def shaped(self) -> np.ndarray:
        return self.grid.reshape(self.values)


def integrate(values, weights: np.ndarray) -> float:
    """Discrete integral sum_i f(x_i) * w_i against the Gaussian weights."""
    vals = values.values if isinstance(values, GridFunction) else np.asarray(values).reshape(-1)
    weights = np.asarray(weights).reshape(-1)
    if vals.size != weights.size:
        raise ValueError(f"size mismatch: {vals.size} values vs {weights.size} weights")
    return float(np.dot(vals, weights))
