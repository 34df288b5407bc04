"""Closed-form whole-space kernels of the Gaussian (Ornstein-Uhlenbeck) flow.

Two printed forms of the same transition kernel are kept deliberately
separate so they can cross-check each other:

  * the Lebesgue-density form
        p(x,z;t)  = (2 pi (1-e^{-2t}))^{-n/2} exp(-|z - e^{-t} x|^2 / (2 (1-e^{-2t})))
  * the Gaussian-measure form
        pg(x,z;t) = (1-e^{-2t})^{-n/2} exp(-(|x|^2 - 2 e^t (x,z) + |z|^2) / (2 (e^{2t}-1)))

linked by  p = pg * (2 pi)^{-n/2} e^{-|z|^2/2}.

All formulas are assembled in the log domain first (exp/expm1/sinh) so that
both very small and very large times are evaluated without overflow.
"""
from __future__ import annotations

import numpy as np

from .grid import Grid, GridFunction, gaussian_weights, whole_space_grid


def _dots(x, z):
    """(x.z, |x|^2, |z|^2) for scalar-or-array points of matching shape."""
    xa = np.asarray(x, dtype=float)
    za = np.asarray(z, dtype=float)
    if xa.ndim == 0:
        xa = xa.reshape(1)
    if za.ndim == 0:
        za = za.reshape(1)
    dot = np.sum(xa * za, axis=-1)
    return dot, np.sum(xa * xa, axis=-1), np.sum(za * za, axis=-1)


def _check_t(t: float) -> float:
    t = float(t)
    if not t > 0.0:
        raise ValueError(f"kernel time must be positive, got t={t}")
    return t


def log_mehler_lebesgue(x, z, t: float, dim: int = 1):
    t = _check_t(t)
    s = -np.expm1(-2.0 * t)  # 1 - e^{-2t}
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    za = np.atleast_1d(np.asarray(z, dtype=float))
    diff = za - np.exp(-t) * xa
    quad = np.sum(diff * diff, axis=-1)
    return -0.5 * dim * np.log(2.0 * np.pi * s) - quad / (2.0 * s)


def log_mehler_gauss(x, z, t: float, dim: int = 1):
    t = _check_t(t)
    dot, sx, sz = _dots(x, z)
    # exponent rewritten as (x.z)/(2 sinh t) - (|x|^2+|z|^2)/(2 (e^{2t}-1))
    return -0.5 * dim * np.log(-np.expm1(-2.0 * t)) + dot / (2.0 * np.sinh(t)) - (sx + sz) / (
        2.0 * np.expm1(2.0 * t)
    )


def mehler_lebesgue(x, z, t: float, dim: int = 1):
    """Whole-space kernel density with respect to Lebesgue measure."""
    out = np.exp(log_mehler_lebesgue(x, z, t, dim))
    return float(out) if out.size == 1 else out


def mehler_gauss(x, z, t: float, dim: int = 1):
    """Whole-space kernel density with respect to the Gaussian measure."""
    out = np.exp(log_mehler_gauss(x, z, t, dim))
    return float(out) if out.size == 1 else out


def kernels_relation_residual(x, z, t: float, dim: int = 1):
    """p(x,z;t) minus pg(x,z;t) * (2 pi)^{-n/2} e^{-|z|^2/2}; zero identically."""
    _, _, sz = _dots(x, z)
    converted = np.exp(
        log_mehler_gauss(x, z, t, dim) - 0.5 * dim * np.log(2.0 * np.pi) - 0.5 * sz
    )
    out = np.exp(log_mehler_lebesgue(x, z, t, dim)) - converted
    return float(out) if out.size == 1 else out


def mehler_gauss_matrix(grid: Grid, t: float) -> np.ndarray:
    """pg sampled at all point pairs of a grid; dense symmetric (N, N)."""
    t = _check_t(t)
    pts = grid.points
    sq = np.sum(pts * pts, axis=-1)
    log_k = pts @ pts.T / (2.0 * np.sinh(t))
    log_k -= (sq[:, None] + sq[None, :]) / (2.0 * np.expm1(2.0 * t))
    log_k -= 0.5 * grid.dim * np.log(-np.expm1(-2.0 * t))
    out = np.exp(log_k)
    return 0.5 * (out + out.T)  # bitwise symmetry despite dgemm rounding


def _interp_constant_ext(u0: GridFunction, coords: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolation, constant beyond the grid box."""
    grid = u0.grid
    if grid.dim == 1:
        return np.interp(coords[:, 0], grid.axes[0], u0.shaped)
    vals = u0.shaped
    out_idx = []
    out_frac = []
    for k in range(2):
        ax = grid.axes[k]
        c = np.clip(coords[:, k], ax[0], ax[-1])
        i = np.clip(np.searchsorted(ax, c) - 1, 0, len(ax) - 2)
        out_idx.append(i)
        out_frac.append((c - ax[i]) / (ax[i + 1] - ax[i]))
    i, j = out_idx
    fx, fy = out_frac
    return (
        vals[i, j] * (1 - fx) * (1 - fy)
        + vals[i + 1, j] * fx * (1 - fy)
        + vals[i, j + 1] * (1 - fx) * fy
        + vals[i + 1, j + 1] * fx * fy
    )


def whole_space_evolve(
    u0: GridFunction,
    t: float,
    quad_n: int = 401,
    quad_radius: float = 8.0,
) -> GridFunction:
    """Apply the whole-space flow to sampled data via the change of variable

        u(x, t) = integral of u0(e^{-t} x + sqrt(1-e^{-2t}) y) dgamma(y),

    with u0 interpolated piecewise-linearly and extended by its boundary
    values off the grid. At t = 0 the data are returned unchanged.
    """
    t = float(t)
    if t < 0.0:
        raise ValueError(f"evolution time must be nonnegative, got t={t}")
    if t == 0.0:
        return GridFunction(u0.grid, u0.values.copy())
    grid = u0.grid
    qgrid = whole_space_grid(grid.dim, quad_radius, quad_n)
    qw = gaussian_weights(qgrid)
    decay = np.exp(-t)
    width = np.sqrt(-np.expm1(-2.0 * t))
    xs = grid.points
    ys = qgrid.points
    out = np.empty(grid.total)
    # batched over x to bound the (N_x, N_y, dim) intermediate
    batch = max(1, int(2_000_000 // max(1, len(ys))))
    for start in range(0, len(xs), batch):
        xb = xs[start : start + batch]
        coords = decay * xb[:, None, :] + width * ys[None, :, :]
        sampled = _interp_constant_ext(u0, coords.reshape(-1, grid.dim))
        out[start : start + len(xb)] = sampled.reshape(len(xb), len(ys)) @ qw
    return GridFunction(grid, out)
