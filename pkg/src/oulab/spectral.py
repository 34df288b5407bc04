"""Discrete Dirichlet eigensolve of the Ornstein-Uhlenbeck operator.

The generator L u = Delta u - (x, grad u) is symmetrized through the ground
state substitution w = u e^{-|x|^2/4}, which turns the eigenproblem into a
plain Schroedinger problem

    -Delta w + V w = lambda w,      V(x) = -dim/2 + |x|^2/4,

discretized by the standard central-difference Laplacian. Dirichlet
conditions are imposed by deleting rows/columns at lattice points outside
the strict-interior domain mask. Eigenvectors are mapped back through
u = w e^{|x|^2/4} and renormalized in the discrete Gaussian-weighted L2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from .geometry import ConvexDomain, mask as domain_mask
from .grid import Grid, gaussian_weights

DEFAULT_MODES_1D = 40
DEFAULT_MODES_2D = 60
TRUNCATION_TAIL = 1e-12


@dataclass
class OperatorMatrix:
    """Symmetric Schroedinger-form operator restricted to interior points."""

    matrix: np.ndarray
    interior: np.ndarray  # flat boolean mask over the grid
    grid: Grid
    domain: ConvexDomain


@dataclass
class SpectralDecomposition:
    domain: ConvexDomain
    grid: Grid
    mask: np.ndarray
    eigenvalues: np.ndarray  # ascending, length K
    eigenfunctions: np.ndarray  # (K, grid.total); gamma-normalized, 0 off the mask

    @property
    def k_modes(self) -> int:
        return len(self.eigenvalues)


@dataclass
class EigenPair:
    index: int
    eigenvalue: float
    eigenfunction: np.ndarray


def potential(grid: Grid) -> np.ndarray:
    sq = np.sum(grid.points**2, axis=-1)
    return -0.5 * grid.dim + 0.25 * sq


def _laplacian_1d(n: int, h: float) -> scipy.sparse.spmatrix:
    main = np.full(n, 2.0 / h**2)
    off = np.full(n - 1, -1.0 / h**2)
    return scipy.sparse.diags([off, main, off], [-1, 0, 1])


def assemble_operator(domain: ConvexDomain, grid: Grid) -> OperatorMatrix:
    """Central-difference -Delta + diag(V) with Dirichlet row/col deletion."""
    interior = domain_mask(domain, grid)
    if grid.dim == 1:
        lap = _laplacian_1d(grid.n_per_axis[0], grid.spacing[0])
    else:
        lx = _laplacian_1d(grid.n_per_axis[0], grid.spacing[0])
        ly = _laplacian_1d(grid.n_per_axis[1], grid.spacing[1])
        lap = scipy.sparse.kron(lx, scipy.sparse.identity(grid.n_per_axis[1])) + scipy.sparse.kron(
            scipy.sparse.identity(grid.n_per_axis[0]), ly
        )
    op = lap + scipy.sparse.diags(potential(grid))
    idx = np.flatnonzero(interior)
    dense = op.tocsr()[idx][:, idx].toarray()
    return OperatorMatrix(matrix=dense, interior=interior, grid=grid, domain=domain)


def solve_eigs(op: OperatorMatrix, k_modes: int) -> SpectralDecomposition:
    """Smallest k_modes eigenpairs, back-transformed and gamma-normalized."""
    n_int = op.matrix.shape[0]
    if not 1 <= k_modes <= n_int:
        raise ValueError(f"k_modes={k_modes} outside [1, {n_int}]")
    vals, vecs = scipy.linalg.eigh(op.matrix, subset_by_index=[0, k_modes - 1])
    weights = gaussian_weights(op.grid)
    idx = np.flatnonzero(op.interior)
    back = np.exp(0.25 * np.sum(op.grid.points[idx] ** 2, axis=-1))
    funcs = np.zeros((k_modes, op.grid.total))
    for k in range(k_modes):
        u = np.zeros(op.grid.total)
        u[idx] = vecs[:, k] * back
        norm = np.sqrt(np.dot(u * u, weights))
        if norm == 0.0:
            raise ValueError(f"degenerate eigenvector for mode {k}")
        u /= norm
        peak = int(np.argmax(np.abs(u)))
        if u[peak] < 0.0:
            u = -u
        funcs[k] = u
    return SpectralDecomposition(
        domain=op.domain,
        grid=op.grid,
        mask=op.interior,
        eigenvalues=vals,
        eigenfunctions=funcs,
    )


def solve_domain(domain: ConvexDomain, grid: Grid, k_modes: int) -> SpectralDecomposition:
    return solve_eigs(assemble_operator(domain, grid), k_modes)


def spectral_kernel(dec: SpectralDecomposition, t: float):
    """Spectral synthesis sum_k e^{-lambda_k t} phi_k(x) phi_k(z)."""
    from .trotter import KernelMatrix  # local import to avoid a cycle

    if not t > 0.0:
        raise ValueError(f"time must be positive, got t={t}")
    decay = np.exp(-dec.eigenvalues * t)
    truncated = bool(decay[-1] >= TRUNCATION_TAIL)
    m = (dec.eigenfunctions.T * decay) @ dec.eigenfunctions
    m = 0.5 * (m + m.T)
    return KernelMatrix(
        dec.grid,
        float(t),
        m,
        provenance=f"spectral({dec.k_modes})",
        mask=dec.mask,
        truncated=truncated,
    )


def sup_norm_ratio(dec: SpectralDecomposition) -> np.ndarray:
    """Per-mode sup norm over lambda_k^(dim/4); bounded with no growth trend."""
    sup = np.max(np.abs(dec.eigenfunctions), axis=1)
    return sup / dec.eigenvalues ** (dec.grid.dim / 4.0)


def trace_partial_sums(dec: SpectralDecomposition, t: float, k: int | None = None) -> np.ndarray:
    if not t > 0.0:
        raise ValueError(f"time must be positive, got t={t}")
    k = dec.k_modes if k is None else min(k, dec.k_modes)
    return np.cumsum(np.exp(-t * dec.eigenvalues[:k]))


def convergence_rate(dec: SpectralDecomposition, t: float) -> float:
    """M(t) = sup over modes k >= 2 of exp(-lambda_k t + lambda_1 t + lambda_k)."""
    if not t > 0.0:
        raise ValueError(f"time must be positive, got t={t}")
    if dec.k_modes < 2:
        raise ValueError("need at least 2 modes")
    lam = dec.eigenvalues
    return float(np.max(np.exp(-lam[1:] * t + lam[0] * t + lam[1:])))


def deep_interior(mask: np.ndarray, grid: Grid, cells: int = 2) -> np.ndarray:
    """Masked points whose full Chebyshev neighborhood of the given radius
    is also masked (and that sit at least that far from the grid edge)."""
    m = np.asarray(mask, dtype=bool).reshape(grid.shape)
    out = np.zeros_like(m)
    if grid.dim == 1:
        n = grid.shape[0]
        for i in range(cells, n - cells):
            out[i] = m[i - cells : i + cells + 1].all()
    else:
        nx, ny = grid.shape
        inner = np.ones((nx - 2 * cells, ny - 2 * cells), dtype=bool)
        for di in range(-cells, cells + 1):
            for dj in range(-cells, cells + 1):
                inner &= m[cells + di : nx - cells + di, cells + dj : ny - cells + dj]
        out[cells : nx - cells, cells : ny - cells] = inner
    return out.reshape(-1)


def ou_residual(grid: Grid, mask: np.ndarray, values: np.ndarray, lam: float) -> float:
    """Sup norm of the discrete eigen-residual Delta_h v - (x, grad_h v) + lam v
    over masked points at least two cells from the boundary."""
    v = np.asarray(values, dtype=float).reshape(grid.shape)
    region = deep_interior(mask, grid, cells=2).reshape(grid.shape)
    if not region.any():
        raise ValueError("no interior points two cells from the boundary")
    res = lam * v
    for axis, h in enumerate(grid.spacing):
        vp = np.roll(v, -1, axis=axis)
        vm = np.roll(v, 1, axis=axis)
        lap = (vp - 2.0 * v + vm) / h**2
        grad = (vp - vm) / (2.0 * h)
        coord = grid.points[:, axis].reshape(grid.shape)
        res = res + lap - coord * grad
    return float(np.max(np.abs(res[region])))


def residual_check(dec: SpectralDecomposition, k: int) -> float:
    if not 0 <= k < dec.k_modes:
        raise IndexError(f"mode index {k} out of range")
    return ou_residual(dec.grid, dec.mask, dec.eigenfunctions[k], dec.eigenvalues[k])


def rayleigh_quotient(op: OperatorMatrix, values: np.ndarray) -> float:
    """Discrete Rayleigh quotient of the assembled quadratic form, evaluated
    on a grid function through the ground-state substitution."""
    v = np.asarray(values, dtype=float).reshape(-1)
    idx = np.flatnonzero(op.interior)
    w = v[idx] * np.exp(-0.25 * np.sum(op.grid.points[idx] ** 2, axis=-1))
    num = float(w @ (op.matrix @ w))
    den = float(w @ w)
    if den == 0.0:
        raise ValueError("zero function in Rayleigh quotient")
    return num / den
