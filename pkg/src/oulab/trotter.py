"""Dyadic Trotter composition of domain-masked Mehler kernel matrices.

The Dirichlet kernel on a convex domain is approached from above by the
masked m-step composition with m = 2^L: start from the Mehler kernel at the
substep t / 2^L, zero every row/column whose lattice point lies outside the
domain, and square the matrix L times through the Gaussian quadrature
weights. Entries decrease pointwise in L and stay below the whole-space
kernel; no renormalization is ever applied, so those two bounds survive
discretization.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ConvexDomain, mask as domain_mask
from .grid import Grid, gaussian_weights
from .mehler import mehler_gauss_matrix

MAX_LEVELS = 30


@dataclass
class KernelMatrix:
    """Dense two-point kernel K(x_i, x_j; t) on a grid."""

    grid: Grid
    t: float
    matrix: np.ndarray
    provenance: str
    mask: np.ndarray | None = None
    truncated: bool = False

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        n = self.grid.total
        if self.matrix.shape != (n, n):
            raise ValueError(f"kernel matrix shape {self.matrix.shape}, expected ({n}, {n})")


def masked_mehler(grid: Grid, mask: np.ndarray, t: float) -> KernelMatrix:
    """Mehler kernel matrix with rows/columns outside the mask zeroed."""
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    if not mask.any():
        raise ValueError("empty domain mask")
    m = mehler_gauss_matrix(grid, t)
    keep = mask.astype(float)
    m *= keep[:, None]
    m *= keep[None, :]
    return KernelMatrix(grid, float(t), m, provenance="mehler", mask=mask)


def compose(
    k1: KernelMatrix, k2: KernelMatrix, weights: np.ndarray, mask: np.ndarray | None = None
) -> KernelMatrix:
    """Chapman-Kolmogorov product: integrate over the intermediate point.

    K[i][j] = sum_k K1[i][k] K2[k][j] w_k chi_k, result time t1 + t2.
    """
    if k1.grid is not k2.grid and k1.grid != k2.grid:
        raise ValueError("kernel matrices live on different grids")
    weights = np.asarray(weights).reshape(-1)
    if weights.size != k1.grid.total:
        raise ValueError("weight count does not match grid")
    mid = weights if mask is None else weights * np.asarray(mask, dtype=float).reshape(-1)
    prod = (k1.matrix * mid[None, :]) @ k2.matrix
    if k1.matrix is k2.matrix or np.array_equal(k1.matrix, k2.matrix):
        prod = 0.5 * (prod + prod.T)  # squaring preserves symmetry exactly
    return KernelMatrix(
        k1.grid,
        k1.t + k2.t,
        prod,
        provenance=f"compose({k1.provenance},{k2.provenance})",
        mask=mask if mask is not None else k1.mask,
    )


def min_substep_width(grid: Grid) -> float:
    return 2.0 * max(grid.spacing)


def max_usable_level(grid: Grid, t: float, cap: int = MAX_LEVELS) -> int:
    """Largest dyadic level whose substep still satisfies the width guard."""
    if not t > 0.0:
        raise ValueError(f"time must be positive, got t={t}")
    need = min_substep_width(grid)
    level = 0
    for cand in range(1, cap + 1):
        if np.sqrt(-np.expm1(-2.0 * t / (1 << cand))) < need:
            break
        level = cand
    return level


def _check_substep(grid: Grid, tau: float) -> None:
    width = float(np.sqrt(-np.expm1(-2.0 * tau)))
    need = min_substep_width(grid)
    if width < need:
        h_max = 0.5 * width
        raise ValueError(
            f"substep {tau:.3g} has kernel width {width:.3g} below 2h = {need:.3g}; "
            f"refine the grid to spacing <= {h_max:.3g} or use fewer levels"
        )


def trotter_kernel(domain: ConvexDomain, grid: Grid, t: float, levels: int) -> KernelMatrix:
    """The 2^levels-step masked composition g_{2^levels} on the lattice."""
    if levels < 0 or levels > MAX_LEVELS:
        raise ValueError(f"levels must be in [0, {MAX_LEVELS}], got {levels}")
    if not t > 0.0:
        raise ValueError(f"time must be positive, got t={t}")
    chi = domain_mask(domain, grid)
    tau = t / (1 << levels)
    _check_substep(grid, tau)
    weights = gaussian_weights(grid)
    k = masked_mehler(grid, chi, tau)
    for _ in range(levels):
        k = compose(k, k, weights, chi)
    return KernelMatrix(grid, t, k.matrix, provenance=f"trotter({levels})", mask=chi)


@dataclass
class ConvergenceReport:
    history: list[tuple[int, float]] = field(default_factory=list)
    converged: bool = False
    final_level: int = 0

    @property
    def final_change(self) -> float:
        return self.history[-1][1] if self.history else float("nan")


def dyadic_converge(
    domain: ConvexDomain, grid: Grid, t: float, l_max: int, tol: float
) -> tuple[KernelMatrix, ConvergenceReport]:
    """Increase the dyadic level until the max-entry change drops below tol.

    Returns the first converged level (or the last computed one, flagged
    unconverged) together with the per-level change history.
    """
    report = ConvergenceReport()
    prev = trotter_kernel(domain, grid, t, 0)
    current = prev
    for level in range(1, l_max + 1):
        current = trotter_kernel(domain, grid, t, level)
        change = float(np.max(np.abs(current.matrix - prev.matrix)))
        report.history.append((level, change))
        report.final_level = level
        if change < tol:
            report.converged = True
            return current, report
        prev = current
    return current, report


def mass(k: KernelMatrix, weights: np.ndarray, x_index: int) -> float:
    """Row mass sum_j K[x][j] w_j; at most 1 up to quadrature error."""
    weights = np.asarray(weights).reshape(-1)
    if not 0 <= x_index < k.grid.total:
        raise IndexError(f"row index {x_index} out of range")
    w = weights if k.mask is None else weights * k.mask
    return float(np.dot(k.matrix[x_index], w))
