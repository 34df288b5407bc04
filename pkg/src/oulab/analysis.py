"""Discrete log-concavity and Prekopa-marginalization checks.

A nonnegative lattice function passes when every second difference of its
logarithm along unit and diagonal lattice directions is below tolerance,
and (in two or more lattice dimensions) when sampled long-range midpoint
inequalities f(p) f(q) <= f((p+q)/2)^2 hold as well. Values below a
positivity floor are excluded from the test region: the Dirichlet kernels
this module inspects vanish on the boundary, where the logarithm is
singular, while the theorems being checked concern the open set.

The automatic tolerance is c * h^2 with c = 10 times the largest concave
second-difference magnitude observed (a proxy for the log-curvature scale),
floored at 1e-12: discretization perturbs second differences at O(h^2) of
that scale. The concave side is used for the estimate so that genuinely
log-convex data cannot inflate their own tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Union

import numpy as np

from .grid import Grid, GridFunction
from .spectral import SpectralDecomposition, deep_interior

POSITIVITY_FLOOR = 1e-280
PAIR_SAMPLES = 100_000


@dataclass
class LogConcavityReport:
    passed: bool
    worst_violation: float
    witness: tuple | None
    tolerance: float
    excluded_fraction: float

    def __bool__(self) -> bool:
        return self.passed


def _canonical_directions(ndim: int) -> list[tuple[int, ...]]:
    dirs = []
    for e in product((-1, 0, 1), repeat=ndim):
        if all(c == 0 for c in e):
            continue
        first = next(c for c in e if c != 0)
        if first > 0:
            dirs.append(e)
    return dirs


def _triple_slices(shape, e):
    ctr, plus, minus = [], [], []
    for n, c in zip(shape, e):
        a = abs(c)
        ctr.append(slice(a, n - a) if a else slice(None))
        plus.append(slice(a + c, n - a + c if n - a + c != 0 else None) if a else slice(None))
        minus.append(slice(a - c, n - a - c if n - a - c != 0 else None) if a else slice(None))
    return tuple(ctr), tuple(plus), tuple(minus)


def _core_check(
    values: np.ndarray,
    region: np.ndarray,
    tol: Union[str, float],
    h: float,
    pair_samples: int,
    seed: int,
) -> LogConcavityReport:
    if np.any(values < 0.0):
        raise ValueError("log-concavity test requires nonnegative values")
    valid = region & (values > POSITIVITY_FLOOR)
    n_region = int(region.sum())
    excluded = 1.0 - (int(valid.sum()) / n_region if n_region else 0.0)
    lp = np.full(values.shape, -np.inf)
    lp[valid] = np.log(values[valid])

    worst = -np.inf
    witness: tuple | None = None
    concave_scale = 0.0
    for e in _canonical_directions(values.ndim):
        ctr, plus, minus = _triple_slices(values.shape, e)
        ok = valid[ctr] & valid[plus] & valid[minus]
        if not ok.any():
            continue
        with np.errstate(invalid="ignore"):
            defect = lp[plus] - 2.0 * lp[ctr] + lp[minus]
        defect = np.where(ok, defect, -np.inf)
        concave_scale = max(concave_scale, float(np.max(np.where(ok, -defect, 0.0))))
        local = float(np.max(defect))
        if local > worst:
            worst = local
            flat = int(np.argmax(defect))
            base = np.unravel_index(flat, defect.shape)
            point = tuple(b + abs(c) for b, c in zip(base, e))
            witness = (point, e)

    if values.ndim >= 2 and pair_samples > 0:
        rng = np.random.default_rng(seed)
        flat_valid = np.flatnonzero(valid.reshape(-1))
        if len(flat_valid) >= 2:
            collected = 0
            attempts = 0
            while collected < pair_samples and attempts < 40:
                attempts += 1
                draw = min(4 * pair_samples, 2_000_000)
                pi = flat_valid[rng.integers(0, len(flat_valid), draw)]
                qi = flat_valid[rng.integers(0, len(flat_valid), draw)]
                p = np.array(np.unravel_index(pi, values.shape)).T
                q = np.array(np.unravel_index(qi, values.shape)).T
                diff = q - p
                even = np.all(diff % 2 == 0, axis=1) & np.any(diff != 0, axis=1)
                p, q, diff = p[even], q[even], diff[even]
                if len(p) == 0:
                    continue
                mid = p + diff // 2
                mid_flat = np.ravel_multi_index(tuple(mid.T), values.shape)
                good = valid.reshape(-1)[mid_flat]
                p, q, mid, diff = p[good], q[good], mid[good], diff[good]
                if len(p) == 0:
                    continue
                take = min(len(p), pair_samples - collected)
                p, q, mid, diff = p[:take], q[:take], mid[:take], diff[:take]
                collected += take
                lp_flat = lp.reshape(-1)
                defect = (
                    lp_flat[np.ravel_multi_index(tuple(p.T), values.shape)]
                    + lp_flat[np.ravel_multi_index(tuple(q.T), values.shape)]
                    - 2.0 * lp_flat[np.ravel_multi_index(tuple(mid.T), values.shape)]
                )
                cheb = np.max(np.abs(diff), axis=1)
                scaled = defect / np.maximum(1.0, (cheb / 2.0) ** 2)
                j = int(np.argmax(scaled))
                if scaled[j] > worst:
                    worst = float(scaled[j])
                    witness = (tuple(p[j]), tuple(q[j]))

    if tol == "auto":
        tolerance = max(10.0 * h * h * concave_scale, 1e-12)
    else:
        tolerance = float(tol)
    if worst == -np.inf:
        worst = 0.0
        witness = None
    return LogConcavityReport(
        passed=worst <= tolerance,
        worst_violation=worst,
        witness=witness,
        tolerance=tolerance,
        excluded_fraction=excluded,
    )


def is_log_concave(
    f,
    tol: Union[str, float] = "auto",
    *,
    region: np.ndarray | None = None,
    spacing: float | None = None,
    pair_samples: int = PAIR_SAMPLES,
    seed: int = 0,
) -> LogConcavityReport:
    """Midpoint log-concavity test for a sampled nonnegative function.

    Accepts a GridFunction (spacing and support mask taken from it) or a
    plain shaped array together with a lattice spacing.
    """
    if isinstance(f, GridFunction):
        values = f.shaped
        h = max(f.grid.spacing)
        reg = np.ones(values.shape, dtype=bool)
        if f.mask is not None:
            reg = f.mask.reshape(values.shape)
    else:
        values = np.asarray(f, dtype=float)
        h = 1.0 if spacing is None else float(spacing)
        reg = np.ones(values.shape, dtype=bool)
    if region is not None:
        reg = reg & np.asarray(region, dtype=bool).reshape(values.shape)
    if spacing is not None:
        h = float(spacing)
    return _core_check(values, reg, tol, h, pair_samples, seed)


def is_jointly_log_concave(
    k,
    tol: Union[str, float] = "auto",
    *,
    pair_samples: int = PAIR_SAMPLES,
    seed: int = 0,
) -> LogConcavityReport:
    """Test (x, z) -> K[x][z] e^{-|z|^2/2} on the product lattice.

    Restricted to masked x masked points; strict positivity there is a
    precondition and its failure is reported as a violation with witness.
    """
    grid = k.grid
    sq = np.sum(grid.points**2, axis=-1)
    weighted = k.matrix * np.exp(-0.5 * sq)[None, :]
    chi = k.mask if k.mask is not None else np.ones(grid.total, dtype=bool)
    valid = np.outer(chi, chi)
    if np.any(weighted[valid] <= 0.0):
        bad = np.argwhere((weighted <= 0.0) & valid)[0]
        return LogConcavityReport(
            passed=False,
            worst_violation=np.inf,
            witness=(int(bad[0]), int(bad[1])),
            tolerance=0.0,
            excluded_fraction=0.0,
        )
    shape = grid.shape + grid.shape
    return _core_check(
        weighted.reshape(shape),
        valid.reshape(shape),
        tol,
        max(grid.spacing),
        pair_samples,
        seed,
    )


@dataclass
class PrekopaResult:
    marginal: np.ndarray
    joint_report: LogConcavityReport
    marginal_report: LogConcavityReport


def prekopa_marginal(
    f2d: np.ndarray,
    weights_y: np.ndarray,
    *,
    spacing: float = 1.0,
    tol: Union[str, float] = "auto",
    pair_samples: int = PAIR_SAMPLES,
    seed: int = 0,
) -> PrekopaResult:
    """Marginalize a jointly log-concave array over its second axis.

    The joint input is tested first; the marginal must then pass at ten
    times the joint tolerance (Prekopa's theorem at desk scale). A failing
    joint test is reported but the marginal is still computed.
    """
    f2d = np.asarray(f2d, dtype=float)
    if f2d.ndim != 2:
        raise ValueError("expected a 2D array (x index, y index)")
    if np.any(f2d < 0.0):
        raise ValueError("marginalization requires nonnegative values")
    weights_y = np.asarray(weights_y).reshape(-1)
    if weights_y.size != f2d.shape[1]:
        raise ValueError("weight count does not match the y axis")
    joint = _core_check(
        f2d, np.ones(f2d.shape, dtype=bool), tol, spacing, pair_samples, seed
    )
    marginal = f2d @ weights_y
    marg = _core_check(
        marginal,
        np.ones(marginal.shape, dtype=bool),
        10.0 * joint.tolerance,
        spacing,
        0,
        seed,
    )
    return PrekopaResult(marginal=marginal, joint_report=joint, marginal_report=marg)


def eigenfunction_logconcavity(
    dec: SpectralDecomposition, tol: Union[str, float] = "auto"
) -> LogConcavityReport:
    """Log-concavity of the first eigenfunction, two cells inside the domain."""
    phi1 = dec.eigenfunctions[0]
    if np.any(phi1[dec.mask] <= 0.0):
        raise ValueError("first eigenfunction is not positive on the interior")
    region = deep_interior(dec.mask, dec.grid, cells=2)
    return _core_check(
        phi1.reshape(dec.grid.shape),
        region.reshape(dec.grid.shape),
        tol,
        max(dec.grid.spacing),
        0,
        0,
    )


def kernel_limit_defect(k_provider, dec: SpectralDecomposition, t: float) -> float:
    """Max over masked pairs of |e^{lambda_1 t} K(t)[i][j] - phi_1(x_i) phi_1(x_j)|."""
    if not t > 0.0:
        raise ValueError(f"time must be positive, got t={t}")
    k = k_provider(t) if callable(k_provider) else k_provider
    phi1 = dec.eigenfunctions[0]
    rank1 = np.outer(phi1, phi1)
    valid = np.outer(dec.mask, dec.mask)
    diff = np.exp(dec.eigenvalues[0] * t) * k.matrix - rank1
    return float(np.max(np.abs(diff[valid])))
