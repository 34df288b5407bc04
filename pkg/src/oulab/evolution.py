"""The Dirichlet flow: evolve initial data through the domain kernel.

Evolution is always by kernel application, never by time stepping. The
spectral backend is the default (exact in t once the modes are fixed); the
Trotter backend provides a fully independent cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import analysis, spectral, trotter
from .geometry import ConvexDomain, mask as domain_mask
from .grid import Grid, GridFunction, gaussian_weights


@dataclass
class EvolutionResult:
    domain: ConvexDomain
    u0: GridFunction
    times: list[float]
    states: list[GridFunction]
    provenance: str


def _kernel_provider(domain: ConvexDomain, grid: Grid, method: str, k_modes: int | None, l_max: int, tol: float):
    if method == "spectral":
        modes = k_modes or (spectral.DEFAULT_MODES_1D if grid.dim == 1 else spectral.DEFAULT_MODES_2D)
        dec = spectral.solve_domain(domain, grid, modes)
        return lambda t: spectral.spectral_kernel(dec, t)
    if method == "trotter":

        def provide(t):
            cap = min(l_max, trotter.max_usable_level(grid, t))
            return trotter.dyadic_converge(domain, grid, t, max(cap, 1), tol)[0]

        return provide
    raise ValueError(f"unknown evolution method {method!r}")


def evolve_dirichlet(
    domain: ConvexDomain,
    grid: Grid,
    u0: GridFunction,
    t_list,
    method: str = "spectral",
    k_modes: int | None = None,
    l_max: int = 10,
    converge_tol: float = 1e-4,
) -> EvolutionResult:
    """u(x_i, t) = sum_j K(t)[i][j] u0[j] w_j for each requested time."""
    chi = domain_mask(domain, grid)
    vals = u0.values
    if np.any(vals[~chi] != 0.0):
        raise ValueError("initial datum has support outside the domain mask")
    times = [float(t) for t in t_list]
    if any(t < 0.0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be nonnegative and strictly ascending")
    provider = _kernel_provider(domain, grid, method, k_modes, l_max, converge_tol)
    weights = gaussian_weights(grid)
    states = []
    for t in times:
        if t == 0.0:
            states.append(GridFunction(grid, vals.copy(), mask=chi))
            continue
        k = provider(t)
        u = k.matrix @ (vals * weights)
        u[~chi] = 0.0
        states.append(GridFunction(grid, u, mask=chi))
    return EvolutionResult(domain=domain, u0=u0, times=times, states=states, provenance=method)


@dataclass
class PreservationEntry:
    name: str
    t: float | None
    skipped: bool
    report: analysis.LogConcavityReport | None


@dataclass
class PreservationSummary:
    entries: list[PreservationEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.skipped or (e.report is not None and e.report.passed) for e in self.entries)

    @property
    def failures(self) -> list[PreservationEntry]:
        return [e for e in self.entries if not e.skipped and e.report is not None and not e.report.passed]


def preservation_suite(
    domain: ConvexDomain,
    grid: Grid,
    u0_family,
    t_list,
    method: str = "spectral",
    tol="auto",
) -> PreservationSummary:
    """Evolve every log-concave datum and re-test log-concavity at each time.

    Data failing the log-concavity precondition are skipped with an entry.
    """
    summary = PreservationSummary()
    for name, u0 in u0_family:
        pre = analysis.is_log_concave(u0, tol)
        if not pre.passed:
            summary.entries.append(PreservationEntry(name, None, True, pre))
            continue
        result = evolve_dirichlet(domain, grid, u0, t_list, method=method)
        for t, state in zip(result.times, result.states):
            rep = analysis.is_log_concave(state, tol)
            summary.entries.append(PreservationEntry(name, t, False, rep))
    return summary


def short_time_identity(
    domain: ConvexDomain,
    grid: Grid,
    u0: GridFunction,
    t_small: float,
    method: str = "trotter",
    support_level: float = 0.05,
) -> float:
    """Sup-norm drift of u(., t_small) from u0 over the inner support.

    The inner support is where |u0| reaches support_level of its peak; it
    must stay at least 4 cells from the boundary. Expected drift is
    O(t_small) + O(h^2).
    """
    t_small = float(t_small)
    if t_small < 0.0:
        raise ValueError("t_small must be nonnegative")
    chi = domain_mask(domain, grid)
    support = np.abs(u0.values) >= support_level * np.max(np.abs(u0.values))
    inner_ok = spectral.deep_interior(chi, grid, cells=4)
    if np.any(support & ~inner_ok):
        raise ValueError("initial datum support is too close to the boundary (< 4 cells)")
    if t_small == 0.0:
        return 0.0
    result = evolve_dirichlet(domain, grid, u0, [t_small], method=method)
    return float(np.max(np.abs(result.states[0].values[support] - u0.values[support])))


def builtin_family(domain: ConvexDomain, grid: Grid) -> list[tuple[str, GridFunction]]:
    """Log-concave initial data: truncated Gaussians, cones, smoothed boxes."""
    chi = domain_mask(domain, grid)
    pts = grid.points
    lo = np.array([g for g in grid.lo])
    hi = np.array([g for g in grid.hi])
    center = 0.5 * (lo + hi)
    span = 0.5 * np.min(hi - lo)
    r = np.sqrt(np.sum((pts - center) ** 2, axis=-1))
    h = max(grid.spacing)

    def masked(values: np.ndarray) -> GridFunction:
        v = values.copy()
        v[~chi] = 0.0
        return GridFunction(grid, v, mask=chi)

    family = [
        ("gaussian_wide", masked(np.exp(-0.5 * (r / (0.6 * span)) ** 2))),
        ("gaussian_narrow", masked(np.exp(-0.5 * (r / (0.25 * span)) ** 2))),
        ("gaussian_offset", masked(np.exp(-0.5 * np.sum((pts - center - 0.2 * span) ** 2, axis=-1) / (0.4 * span) ** 2))),
        ("cone", masked(np.maximum(0.0, 1.0 - r / (0.8 * span)))),
        ("cone_steep", masked(np.maximum(0.0, 1.0 - r / (0.45 * span)))),
    ]
    # indicator of a centered sub-box, linearly smoothed over one cell per axis
    ramp = np.ones(len(pts))
    for k in range(grid.dim):
        a = center[k] - 0.5 * span
        b = center[k] + 0.5 * span
        x = pts[:, k]
        ramp *= np.clip(np.minimum(x - a, b - x) / h + 1.0, 0.0, 1.0)
    family.append(("smoothed_box", masked(ramp)))
    return family
