"""Acceptance gate: one test per release criterion, one verdict line each.

Each test prints "[criterion N] PASS|FAIL: summary" before asserting, so the
full scorecard is visible in the captured output even when a criterion is
red. Criterion 2's dyadic-convergence clause is expected red: the masked
composition converges at rate O(2^(-L/2)) (a boundary-layer effect of
discrete-time killing), so its max-entry change cannot fall below 1e-4 by
level 7 at any grid resolution; the monotonicity, domination and symmetry
clauses of the same criterion do hold and are asserted first.
"""
import numpy as np
import pytest

from oulab.geometry import AxisBox, Interval
from oulab.grid import GridFunction, build_grid, gaussian_weights, whole_space_grid
from oulab.mehler import kernels_relation_residual, mehler_gauss_matrix, mehler_lebesgue
from oulab import analysis, bm, evolution, spectral, trotter

INTERVAL = Interval(-1.0, 1.0)
SQUARE = AxisBox((-0.5, -0.5), (0.5, 0.5))


def _verdict(n: int, ok: bool, summary: str) -> None:
    print(f"[criterion {n}] {'PASS' if ok else 'FAIL'}: {summary}")
    assert ok, f"criterion {n}: {summary}"


def test_criterion_1_mehler_identities():
    xs = np.linspace(-3.0, 3.0, 21)
    worst_rel = 0.0
    for t in (0.1, 0.25, 0.5, 1.0, 2.0):
        for x in xs:
            for z in xs:
                rel = abs(kernels_relation_residual(x, z, t) / mehler_lebesgue(x, z, t))
                worst_rel = max(worst_rel, rel)
    g = whole_space_grid(1, 8.0, 1601)
    w = gaussian_weights(g)
    m = mehler_gauss_matrix(g, 0.7)
    norm_err = max(
        abs(m[int(np.argmin(np.abs(g.points[:, 0] - x)))] @ w - 1.0) for x in (-2.0, 0.0, 1.5)
    )
    m1 = mehler_gauss_matrix(g, 0.3)
    composed = (m1 * w[None, :]) @ m1
    ref = mehler_gauss_matrix(g, 0.6)
    sel = np.abs(g.points[:, 0]) <= 3.0
    ck_err = float(np.max(np.abs((composed - ref) / ref)[np.ix_(sel, sel)]))
    ok = worst_rel <= 1e-12 and norm_err <= 1e-8 and ck_err < 1e-6
    _verdict(1, ok, f"relation={worst_rel:.2e} normalization={norm_err:.2e} chapman={ck_err:.2e}")


def test_criterion_2_trotter_structure():
    g = build_grid(1, -1.0, 1.0, 401)
    bound = mehler_gauss_matrix(g, 0.5)
    max_increase = -np.inf
    max_excess = -np.inf
    symmetric = True
    prev = None
    for level in range(1, 7):
        k = trotter.trotter_kernel(INTERVAL, g, 0.5, level).matrix
        max_excess = max(max_excess, float(np.max(k - bound)))
        if prev is not None:
            max_increase = max(max_increase, float(np.max(k - prev)))
        symmetric = symmetric and np.array_equal(k, k.T)
        prev = k
    structure_ok = max_increase <= 1e-9 and max_excess <= 1e-9 and symmetric
    _, report = trotter.dyadic_converge(INTERVAL, g, 0.5, 7, 1e-4)
    ok = structure_ok and report.converged
    _verdict(
        2,
        ok,
        f"monotone_increase={max_increase:.2e} domination_excess={max_excess:.2e} "
        f"symmetric={symmetric} converged_by_7={report.converged} "
        f"final_change={report.final_change:.3e} history={[(l, round(c, 5)) for l, c in report.history]}",
    )


def test_criterion_3_cross_method_agreement():
    errs = {}
    for n in (401, 801):
        g = build_grid(1, -1.0, 1.0, n)
        level = trotter.max_usable_level(g, 0.5)
        kt = trotter.trotter_kernel(INTERVAL, g, 0.5, level)
        dec = spectral.solve_domain(INTERVAL, g, 40)
        ks = spectral.spectral_kernel(dec, 0.5)
        inner = spectral.deep_interior(dec.mask, g, cells=2)
        valid = np.outer(inner, inner)
        denom = float(np.max(np.abs(ks.matrix[valid])))
        errs[n] = float(np.max(np.abs(kt.matrix - ks.matrix)[valid])) / denom
    ok = errs[401] <= 0.02 and errs[801] <= 0.01
    _verdict(3, ok, f"interior sup rel error: n=401 {errs[401]:.4f} (<=2%), n=801 {errs[801]:.4f} (<=1%)")


def test_criterion_4_joint_log_concavity():
    results = []
    g1 = build_grid(1, -1.0, 1.0, 401)
    dec1 = spectral.solve_domain(INTERVAL, g1, 40)
    for t in (0.2, 0.5, 1.0):
        kt = trotter.trotter_kernel(INTERVAL, g1, t, trotter.max_usable_level(g1, t))
        results.append((f"interval trotter t={t}", analysis.is_jointly_log_concave(kt, seed=0)))
        ks = spectral.spectral_kernel(dec1, t)
        results.append((f"interval spectral t={t}", analysis.is_jointly_log_concave(ks, seed=0)))
    g2 = build_grid(2, (-0.5, -0.5), (0.5, 0.5), 41)
    kt2 = trotter.trotter_kernel(SQUARE, g2, 0.5, trotter.max_usable_level(g2, 0.5))
    results.append(("square trotter t=0.5", analysis.is_jointly_log_concave(kt2, seed=0)))
    dec2 = spectral.solve_domain(SQUARE, g2, 60)
    ks2 = spectral.spectral_kernel(dec2, 0.5)
    results.append(("square spectral t=0.5", analysis.is_jointly_log_concave(ks2, seed=0)))
    failures = [(name, r.worst_violation, r.tolerance) for name, r in results if not r.passed]
    _verdict(4, not failures, f"{len(results)} kernel checks, failures={failures}")


def test_criterion_5_preservation_suite():
    counts = []
    for domain, grid in (
        (INTERVAL, build_grid(1, -1.0, 1.0, 401)),
        (SQUARE, build_grid(2, (-0.5, -0.5), (0.5, 0.5), 41)),
    ):
        summary = evolution.preservation_suite(
            domain, grid, evolution.builtin_family(domain, grid), [0.05, 0.2, 1.0]
        )
        counts.append((len(summary.entries), len(summary.failures), summary.passed))
    ok = all(total == 18 and fails == 0 and passed for total, fails, passed in counts)
    _verdict(5, ok, f"(entries, failures, passed) per domain: {counts}")


def test_criterion_6_eigenfunction_log_concavity():
    dec1 = spectral.solve_domain(INTERVAL, build_grid(1, -1.0, 1.0, 801), 40)
    r1 = analysis.eigenfunction_logconcavity(dec1, tol=1e-5)
    dec2 = spectral.solve_domain(SQUARE, build_grid(2, (-0.5, -0.5), (0.5, 0.5), 61), 60)
    r2 = analysis.eigenfunction_logconcavity(dec2, tol=1e-4)
    d1 = analysis.kernel_limit_defect(spectral.spectral_kernel(dec1, 1.0), dec1, 1.0)
    d2 = analysis.kernel_limit_defect(spectral.spectral_kernel(dec1, 2.0), dec1, 2.0)
    gap = dec1.eigenvalues[1] - dec1.eigenvalues[0]
    decay_ok = d2 / d1 <= 1.5 * np.exp(-gap)
    ok = r1.passed and r2.passed and decay_ok
    _verdict(
        6,
        ok,
        f"phi1 interval={r1.passed} square={r2.passed} "
        f"defect decay {d2 / d1:.3e} <= {1.5 * np.exp(-gap):.3e}: {decay_ok}",
    )


def test_criterion_7_spectral_estimates():
    dec = spectral.solve_domain(INTERVAL, build_grid(1, -1.0, 1.0, 401), 40)
    w = gaussian_weights(dec.grid)
    gram = (dec.eigenfunctions * w[None, :]) @ dec.eigenfunctions.T
    gram_defect = float(np.max(np.abs(gram - np.eye(dec.k_modes))))
    ratios = spectral.sup_norm_ratio(dec)[:20]
    slope = float(np.polyfit(np.log(dec.eigenvalues[:20]), np.log(ratios), 1)[0])
    tails = [spectral.trace_partial_sums(dec, t) for t in (0.5, 1.0)]
    tail = max(float(s[-1] - s[-6]) for s in tails)
    ok = gram_defect <= 1e-8 and slope <= 0.05 and tail < 1e-8
    _verdict(7, ok, f"gram={gram_defect:.2e} slope={slope:.3f} tail={tail:.2e}")


def test_criterion_8_whole_space_trace_oracle():
    dec = spectral.solve_domain(Interval(-8.0, 8.0), whole_space_grid(1, 8.0, 1601), 40)
    rels = {}
    for t in (0.5, 1.0, 2.0):
        z = float(np.sum(np.exp(-t * dec.eigenvalues)))
        ref = 1.0 / -np.expm1(-t)  # (1 - e^{-t})^{-1}, computed independently
        rels[t] = abs(z - ref) / ref
    ok = all(r < 0.01 for r in rels.values())
    _verdict(8, ok, f"relative errors vs (1-e^-t)^-1: {dict((t, f'{r:.2e}') for t, r in rels.items())}")


def test_criterion_9_brunn_minkowski():
    s_grid = [0.25, 0.5, 0.75]
    interval_pair = (INTERVAL, Interval(-2.0, 2.0))
    square_pair = (SQUARE, AxisBox((-1.5, -1.5), (1.5, 1.5)))
    trace_ok = all(
        bm.bm_trace_inequality(*interval_pair, s_grid, t).passed for t in (0.5, 1.0)
    ) and bm.bm_trace_inequality(*square_pair, s_grid, 1.0).passed
    eig_ok = (
        bm.bm_eigenvalue_inequality(*interval_pair, s_grid).passed
        and bm.bm_eigenvalue_inequality(*square_pair, s_grid).passed
    )
    dec = spectral.solve_domain(INTERVAL, build_grid(1, -1.0, 1.0, 401), 40)
    curve = bm.spectral_trace_curve(dec, [3.0, 4.0, 5.0])
    lam_est = bm.eigenvalue_from_trace(curve)
    lam_rel = abs(lam_est - dec.eigenvalues[0]) / dec.eigenvalues[0]
    ok = trace_ok and eig_ok and lam_rel < 0.01
    _verdict(9, ok, f"trace={trace_ok} eigenvalue={eig_ok} lambda_from_trace rel={lam_rel:.2e}")


def test_criterion_10_order_regressions():
    r401 = spectral.residual_check(spectral.solve_domain(INTERVAL, build_grid(1, -1.0, 1.0, 401), 2), 0)
    r801 = spectral.residual_check(spectral.solve_domain(INTERVAL, build_grid(1, -1.0, 1.0, 801), 2), 0)
    residual_ratio = r401 / r801
    errs = {}
    for n in (201, 401):
        g = build_grid(1, -1.0, 1.0, n)
        from oulab.geometry import mask as domain_mask

        chi = domain_mask(INTERVAL, g)
        x = g.points[:, 0]
        vals = np.exp(-0.5 * (x / 0.2) ** 2)
        vals[(np.abs(x) > 0.8) | ~chi] = 0.0
        u0 = GridFunction(g, vals, mask=chi)
        errs[n] = evolution.short_time_identity(INTERVAL, g, u0, g.spacing[0])
    short_ratio = errs[201] / errs[401]
    ok = 2.8 <= residual_ratio <= 5.2 and 1.4 <= short_ratio <= 2.6
    _verdict(
        10,
        ok,
        f"residual halving ratio={residual_ratio:.2f} (window [2.8, 5.2]), "
        f"short-time halving ratio={short_ratio:.2f} (window [1.4, 2.6])",
    )
