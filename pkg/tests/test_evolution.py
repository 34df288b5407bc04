"""Kernel-driven Dirichlet evolution and log-concavity preservation."""
import numpy as np
import pytest

from oulab.geometry import Interval, mask as domain_mask
from oulab.grid import GridFunction, build_grid, gaussian_weights
from oulab.mehler import whole_space_evolve
from oulab import evolution, spectral

DOM = Interval(-1.0, 1.0)


def _setup(n=401, modes=40):
    g = build_grid(1, -1.0, 1.0, n)
    dec = spectral.solve_domain(DOM, g, modes)
    phi1 = GridFunction(g, dec.eigenfunctions[0].copy(), mask=dec.mask)
    return g, dec, phi1


def test_phi1_decays_exactly():
    g, dec, phi1 = _setup()
    res = evolution.evolve_dirichlet(DOM, g, phi1, [0.3, 0.7])
    for t, state in zip(res.times, res.states):
        expected = np.exp(-dec.eigenvalues[0] * t) * phi1.values
        assert np.max(np.abs(state.values - expected)) / np.max(expected) < 1e-6


def test_zero_datum_stays_zero():
    g, _, _ = _setup(101, 10)
    chi = domain_mask(DOM, g)
    res = evolution.evolve_dirichlet(DOM, g, GridFunction(g, np.zeros(g.total), mask=chi), [0.5])
    assert np.all(res.states[0].values == 0.0)


def test_t_zero_is_identity():
    g, _, phi1 = _setup(101, 10)
    res = evolution.evolve_dirichlet(DOM, g, phi1, [0.0, 0.5])
    np.testing.assert_array_equal(res.states[0].values, phi1.values)


def test_support_outside_mask_rejected():
    g = build_grid(1, -1.0, 1.0, 101)
    bad = GridFunction(g, np.ones(g.total))  # nonzero at boundary points
    with pytest.raises(ValueError, match="support"):
        evolution.evolve_dirichlet(DOM, g, bad, [0.5])


def test_times_must_ascend():
    g, _, phi1 = _setup(101, 10)
    with pytest.raises(ValueError):
        evolution.evolve_dirichlet(DOM, g, phi1, [0.5, 0.2])
    with pytest.raises(ValueError):
        evolution.evolve_dirichlet(DOM, g, phi1, [-0.5])


def test_unknown_method():
    g, _, phi1 = _setup(101, 10)
    with pytest.raises(ValueError):
        evolution.evolve_dirichlet(DOM, g, phi1, [0.5], method="euler")


def test_semigroup_consistency():
    g, dec, phi1 = _setup()
    fam = dict(evolution.builtin_family(DOM, g))
    u0 = fam["gaussian_narrow"]
    once = evolution.evolve_dirichlet(DOM, g, u0, [0.4]).states[0]
    twice = evolution.evolve_dirichlet(DOM, g, once, [0.4]).states[0]
    direct = evolution.evolve_dirichlet(DOM, g, u0, [0.8]).states[0]
    inner = spectral.deep_interior(dec.mask, g, 2)
    rel = np.max(np.abs(twice.values[inner] - direct.values[inner])) / np.max(
        np.abs(direct.values[inner])
    )
    assert rel < 5e-3


def test_positivity_and_whole_space_domination():
    g, _, _ = _setup()
    fam = dict(evolution.builtin_family(DOM, g))
    u0 = fam["cone"]
    out = evolution.evolve_dirichlet(DOM, g, u0, [0.3]).states[0]
    assert np.all(out.values >= 0.0)
    free = whole_space_evolve(GridFunction(g, u0.values.copy()), 0.3)
    assert np.max(out.values - free.values) <= 1e-8


def test_energy_decay():
    g, dec, phi1 = _setup()
    w = gaussian_weights(g)
    fam = dict(evolution.builtin_family(DOM, g))
    u0 = fam["gaussian_wide"]
    res = evolution.evolve_dirichlet(DOM, g, u0, [0.2, 0.5, 1.0])
    norms = [np.sqrt(np.sum(u0.values**2 * w))]
    norms += [np.sqrt(np.sum(s.values**2 * w)) for s in res.states]
    assert all(b <= a for a, b in zip(norms, norms[1:]))
    # lower bound from the phi_1 component
    c1 = np.sum(u0.values * dec.eigenfunctions[0] * w)
    assert norms[-1] >= np.exp(-dec.eigenvalues[0] * 1.0) * abs(c1) - 1e-12


def test_trotter_backend_agrees():
    g, _, _ = _setup()
    fam = dict(evolution.builtin_family(DOM, g))
    u0 = fam["gaussian_wide"]
    u_s = evolution.evolve_dirichlet(DOM, g, u0, [0.5], method="spectral").states[0]
    u_t = evolution.evolve_dirichlet(DOM, g, u0, [0.5], method="trotter", l_max=13).states[0]
    rel = np.max(np.abs(u_s.values - u_t.values)) / np.max(u_s.values)
    assert rel < 0.02


def test_builtin_family_all_log_concave():
    from oulab import analysis

    g = build_grid(1, -1.0, 1.0, 401)
    fam = evolution.builtin_family(DOM, g)
    assert len(fam) >= 6
    for name, u0 in fam:
        assert analysis.is_log_concave(u0).passed, name


def test_preservation_suite_passes():
    g = build_grid(1, -1.0, 1.0, 401)
    summary = evolution.preservation_suite(
        DOM, g, evolution.builtin_family(DOM, g), [0.05, 0.2, 1.0]
    )
    assert summary.passed
    assert len(summary.entries) == 18
    assert not summary.failures


def test_preservation_suite_skips_bad_datum():
    g = build_grid(1, -1.0, 1.0, 201)
    chi = domain_mask(DOM, g)
    x = g.points[:, 0]
    bimodal = (np.exp(-40 * (x - 0.5) ** 2) + np.exp(-40 * (x + 0.5) ** 2)) * chi
    fam = [("bimodal", GridFunction(g, bimodal, mask=chi))]
    summary = evolution.preservation_suite(DOM, g, fam, [0.2])
    assert len(summary.entries) == 1
    assert summary.entries[0].skipped
    assert summary.passed  # skipped entries do not count as failures


def test_short_time_identity_zero_time():
    g = build_grid(1, -1.0, 1.0, 201)
    chi = domain_mask(DOM, g)
    x = g.points[:, 0]
    vals = np.exp(-0.5 * (x / 0.2) ** 2)
    vals[(np.abs(x) > 0.8) | ~chi] = 0.0
    u0 = GridFunction(g, vals, mask=chi)
    assert evolution.short_time_identity(DOM, g, u0, 0.0) == 0.0


def test_short_time_identity_support_guard():
    g = build_grid(1, -1.0, 1.0, 201)
    chi = domain_mask(DOM, g)
    wide = np.where(chi, 1.0, 0.0)
    with pytest.raises(ValueError, match="support"):
        evolution.short_time_identity(DOM, g, GridFunction(g, wide, mask=chi), 0.01)


def test_short_time_identity_phi1_first_order():
    g, dec, phi1 = _setup(201, 10)
    h = g.spacing[0]
    # support_level 0.2 keeps the sampled support 4 cells inside the domain
    err = evolution.short_time_identity(DOM, g, phi1, 2 * h, method="spectral", support_level=0.2)
    predicted = dec.eigenvalues[0] * 2 * h * np.max(phi1.values)
    assert abs(err - predicted) / predicted < 0.3


def test_short_time_identity_halves_under_refinement():
    errs = {}
    for n in (201, 401):
        g = build_grid(1, -1.0, 1.0, n)
        chi = domain_mask(DOM, g)
        x = g.points[:, 0]
        vals = np.exp(-0.5 * (x / 0.2) ** 2)
        vals[np.abs(x) > 0.8] = 0.0
        vals[~chi] = 0.0
        u0 = GridFunction(g, vals, mask=chi)
        errs[n] = evolution.short_time_identity(DOM, g, u0, g.spacing[0])
    ratio = errs[201] / errs[401]
    assert 1.4 < ratio < 2.6  # first order in t = h, 2 +- 30%
