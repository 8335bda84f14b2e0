import numpy as np
import pytest

import micropolar as mp
from micropolar.analysis import fit_lemma_constants
from micropolar.kmbounds import (
    check_domination,
    generic_constant,
    holder_constant,
    k0_curves,
    km_recursion,
    local_horizon,
    semigroup_constant,
    _matrix_spectral_radius_curve,
)
from micropolar.nonlinear import generators

ZERO = mp.ForcingSpec.zero()


@pytest.fixture(scope="module")
def constants(cfg2, params):
    grid = mp.GridSpec(dim=2, n=16)
    return fit_lemma_constants(cfg2, grid, params, ensemble=8, seed=11)


def _eig_mins(grid, params):
    return tuple(op.min_positive_eigenvalue() for op in generators(grid, params))


def _small_data(grid, seed=7, amp=0.05):
    rng = np.random.default_rng(seed)
    u0 = mp.leray_project(mp.random_field(grid, grid.dim, rng, amplitude=amp))
    om0 = mp.random_field(grid, 1 if grid.dim == 2 else 3, rng, amplitude=amp)
    th0 = mp.random_field(grid, 1, rng, sigma=1.0, amplitude=amp)
    return u0, om0, th0


def test_semigroup_constant_values():
    assert semigroup_constant(0.0, 0.5, 1.0) == 1.0
    # (a/e)^a (lam_min/(lam_min-lam))^a
    assert semigroup_constant(0.5, 0.5, 1.0) == pytest.approx(
        (0.5 / np.e) ** 0.5 * 2 ** 0.5)
    with pytest.raises(ValueError):
        semigroup_constant(0.5, 1.5, 1.0)


def test_holder_constant_monotone():
    assert holder_constant(1.0) == pytest.approx(1.0, rel=1e-6)
    assert holder_constant(0.5) > 1.0 or holder_constant(0.5) <= 1.0  # finite
    assert np.isfinite(holder_constant(0.25))


def test_k0_curves_start_at_zero(grid2d, params, cfg2):
    u0, om0, th0 = _small_data(grid2d)
    times = np.linspace(0, 0.5, 33)
    k0 = k0_curves(u0, om0, th0, cfg2, params, times)
    for curve in k0.values():
        assert curve[0] == 0.0
        assert np.all(np.diff(curve) >= -1e-15)  # running sup is monotone


def test_km_zero_data(grid2d, params, cfg2, constants):
    z2 = mp.SpectralField.zero(grid2d, 2)
    z1 = mp.SpectralField.zero(grid2d, 1)
    times = np.linspace(0, 0.5, 17)
    k0 = k0_curves(z2, z1, z1, cfg2, params, times)
    tracker = km_recursion(k0, cfg2, params, constants, times,
                           eig_mins=_eig_mins(grid2d, params))
    assert all(np.all(c == 0) for c in tracker.final.values())


def test_km_monotone_and_convergent(grid2d, params, cfg2, constants):
    u0, om0, th0 = _small_data(grid2d)
    times = np.linspace(0, 0.4, 33)
    k0 = k0_curves(u0, om0, th0, cfg2, params, times)
    tracker = km_recursion(k0, cfg2, params, constants, times,
                           eig_mins=_eig_mins(grid2d, params))
    assert tracker.converged
    for m in range(len(tracker.history) - 1):
        for key in tracker.history[0]:
            assert np.all(tracker.history[m + 1][key] >= tracker.history[m][key] - 1e-12)


def test_km_domination_with_inflated_constants(grid2d, params, cfg2, constants):
    u0, om0, th0 = _small_data(grid2d)
    pic = mp.PicardConfig(horizon=0.4, nodes_per_unit=64, tol=1e-10, m_max=20)
    traj, rep = mp.picard_solve(u0, om0, th0, cfg2, params, ZERO, ZERO, pic,
                                record_norms=True)
    assert rep.converged
    k0 = k0_curves(u0, om0, th0, cfg2, params, traj.times)
    tracker = km_recursion(k0, cfg2, params, constants.inflated(1.1), traj.times,
                           eig_mins=_eig_mins(grid2d, params),
                           m_max=len(rep.iterate_norms) + 2)
    excess = check_domination(tracker, rep.iterate_norms)
    assert max(excess.values()) <= 0.0


def test_local_horizon_zero_data(grid2d, params, cfg2, constants):
    z2 = mp.SpectralField.zero(grid2d, 2)
    z1 = mp.SpectralField.zero(grid2d, 1)
    times = np.linspace(0, 0.7, 29)
    res = local_horizon(z2, z1, z1, cfg2, params, constants, times)
    assert res.tstar == pytest.approx(0.7)


def test_local_horizon_monotone_in_data(grid2d, params, cfg2, constants):
    u0, om0, th0 = _small_data(grid2d, amp=0.02)
    times = np.linspace(0, 0.5, 65)
    base = local_horizon(u0, om0, th0, cfg2, params, constants, times)
    assert base.tstar is not None
    previous = base.tstar
    for scale in (2.0, 4.0, 8.0):
        res = local_horizon(scale * u0, scale * om0, scale * th0, cfg2, params,
                            constants, times)
        assert (res.tstar or 0.0) <= previous + 1e-12
        previous = res.tstar if res.tstar is not None else 0.0


def test_spectral_radius_matches_eigensolve(cfg2):
    times = np.array([0.0, 0.1, 0.3])
    k0max = np.array([0.0, 0.2, 0.5])
    cq, cl = 0.8, 0.6
    rho = _matrix_spectral_radius_curve(k0max, cfg2, cq, cl, times)
    e_ab = 1 + cfg2.alpha0 - cfg2.beta0 - cfg2.alpha2 - cfg2.delta2
    e_b2 = 1 - cfg2.beta2
    for j, t in enumerate(times):
        k0 = cq * k0max[j]
        ta = cl * (t ** e_ab if t > 0 else 0.0)
        tb = cl * (t ** e_b2 if t > 0 else 0.0)
        mat = np.array([[k0, cl, cl], [k0 + ta, k0 + tb, cl], [k0, k0, k0]])
        oracle = np.max(np.abs(np.linalg.eigvals(mat)))
        assert rho[j] == pytest.approx(oracle, rel=1e-10, abs=1e-12)
    # k0(0) = 0 with positive t-powers: the matrix is nilpotent, radius 0
    assert rho[0] == pytest.approx(0.0, abs=1e-10)


def test_equality_branch_uses_matrix(params, constants):
    grid = mp.GridSpec(dim=2, n=16)
    boundary = mp.ExponentConfig(p=2, q=2, r=1.2, alpha0=0.75, beta0=0.25,
                                 gamma0=0.25)
    sel = mp.select_intermediate(boundary)
    assert sel.feasible
    u0, om0, th0 = _small_data(grid)
    times = np.linspace(0, 0.3, 25)
    consts = fit_lemma_constants(sel.config, grid, params, ensemble=4, seed=3)
    res = local_horizon(u0, om0, th0, sel.config, params, consts, times)
    assert res.branch == "equality"
    assert "spectral_radius" in res.factors


def test_generic_constant_positive(grid2d, params, cfg2, constants):
    cg = generic_constant(cfg2, params, constants,
                          eig_mins=_eig_mins(grid2d, params))
    assert cg > 0 and np.isfinite(cg)


def test_local_horizon_degenerate_report(grid2d, params, cfg2, constants):
    u0, om0, th0 = _small_data(grid2d, amp=10.0)
    times = np.linspace(0, 0.5, 33)
    res = local_horizon(u0, om0, th0, cfg2, params, constants, times)
    assert res.tstar is None
    assert res.branch in ("strict", "equality")


def test_weighted_distance_from_free_evolution_dominated(grid2d, params, cfg2,
                                                         constants):
    """Shape check: t^(a - a0) || y(t) - free(t) || stays below a stable
    multiple of the free-evolution sup curve K0."""
    u0, om0, th0 = _small_data(grid2d, amp=0.05)
    pic = mp.PicardConfig(horizon=0.4, nodes_per_unit=64, tol=1e-10, m_max=20)
    traj, rep = mp.picard_solve(u0, om0, th0, cfg2, params, ZERO, ZERO, pic)
    assert rep.converged
    from micropolar.solver import WeightedNorms
    norms = WeightedNorms(cfg2, grid2d, params)
    k0 = k0_curves(u0, om0, th0, cfg2, params, traj.times)
    k0max = np.max(np.stack(list(k0.values())), axis=0)
    for tag, nodes, free in (("u", traj.u, traj.free_u),
                             ("om", traj.om, traj.free_om),
                             ("th", traj.th, traj.free_th)):
        for exp in norms.exps[tag]:
            diff = [nodes[j] - free[j] for j in range(traj.node_count)]
            curve = norms.weighted_curve(tag, diff, traj.times, exp)
            with np.errstate(invalid="ignore"):
                ratio = np.where(k0max > 0, curve / np.maximum(k0max, 1e-300), 0.0)
            assert np.all(np.isfinite(ratio))
            assert float(np.max(ratio)) < 10.0  # stable multiple for small data
