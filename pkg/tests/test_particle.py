"""Event-driven simulation: exact invariants and light statistical checks."""

import numpy as np
import pytest

from multilane.equilibrium import equilibrium_manifold, manifold_point, two_lane_flux
from multilane.errors import ProfileOutOfRange, WindowTooSmall
from multilane.model import two_lane_model, validate_model
from multilane.particle import (
    CoupledRecord,
    empirical_density,
    propagation_speed,
    safe_subwindow,
    sample_coupled_gibbs,
    sample_local_gibbs,
    simulate,
    stationary_current,
)


def sym_spec():
    return two_lane_model(0.5, 0.5, r=1.0)


def test_gibbs_constant_profile_matches_marginals():
    spec = two_lane_model(0.8, 0.2, r=5.0)
    M = equilibrium_manifold(spec)
    cfg = sample_local_gibbs(M, 0.9, N=100, window=(0, 39999), seed=1)
    marg = manifold_point(M, 0.9)
    emp = cfg.occ.mean(axis=0)
    for i in range(2):
        sd = np.sqrt(marg[i] * (1 - marg[i]) / cfg.columns)
        assert abs(emp[i] - marg[i]) <= 4 * sd


def test_gibbs_empty_profile():
    M = equilibrium_manifold(sym_spec())
    cfg = sample_local_gibbs(M, 0.0, N=10, window=(0, 999), seed=2)
    assert cfg.particles == 0


def test_gibbs_riemann_profile_steps():
    M = equilibrium_manifold(sym_spec())
    prof = lambda x: np.where(x <= 0, 1.5, 0.5)
    cfg = sample_local_gibbs(M, prof, N=1000, window=(-5000, 4999), seed=3)
    left = cfg.occ[:5000].mean()
    right = cfg.occ[5000:].mean()
    assert abs(left - 0.75) < 0.02
    assert abs(right - 0.25) < 0.02


def test_gibbs_profile_out_of_range():
    M = equilibrium_manifold(sym_spec())
    with pytest.raises(ProfileOutOfRange):
        sample_local_gibbs(M, 2.5, N=10, window=(0, 9))


def test_empty_and_full_configurations_frozen():
    spec = sym_spec()
    M = equilibrium_manifold(spec)
    for rho in (0.0, 2.0):
        cfg = sample_local_gibbs(M, rho, N=10, window=(0, 199), seed=4)
        out = simulate(spec, cfg, theta=10.0, T=0.5, N=10, seed=5)
        np.testing.assert_array_equal(out[-1][1].occ, cfg.occ)


def test_single_particle_is_poisson_walker():
    spec = validate_model({"n": 1, "d": [1.0], "l": [0.0], "q": [[0.0]]})
    L, N, T = 10_000, 100, 1.0
    occ = np.zeros((L, 1), dtype=np.int8)
    start = L // 2
    occ[start, 0] = 1
    from multilane.particle import ParticleConfiguration

    cfg = ParticleConfiguration(z_min=0, occ=occ, boundary="periodic")
    disp = []
    for seed in range(24):
        out = simulate(spec, cfg, theta=0.0, T=T, N=N, seed=seed)
        pos = int(np.argmax(out[-1][1].occ[:, 0]))
        disp.append(pos - start)
    mean = np.mean(disp)
    # Poisson counter with rate N*T: mean 100, sd 10; the 24-run average has
    # sd about 2.
    assert abs(mean - N * T) < 4 * np.sqrt(N * T / len(disp))


def test_mass_conservation_periodic():
    spec = two_lane_model(0.8, 0.2, r=5.0)
    M = equilibrium_manifold(spec)
    cfg = sample_local_gibbs(M, 1.1, N=50, window=(0, 999), seed=6)
    before = cfg.particles
    out = simulate(spec, cfg, theta=50.0, T=2.0, N=50, seed=7)
    assert out[-1][1].particles == before


def test_attractiveness_ordered_pairs():
    spec = two_lane_model(0.6, 0.4, r=2.0)
    M = equilibrium_manifold(spec)
    eta, xi = sample_coupled_gibbs(M, 0.5, 1.3, N=50, window=(0, 499), seed=8)
    assert np.all(eta.occ <= xi.occ)
    rec = simulate_coupled_quick(spec, eta, xi, T=1.0, N=50, seed=9)
    assert rec.order_violations == 0
    assert rec.final_d_plus == 0
    assert np.all(rec.eta.occ <= rec.xi.occ)


def simulate_coupled_quick(spec, eta, xi, T, N, seed):
    from multilane.particle import coupled_simulate

    return coupled_simulate(spec, eta, xi, theta=float(N), T=T, N=N,
                            snapshot_times=[T / 2, T], seed=seed)


def test_discrepancies_never_increase():
    # Crossing profiles on a ring: discrepancies of both signs coalesce only.
    spec = two_lane_model(0.6, 0.4, r=2.0)
    M = equilibrium_manifold(spec)
    prof_a = lambda x: 1.2 - 0.8 * np.sin(np.pi * x / 5)
    prof_b = lambda x: 1.2 + 0.8 * np.sin(np.pi * x / 5)
    eta, xi = sample_coupled_gibbs(M, prof_a, prof_b, N=50, window=(0, 499), seed=10)
    d0p = int(np.maximum(eta.occ - xi.occ, 0).sum())
    d0m = int(np.maximum(xi.occ - eta.occ, 0).sum())
    rec = simulate_coupled_quick(spec, eta, xi, T=1.0, N=50, seed=11)
    assert rec.discrepancy_violations == 0
    assert rec.final_d_plus <= d0p
    assert rec.final_d_minus <= d0m
    assert np.all(np.diff(np.concatenate([[d0p], rec.d_plus])) <= 0)
    assert np.all(np.diff(np.concatenate([[d0m], rec.d_minus])) <= 0)
    # Particle counts are conserved, so the signed discrepancy total is too.
    assert (rec.final_d_plus - rec.final_d_minus) == (d0p - d0m)
    assert rec.coalescences == (d0p - rec.final_d_plus)


def test_empirical_density_full_and_checkerboard():
    from multilane.particle import ParticleConfiguration

    occ = np.ones((100, 2), dtype=np.int8)
    cfg = ParticleConfiguration(z_min=0, occ=occ)
    fields = empirical_density(cfg, N=10, bin_width=10)
    np.testing.assert_allclose(fields["lanes"][0].values, 1.0)
    np.testing.assert_allclose(fields["total"].values, 2.0)
    occ = np.zeros((100, 1), dtype=np.int8)
    occ[::2] = 1
    cfg = ParticleConfiguration(z_min=0, occ=occ)
    fields = empirical_density(cfg, N=10, bin_width=10)
    np.testing.assert_allclose(fields["lanes"][0].values, 0.5)


def test_empirical_density_binomial_concentration():
    spec = two_lane_model(0.8, 0.2, r=5.0)
    M = equilibrium_manifold(spec)
    cfg = sample_local_gibbs(M, 1.2, N=100, window=(0, 99_999), seed=12)
    marg = manifold_point(M, 1.2)
    fields = empirical_density(cfg, N=100, bin_width=1000)
    for i, fld in enumerate(fields["lanes"]):
        sd = np.sqrt(marg[i] * (1 - marg[i]) / 1000)
        frac_ok = np.mean(np.abs(fld.values - marg[i]) <= 4 * sd)
        assert frac_ok >= 0.99


def test_stationary_current_symmetric_point():
    spec = sym_spec()
    est = stationary_current(spec, rho=1.0, L=500, T=60.0, replicas=8, seed=13)
    assert est.stderr > 0
    assert abs(est.estimate - 0.25) <= 4 * est.stderr


def test_stationary_current_matches_closed_form():
    spec = two_lane_model(0.8, 0.2, r=5.0)
    target = two_lane_flux(0.8, 0.2, 5.0, 0.9)
    est = stationary_current(spec, rho=0.9, L=500, T=60.0, replicas=8, seed=14)
    assert abs(est.estimate - target) <= 4 * est.stderr


def test_safe_subwindow_guard():
    spec = sym_spec()
    M = equilibrium_manifold(spec)
    cfg = sample_local_gibbs(M, 1.0, N=100, window=(0, 99), seed=15,
                             boundary="padded", boundary_densities=(1.0, 1.0))
    with pytest.raises(WindowTooSmall):
        safe_subwindow(cfg, spec, T=1.0, N=100)
    assert propagation_speed(spec) == 1.0
