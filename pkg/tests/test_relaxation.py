"""Stiff-source solver: conservation, limits, monotonicity, dissipation."""

import numpy as np
import pytest

from multilane.equilibrium import (
    equilibrium_manifold,
    flux_curve_from_manifold,
    manifold_point,
)
from multilane.model import two_lane_model, validate_model
from multilane.pde import DensityField, cauchy_solve, l1_distance, riemann_field
from multilane.relaxation import (
    entropy_residual,
    lane_profile_from_total,
    quad_godunov_flux,
    relax_solve,
    source_term,
)


def sym_model():
    return two_lane_model(0.6, 0.4, r=1.0)


def asym_model():
    return two_lane_model(0.8, 0.2, r=5.0)


def test_source_vanishes_on_manifold():
    spec = asym_model()
    M = equilibrium_manifold(spec)
    for rho in (0.3, 1.0, 1.7):
        c = source_term(spec, manifold_point(M, rho))
        assert np.abs(c).max() < 1e-12


def test_source_two_lane_example():
    spec = validate_model({"n": 2, "d": [1, 1], "l": [0, 0],
                           "q": [[0, 1.0], [1.0, 0]]})
    c = source_term(spec, np.array([1.0, 0.0]))
    np.testing.assert_allclose(c, [-1.0, 1.0])


def test_source_trivial_states():
    spec = asym_model()
    assert np.abs(source_term(spec, np.zeros(2))).max() == 0.0
    assert np.abs(source_term(spec, np.ones(2))).max() == 0.0


def test_source_sums_to_zero_random():
    rng = np.random.default_rng(4)
    spec = asym_model()
    rho = rng.uniform(0, 1, size=(2, 64))
    c = source_term(spec, rho)
    assert np.abs(c.sum(axis=0)).max() < 1e-15


def test_quad_godunov_consistency():
    for g in (1.0, -0.7, 0.0):
        for u in (0.0, 0.3, 0.5, 1.0):
            got = quad_godunov_flux(np.array([u]), np.array([u]), g)[0]
            assert got == pytest.approx(g * u * (1 - u), abs=1e-15)
    # sonic rarefaction through the crest picks the crest value
    assert quad_godunov_flux(np.array([0.9]), np.array([0.1]), 1.0)[0] == 0.25


def test_constant_manifold_state_is_stationary():
    spec = asym_model()
    M = equilibrium_manifold(spec)
    point = manifold_point(M, 1.2)
    rho0 = np.repeat(point[:, None], 50, axis=1)
    traj = relax_solve(M, 0.05, rho0, x0=-1.0, dx=0.04, T=0.5)
    assert np.abs(traj.final.rho - rho0).max() < 1e-12


def test_source_step_conserves_total_exactly():
    rng = np.random.default_rng(8)
    spec = asym_model()
    M = equilibrium_manifold(spec)
    rho0 = rng.uniform(0, 1, size=(2, 80))
    traj = relax_solve(M, 0.01, rho0, x0=-1.0, dx=0.025, T=0.3)
    assert traj.conservation_max <= 1e-13
    assert traj.clipped_cells == 0


def test_relaxation_and_equilibrium_limits_shrink():
    # Riemann total datum; both distances shrink as epsilon drops.
    spec = sym_model()
    M = equilibrium_manifold(spec)
    curve = flux_curve_from_manifold(M, npts=1001)
    x0, x1, dx = -1.5, 1.5, 1 / 50
    total0 = riemann_field(1.5, 0.5, x0, x1, dx)
    rho0 = lane_profile_from_total(M, total0.values)
    T = 0.5
    ref = cauchy_solve(curve, total0, T=T)
    rel_err = []
    eq_err = []
    for eps in (0.1, 0.01):
        traj = relax_solve(M, eps, rho0, x0=x0, dx=dx, T=T)
        st = traj.final
        total_field = DensityField(x0=x0, dx=dx, t=T, values=st.total)
        rel_err.append(l1_distance(total_field, ref, window=(-1.2, 1.2)))
        lane_eq = lane_profile_from_total(M, st.total)
        eq_err.append(float(dx * np.abs(st.rho - lane_eq).sum()))
    assert rel_err[1] < rel_err[0]
    assert eq_err[1] < eq_err[0]


def test_ordered_data_stay_ordered():
    rng = np.random.default_rng(12)
    spec = asym_model()
    M = equilibrium_manifold(spec)
    for _ in range(3):
        lo = rng.uniform(0, 0.8, size=(2, 40))
        hi = np.clip(lo + rng.uniform(0, 0.2, size=(2, 40)), 0, 1)
        ta = relax_solve(M, 0.05, lo, x0=0.0, dx=0.05, T=0.4)
        tb = relax_solve(M, 0.05, hi, x0=0.0, dx=0.05, T=0.4)
        assert np.all(tb.final.rho - ta.final.rho >= -1e-11)


def test_l1_growth_within_lipschitz_bound():
    rng = np.random.default_rng(13)
    spec = asym_model()
    M = equilibrium_manifold(spec)
    max_rate = float((spec.q + spec.q.T).sum(axis=1).max())
    bound = 2.0 * max_rate
    a = rng.uniform(0, 1, size=(2, 60))
    b = np.clip(a + rng.uniform(-0.3, 0.3, size=(2, 60)), 0, 1)
    T = 0.5
    dx = 0.05
    ta = relax_solve(M, 1.0, a, x0=0.0, dx=dx, T=T)
    tb = relax_solve(M, 1.0, b, x0=0.0, dx=dx, T=T)
    d0 = dx * np.abs(a - b).sum()
    dT = dx * np.abs(ta.final.rho - tb.final.rho).sum()
    measured_C = np.log(max(dT, 1e-300) / d0) / T
    assert measured_C <= bound


def test_total_variation_bound():
    spec = sym_model()
    M = equilibrium_manifold(spec)
    x0, x1, dx = -1.5, 1.5, 1 / 40
    total0 = riemann_field(1.6, 0.3, x0, x1, dx)
    rho0 = lane_profile_from_total(M, total0.values)
    T = 0.5
    max_rate = float((spec.q + spec.q.T).sum(axis=1).max())
    traj = relax_solve(M, 0.05, rho0, x0=x0, dx=dx, T=T)
    tv0 = np.abs(np.diff(total0.values)).sum()
    tvT = np.abs(np.diff(traj.final.total)).sum()
    assert tvT <= np.exp(2 * max_rate * T) * tv0 + 1e-9


def test_entropy_residual_zero_on_manifold_state():
    spec = asym_model()
    M = equilibrium_manifold(spec)
    point = manifold_point(M, 0.9)
    rho0 = np.repeat(point[:, None], 32, axis=1)
    resid, _ = entropy_residual(M, 0.05, rho0, x0=0.0, dx=0.05, T=0.2, c=1.4)
    assert np.abs(resid).max() < 1e-12


def test_entropy_residual_dissipative_and_shock_negative():
    spec = sym_model()
    M = equilibrium_manifold(spec)
    x0, x1, dx = -1.0, 1.0, 1 / 64
    # increasing total datum: a shock for the concave limit flux
    total0 = riemann_field(0.4, 1.6, x0, x1, dx)
    rho0 = lane_profile_from_total(M, total0.values)
    resid, final = entropy_residual(M, 0.02, rho0, x0=x0, dx=dx, T=0.4, c=1.0)
    assert resid.sum() <= 1e-10
    mid = np.abs(final.x) < 0.15
    assert resid[mid].sum() < -1e-4


def test_entropy_residual_smooth_region_refines():
    spec = sym_model()
    M = equilibrium_manifold(spec)
    norms = []
    for dx in (1 / 32, 1 / 64):
        x = np.arange(-1.0, 1.0, dx) + dx / 2
        total0 = 1.0 + 0.3 * np.sin(np.pi * x / 2)
        rho0 = lane_profile_from_total(M, total0)
        resid, _ = entropy_residual(M, 0.05, rho0, x0=-1.0, dx=dx, T=0.2, c=0.8)
        norms.append(np.abs(resid).sum())
    assert norms[1] < norms[0]
