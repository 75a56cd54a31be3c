"""Cross-layer checks that tie modules together beyond their unit suites."""

import json

import numpy as np
import pytest

from multilane.equilibrium import (
    equilibrium_manifold,
    flux_curve_from_manifold,
    two_lane_flux_derivatives,
)
from multilane.model import ThetaMode, chain_model, two_lane_model, validate_model
from multilane.particle import empirical_density, sample_local_gibbs, simulate
from multilane.equilibrium import manifold_point
from multilane.phase import second_derivative_values


def test_curvature_peak_is_global_max():
    # The curvature-peak location from the closed forms dominates G'' on the
    # whole density interval whenever it lies inside it.
    rng = np.random.default_rng(31)
    rho = np.linspace(1e-9, 2 - 1e-9, 20001)
    for _ in range(12):
        d = float(rng.uniform(0.5, 3.0))
        r = float(np.exp(rng.uniform(0.2, np.log(60))))
        vals = second_derivative_values(d, r)
        rho0 = vals["rho_tilde0"]
        _, gpp = two_lane_flux_derivatives(d, 1 - d, r, rho)
        if rho0 < 2:
            assert gpp.max() <= vals["Gpp_peak"] + 1e-9
        else:
            # peak beyond the interval: curvature increasing up to the edge
            assert gpp.argmax() > 0.95 * rho.size


def test_flux_csv_records_kinks_for_multiclass_model(tmp_path):
    from multilane.cli import main
    from multilane.io import read_csv

    # two classes: one-way bridge between a fast and a slow lane pair
    doc = {"n": 3, "d": [0.9, 0.4, 0.7], "l": [0.0, 0.1, 0.0],
           "q": [[0, 1.0, 0], [2.0, 0, 0.5], [0, 0, 0]]}
    model = tmp_path / "m3.json"
    model.write_text(json.dumps(doc))
    out = tmp_path / "flux3.csv"
    assert main(["flux", "--model", str(model), "--grid", "301", "--out", str(out)]) == 0
    _, cols = read_csv(out)
    jump = np.abs(cols["Gprime_left"] - cols["Gprime_right"])
    spec = validate_model(doc)
    M = equilibrium_manifold(spec)
    boundary = float(M.decomposition.N_alpha[0])
    at_boundary = np.isclose(cols["rho"], boundary)
    assert at_boundary.any()
    assert jump[at_boundary].max() > 1e-3
    assert jump[~at_boundary].max() < 1e-9


def test_padded_reservoirs_hold_stationary_profile():
    # Constant-density window with matching frozen pads: the interior stays
    # at the manifold marginals (reservoirs neither drain nor flood it).
    spec = two_lane_model(0.8, 0.2, r=5.0)
    M = equilibrium_manifold(spec)
    rho = 1.1
    N = 50
    cfg = sample_local_gibbs(M, rho, N, (0, 3999), seed=5,
                             boundary="padded", boundary_densities=(rho, rho))
    out = simulate(spec, cfg, theta=float(N), T=0.5, N=N, seed=6)
    fields = empirical_density(out[-1][1], N, bin_width=500)
    marg = manifold_point(M, rho)
    for i, fld in enumerate(fields["lanes"]):
        sd = np.sqrt(marg[i] * (1 - marg[i]) / 500)
        # interior bins only (first/last touch the propagation margin)
        inner = fld.values[1:-1]
        assert np.all(np.abs(inner - marg[i]) < 5 * sd)


def test_weak_coupling_schedule_runs():
    # power schedule above the admissibility threshold: theta(N) = N^0.8 << N
    spec = validate_model({
        "n": 3, "d": [1.0, 1.0, 1.0], "l": [0.0, 0.0, 0.0],
        "q": [[0, 1, 0], [1, 0, 1], [0, 1, 0]],
        "theta": {"mode": "power", "a": 0.8},
    })
    from multilane.model import coupling_exponents, theta_schedule

    m_star = coupling_exponents(spec).m_star
    assert m_star == 2
    theta = theta_schedule(100, spec.theta_mode, m_star)
    assert theta == int(np.ceil(100**0.8))
    M = equilibrium_manifold(spec)
    cfg = sample_local_gibbs(M, 1.5, 100, (0, 499), seed=7)
    before = cfg.particles
    out = simulate(spec, cfg, theta=float(theta), T=0.2, N=100, seed=8)
    assert out[-1][1].particles == before


def test_compare_pipeline_with_exact_layer(tmp_path):
    from multilane.cli import main

    doc = {"n": 2, "d": [0.5, 0.5], "l": [0, 0],
           "q": [[0, 0.5], [0.5, 0]], "theta": {"mode": "linear"}}
    model = tmp_path / "m.json"
    model.write_text(json.dumps(doc))
    rep = tmp_path / "rep.json"
    rc = main(["compare", "--layers", "pde,exact", "--model", str(model),
               "--profile", "riemann:1.5:0.5", "--T", "0.5", "--dx", "0.01",
               "--window=-1:1", "--out", str(rep)])
    assert rc == 0
    payload = json.loads(rep.read_text())
    pair = payload["pairs"][0]
    assert {pair["a"], pair["b"]} == {"pde", "exact"}
    assert pair["l1"] < 0.02
