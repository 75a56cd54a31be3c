"""Experiment harness and the ``hydro`` command line.

Every subcommand resolves its arguments into an ExperimentConfig, runs the
owning module, writes schema-tagged CSV/JSON artifacts plus a manifest, and
is deterministic given (config, seed).  The HYDRO_SEED environment variable
overrides the configured seed.  Validation failures print machine-readable
JSON diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import equilibrium as eq
from . import io as mio
from . import manylane as ml
from . import particle as pt
from . import pde
from . import phase as ph
from . import relaxation as rx
from .errors import ConfigInvalid, IoError, ModelInvalid, MultilaneError
from .model import load_model, theta_schedule, coupling_exponents


@dataclass
class ExperimentConfig:
    kind: str
    params: dict
    seed: int
    out: str
    extra_out: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        return {"kind": self.kind, "params": self.params, "seed": self.seed,
                "out": self.out, **{f"out_{k}": v for k, v in self.extra_out.items()}}


def parse_profile(text: str):
    """Profile specs: 'riemann:<left>:<right>' or 'constant:<value>'."""
    parts = text.split(":")
    if parts[0] == "riemann" and len(parts) == 3:
        a, b = float(parts[1]), float(parts[2])
        return ("riemann", a, b)
    if parts[0] == "constant" and len(parts) == 2:
        return ("constant", float(parts[1]))
    raise ConfigInvalid(f"cannot parse profile {text!r}", profile=text)


def profile_callable(spec):
    if spec[0] == "riemann":
        _, a, b = spec
        return lambda x: np.where(np.asarray(x) <= 0, a, b)
    return lambda x: np.full_like(np.asarray(x, dtype=float), spec[1])


def parse_triplet(text: str) -> np.ndarray:
    try:
        lo, hi, num = text.split(":")
        return np.linspace(float(lo), float(hi), int(num))
    except ValueError:
        raise ConfigInvalid(f"expected lo:hi:count, got {text!r}", value=text)


def parse_window(text: str) -> tuple[float, float]:
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise ConfigInvalid(f"expected lo:hi, got {text!r}", value=text)


def _model_and_manifold(params):
    spec = load_model(params["model"])
    return spec, eq.equilibrium_manifold(spec)


def _theta_for(spec, N: int) -> float:
    m_star = coupling_exponents(spec).m_star
    return float(theta_schedule(N, spec.theta_mode, m_star))


# ---------------------------------------------------------------------------
# subcommand implementations


def _run_flux(cfg: ExperimentConfig) -> dict:
    spec, M = _model_and_manifold(cfg.params)
    curve = eq.flux_curve_from_manifold(M, npts=cfg.params["grid"])
    gpp = curve.Gpp if curve.Gpp is not None else np.full_like(curve.grid, np.nan)
    rows = zip(curve.grid, curve.G, curve.Gp_left, curve.Gp_right, gpp)
    meta = {"config_hash": mio.config_hash(cfg.resolved()), "seed": cfg.seed}
    mio.write_csv(cfg.out, "flux.v1", rows, meta)
    return {"out": cfg.out}


def _run_phase(cfg: ExperimentConfig) -> dict:
    ds = parse_triplet(cfg.params["d_range"])
    rs = parse_triplet(cfg.params["r_range"])
    meta = {"config_hash": mio.config_hash(cfg.resolved()), "seed": cfg.seed}
    rows = []
    for d in ds:
        for r in rs:
            p = ph.classify_shape(float(d), float(r))
            rows.append((p.d, p.r, p.region, p.inflexions, p.sign_change))
    mio.write_csv(cfg.out, "phase.v1", rows, meta)
    curves_out = cfg.extra_out["curves"]
    crows = []
    for d in ds:
        c = ph.critical_curves(max(float(d), 0.5))
        crows.append((float(d),
                      c["r_tilde1"],
                      c["r_bar1"] if c["r_bar1"] is not None else np.nan,
                      c["r3"] if c["r3"] is not None else np.nan,
                      c["r4"] if c["r4"] is not None else np.nan))
    mio.write_csv(curves_out, "phase_curves.v1", crows, meta)
    return {"out": cfg.out, "curves": curves_out}


def _curve_from_params(cfg):
    spec, M = _model_and_manifold(cfg.params)
    return spec, M, eq.flux_curve_from_manifold(M, npts=cfg.params.get("grid", 2001))


def _run_riemann(cfg: ExperimentConfig) -> dict:
    spec, M, curve = _curve_from_params(cfg)
    a, b = cfg.params["alpha"], cfg.params["beta"]
    t = cfg.params["t"]
    if cfg.params.get("v_window"):
        vlo, vhi = parse_window(cfg.params["v_window"])
    else:
        s = 1.05 * curve.max_speed()
        vlo, vhi = -s, s
    if t <= 0:
        raise ConfigInvalid("time must be positive", t=t)
    v = np.linspace(vlo, vhi, cfg.params["nv"])
    um, up = pde.riemann_solve(curve, a, b, v)
    meta = {"config_hash": mio.config_hash(cfg.resolved()), "seed": cfg.seed}
    # self-similar: the profile along rays v = x/t is the same at every time
    mio.write_csv(cfg.out, "riemann.v1", zip(v, um, up), meta)
    return {"out": cfg.out}


def _field_rows(fields):
    for f in fields:
        for xx, uu in zip(f.x, f.values):
            yield (f.t, xx, uu)


def _load_scalar_field(path) -> pde.DensityField:
    _, cols = mio.read_csv(path)
    mio.require_columns(cols, ["x", "u"], path)
    x = cols["x"]
    if x.size < 2:
        raise ConfigInvalid("need at least two cells", path=str(path))
    dx = float(x[1] - x[0])
    t = float(cols["t"][0]) if "t" in cols and cols["t"].size else 0.0
    return pde.DensityField(x0=float(x[0]) - dx / 2, dx=dx, t=t, values=cols["u"].copy())


def _run_cauchy(cfg: ExperimentConfig) -> dict:
    spec, M, curve = _curve_from_params(cfg)
    p = cfg.params
    if p.get("u0"):
        u0 = _load_scalar_field(p["u0"])
        if p.get("dx"):
            ncell = int(round((u0.x_right - u0.x0) / p["dx"]))
            vals = pde._project_onto(u0, u0.x0, p["dx"], ncell)
            u0 = pde.DensityField(x0=u0.x0, dx=p["dx"], t=u0.t, values=vals)
    else:
        if not p.get("profile"):
            raise ConfigInvalid("need --u0 or --profile")
        prof = profile_callable(parse_profile(p["profile"]))
        lo, hi = parse_window(p["window"])
        u0 = pde.field_from_function(prof, lo, hi, p["dx"])
    snaps = sorted(p.get("snapshots") or [p["T"]])
    out_fields = pde.cauchy_solve(curve, u0, T=p["T"], cfl=p["cfl"], snapshot_times=snaps)
    meta = {"config_hash": mio.config_hash(cfg.resolved()), "seed": cfg.seed}
    mio.write_csv(cfg.out, "field.v1", _field_rows(out_fields), meta)
    return {"out": cfg.out}


def _run_relax(cfg: ExperimentConfig) -> dict:
    spec, M = _model_and_manifold(cfg.params)
    p = cfg.params
    if p.get("u0"):
        _, cols = mio.read_csv(p["u0"])
        mio.require_columns(cols, ["x", "lane", "rho"], p["u0"])
        keep = np.ones(cols["x"].size, dtype=bool)
        if "t" in cols and cols["t"].size:
            keep = cols["t"] == cols["t"].max()  # latest snapshot in the file
        lane_col = cols["lane"].astype(int)[keep]
        xcol = cols["x"][keep]
        rcol = cols["rho"][keep]
        lanes = np.unique(lane_col[lane_col >= 0])
        xs = np.unique(xcol)
        dx = float(xs[1] - xs[0])
        x0 = float(xs[0]) - dx / 2
        rho0 = np.zeros((spec.n, xs.size))
        for i, lane in enumerate(sorted(lanes)):
            sel = lane_col == lane
            order = np.argsort(xcol[sel])
            rho0[i] = rcol[sel][order]
    else:
        if not p.get("profile"):
            raise ConfigInvalid("need --u0 or --profile")
        prof = profile_callable(parse_profile(p["profile"]))
        lo, hi = parse_window(p["window"])
        total0 = pde.field_from_function(prof, lo, hi, p["dx"])
        rho0 = rx.lane_profile_from_total(M, total0.values)
        x0, dx = total0.x0, total0.dx
    snaps = sorted(p.get("snapshots") or [p["T"]])
    traj = rx.relax_solve(M, p["eps"], rho0, x0=x0, dx=dx, T=p["T"],
                          cfl=p["cfl"], snapshot_times=snaps)
    meta = {"config_hash": mio.config_hash(cfg.resolved()), "seed": cfg.seed}

    def rows():
        for st in traj.snapshots:
            R = st.total
            for i in range(spec.n):
                for k, xx in enumerate(st.x):
                    yield (st.t, xx, i, st.rho[i, k], R[k])

    mio.write_csv(cfg.out, "lanes.v1", rows(), meta)
    return {"out": cfg.out}


def _density_rows(bundles):
    for t, fields in bundles:
        for i, f in enumerate(fields["lanes"]):
            for xx, uu in zip(f.x, f.values):
                yield (t, xx, i, uu)
        tot = fields["total"]
        for xx, uu in zip(tot.x, tot.values):
            yield (t, xx, -1, uu)


def _run_simulate(cfg: ExperimentConfig) -> dict:
    spec, M = _model_and_manifold(cfg.params)
    p = cfg.params
    N = p["N"]
    prof_spec = parse_profile(p["profile"])
    prof = profile_callable(prof_spec)
    lo, hi = parse_window(p["window"])
    z_min, z_max = int(np.floor(lo * N)), int(np.ceil(hi * N)) - 1
    boundary = p["boundary"]
    bdens = None
    if boundary == "padded":
        if prof_spec[0] == "riemann":
            bdens = (prof_spec[1], prof_spec[2])
        else:
            bdens = (prof_spec[1], prof_spec[1])
    cfg0 = pt.sample_local_gibbs(M, prof, N, (z_min, z_max), seed=cfg.seed,
                                 boundary=boundary, boundary_densities=bdens)
    theta = _theta_for(spec, N)
    snaps = sorted(p.get("snapshots") or [p["T"]])
    out = pt.simulate(spec, cfg0, theta=theta, T=p["T"], N=N,
                      snapshot_times=snaps, seed=cfg.seed)
    bin_width = p["bin_width"] or max(1, int(round(0.05 * N)))
    bundles = [(t, pt.empirical_density(c, N, bin_width, t=t)) for t, c in out]
    meta = {"config_hash": mio.config_hash(cfg.resolved()), "seed": cfg.seed}
    mio.write_csv(cfg.out, "density.v1", _density_rows(bundles), meta)
    return {"out": cfg.out}


def _run_current(cfg: ExperimentConfig) -> dict:
    spec, M = _model_and_manifold(cfg.params)
    p = cfg.params
    est = pt.stationary_current(spec, rho=p["rho"], L=p["L"], T=p["T"],
                                replicas=p["replicas"], seed=cfg.seed, M=M)
    payload = {
        "config_hash": mio.config_hash(cfg.resolved()),
        "seed": cfg.seed,
        "rho": p["rho"],
        "L": p["L"],
        "T": p["T"],
        "replicas": p["replicas"],
        "estimate": est.estimate,
        "stderr": est.stderr,
        "per_replica": est.per_replica.tolist(),
        "flux_prediction": float(eq.flux_G(M, p["rho"])),
    }
    Path(cfg.out).write_text(json.dumps(payload, indent=2) + "\n")
    return {"out": cfg.out}


def _run_manylane(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    if p["F"] != "logistic":
        raise ConfigInvalid(f"unknown target flux {p['F']!r}", F=p["F"])
    rows = ml.manylane_riemann_study(ml.logistic, p["alpha"], p["beta"], p["n_list"])
    meta = {"config_hash": mio.config_hash(cfg.resolved()), "seed": cfg.seed}
    mio.write_csv(cfg.out, "manylane.v1", ((r["n"], r["sup_distance"]) for r in rows), meta)
    return {"out": cfg.out}


def _fields_by_time_and_lane(path):
    meta, cols = mio.read_csv(path)
    schema = meta["schema"]
    if schema in ("density.v1", "lanes.v1"):
        lane_col = cols["lane"].astype(int)
        key_cols = ("t", "x", "rho")
    elif schema == "field.v1":
        lane_col = np.full(cols["t"].size, -1, dtype=int)
        key_cols = ("t", "x", "u")
    else:
        raise mio.SchemaMismatch(f"cannot compare schema {schema!r}", schema=schema)
    tname, xname, vname = key_cols
    out = {}
    for t in np.unique(cols[tname]):
        for lane in np.unique(lane_col):
            sel = (cols[tname] == t) & (lane_col == lane)
            if not np.any(sel):
                continue
            x = cols[xname][sel]
            order = np.argsort(x)
            x = x[order]
            vals = cols[vname][sel][order]
            dx = float(x[1] - x[0]) if x.size > 1 else 1.0
            out[(float(t), int(lane))] = pde.DensityField(
                x0=float(x[0]) - dx / 2, dx=dx, t=float(t), values=vals
            )
    return out


def compare_fields(path_a, path_b, window=None, norms=("l1", "linf")) -> dict:
    """L1/Linf distances per snapshot time and lane between two field CSVs."""
    fa = _fields_by_time_and_lane(path_a)
    fb = _fields_by_time_and_lane(path_b)
    keys = sorted(set(fa) & set(fb))
    if not keys:
        raise mio.SchemaMismatch("no common (time, lane) pairs to compare")
    mismatched = sorted(set(fa) ^ set(fb))
    report = {"a": str(path_a), "b": str(path_b), "window": window,
              "unmatched_keys": [list(k) for k in mismatched], "entries": []}
    for t, lane in keys:
        A, B = fa[(t, lane)], fb[(t, lane)]
        entry = {"t": t, "lane": lane}
        if "l1" in norms:
            entry["l1"] = pde.l1_distance(A, B, window=window)
        if "linf" in norms:
            lo = max(A.x0, B.x0) if window is None else max(A.x0, B.x0, window[0])
            hi = min(A.x_right, B.x_right) if window is None else min(A.x_right, B.x_right, window[1])
            xs = A.x[(A.x >= lo) & (A.x <= hi)]
            av = A.values[(A.x >= lo) & (A.x <= hi)]
            bv = np.interp(xs, B.x, B.values)
            entry["linf"] = float(np.abs(av - bv).max()) if xs.size else float("nan")
        report["entries"].append(entry)
    return report


def _run_compare(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    if p.get("a") and p.get("b"):
        window = parse_window(p["window"]) if p.get("window") else None
        report = compare_fields(p["a"], p["b"], window=window,
                                norms=tuple(p["norm"].split(",")))
    else:
        report = _compare_pipeline(cfg)
    report["config_hash"] = mio.config_hash(cfg.resolved())
    Path(cfg.out).write_text(json.dumps(report, indent=2) + "\n")
    return {"out": cfg.out}


def _compare_pipeline(cfg: ExperimentConfig) -> dict:
    """Run the requested layers on one Riemann setup and cross-compare."""
    p = cfg.params
    if not p.get("layers") or not p.get("model") or not p.get("profile"):
        raise ConfigInvalid("pipeline comparison needs --layers, --model, --profile")
    layers = p["layers"].split(",")
    spec, M = _model_and_manifold(p)
    curve = eq.flux_curve_from_manifold(M)
    prof_spec = parse_profile(p["profile"])
    if prof_spec[0] != "riemann":
        raise ConfigInvalid("pipeline comparison needs a riemann profile")
    _, a, b = prof_spec
    T = p["T"]
    N = p["N"]
    meas_lo, meas_hi = parse_window(p["window"])
    sigma = pt.propagation_speed(spec)
    margin = sigma * T + 0.5
    fields = {}
    if "particle" in layers:
        z_min = int(np.floor((meas_lo - margin) * N))
        z_max = int(np.ceil((meas_hi + margin) * N)) - 1
        prof = profile_callable(prof_spec)
        cfg0 = pt.sample_local_gibbs(M, prof, N, (z_min, z_max), seed=cfg.seed,
                                     boundary="padded", boundary_densities=(a, b))
        theta = _theta_for(spec, N)
        out = pt.simulate(spec, cfg0, theta=theta, T=T, N=N, seed=cfg.seed)
        bin_width = p["bin_width"] or max(1, int(round(0.05 * N)))
        fields["particle"] = pt.empirical_density(out[-1][1], N, bin_width, t=T)["total"]
    if "pde" in layers:
        dx = p.get("dx") or 1.0 / 200
        u0 = pde.field_from_function(profile_callable(prof_spec),
                                     meas_lo - margin, meas_hi + margin, dx)
        fields["pde"] = pde.cauchy_solve(curve, u0, T=T)
    if "exact" in layers:
        dx = p.get("dx") or 1.0 / 200
        v = np.linspace((meas_lo - margin) / T, (meas_hi + margin) / T, 4001)
        sol = pde.riemann_solution(curve, a, b, v)
        fields["exact"] = pde.field_from_function(
            lambda x: sol.at_time(T, x), meas_lo - margin, meas_hi + margin, dx, t=T
        )
    report = {"T": T, "window": [meas_lo, meas_hi], "pairs": []}
    names = [l for l in ("particle", "pde", "exact") if l in fields]
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            A, B = fields[names[i]], fields[names[j]]
            report["pairs"].append({
                "a": names[i], "b": names[j],
                "l1": pde.l1_distance(A, B, window=(meas_lo, meas_hi)),
            })
    return report


_RUNNERS = {
    "flux": _run_flux,
    "phase": _run_phase,
    "riemann": _run_riemann,
    "cauchy": _run_cauchy,
    "relax": _run_relax,
    "simulate": _run_simulate,
    "current": _run_current,
    "manylane": _run_manylane,
    "compare": _run_compare,
}


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Dispatch to the owning module; writes artifacts plus a manifest."""
    if cfg.kind not in _RUNNERS:
        raise ConfigInvalid(f"unknown experiment kind {cfg.kind!r}", kind=cfg.kind)
    start = time.perf_counter()
    artifacts = _RUNNERS[cfg.kind](cfg)
    wall = time.perf_counter() - start
    schema = {"flux": "flux.v1", "phase": "phase.v1", "riemann": "riemann.v1",
              "cauchy": "field.v1", "relax": "lanes.v1", "simulate": "density.v1",
              "current": "json", "manylane": "manylane.v1", "compare": "json"}[cfg.kind]
    mio.write_manifest(cfg.out, cfg.kind, cfg.resolved(), cfg.seed, schema, wall)
    return artifacts


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hydro",
        description="Multilane exclusion processes: flux curves, phase diagrams, "
                    "PDE solvers, and kinetic Monte Carlo.",
    )
    sub = ap.add_subparsers(dest="kind", required=True)

    def common(sp, model=True):
        if model:
            sp.add_argument("--model", required=True, help="model JSON document")
        sp.add_argument("--out", required=True, help="output artifact path")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("flux", help="tabulate the macroscopic flux curve")
    common(sp)
    sp.add_argument("--grid", type=int, default=2001)

    sp = sub.add_parser("phase", help="two-lane shape phase diagram")
    common(sp, model=False)
    sp.add_argument("--d-range", default="0.5:3:200")
    sp.add_argument("--r-range", default="1:100:200")
    sp.add_argument("--curves-out", default=None)

    sp = sub.add_parser("riemann", help="exact self-similar Riemann profile")
    common(sp)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--nv", type=int, default=801)
    sp.add_argument("--v-window", default=None)
    sp.add_argument("--grid", type=int, default=2001)

    sp = sub.add_parser("cauchy", help="Godunov solve of the scalar law")
    common(sp)
    sp.add_argument("--u0", default=None, help="field.v1 CSV initial datum")
    sp.add_argument("--profile", default=None, help="riemann:A:B or constant:C")
    sp.add_argument("--window", default="-2:2")
    sp.add_argument("--T", type=float, required=True)
    sp.add_argument("--dx", type=float, default=1 / 200)
    sp.add_argument("--cfl", type=float, default=0.45)
    sp.add_argument("--snapshots", default=None, help="comma-separated times")
    sp.add_argument("--grid", type=int, default=2001)

    sp = sub.add_parser("relax", help="stiff balance-law system solve")
    common(sp)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--u0", default=None, help="lanes.v1-style CSV (x,lane,rho)")
    sp.add_argument("--profile", default=None)
    sp.add_argument("--window", default="-2:2")
    sp.add_argument("--T", type=float, required=True)
    sp.add_argument("--dx", type=float, default=1 / 200)
    sp.add_argument("--cfl", type=float, default=0.45)
    sp.add_argument("--snapshots", default=None)

    sp = sub.add_parser("simulate", help="kinetic Monte Carlo of the ladder process")
    common(sp)
    sp.add_argument("--profile", required=True)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--T", type=float, required=True)
    sp.add_argument("--window", default="-3:3")
    sp.add_argument("--boundary", choices=["periodic", "padded"], default="padded")
    sp.add_argument("--bin-width", type=int, default=None)
    sp.add_argument("--snapshots", default=None)

    sp = sub.add_parser("current", help="stationary current on a ring")
    common(sp)
    sp.add_argument("--rho", type=float, required=True)
    sp.add_argument("--L", type=int, default=2000)
    sp.add_argument("--T", type=float, default=500.0)
    sp.add_argument("--replicas", type=int, default=16)

    sp = sub.add_parser("manylane", help="many-lane Riemann convergence study")
    common(sp, model=False)
    sp.add_argument("--F", default="logistic")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--n", default="8,16,32,64")

    sp = sub.add_parser("compare", help="cross-layer or file-to-file comparison")
    sp.add_argument("--a", default=None)
    sp.add_argument("--b", default=None)
    sp.add_argument("--norm", default="l1,linf")
    sp.add_argument("--layers", default=None)
    sp.add_argument("--model", default=None)
    sp.add_argument("--profile", default=None)
    sp.add_argument("--N", type=int, default=1000)
    sp.add_argument("--T", type=float, default=1.0)
    sp.add_argument("--window", default="-2:2")
    sp.add_argument("--dx", type=float, default=None)
    sp.add_argument("--bin-width", type=int, default=None)
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=0)
    return ap


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    params = {k.replace("-", "_"): v for k, v in vars(args).items()
              if k not in ("kind", "out", "seed", "curves_out")}
    if "snapshots" in params and params["snapshots"]:
        params["snapshots"] = [float(s) for s in params["snapshots"].split(",")]
    if "n" in params and isinstance(params.get("n"), str):
        params["n_list"] = [int(s) for s in params.pop("n").split(",")]
    seed = args.seed if "seed" in vars(args) else 0
    env_seed = os.environ.get("HYDRO_SEED")
    if env_seed is not None:
        seed = int(env_seed)
    extra = {}
    if args.kind == "phase":
        extra["curves"] = args.curves_out or str(
            Path(args.out).with_name(Path(args.out).stem + "_curves.csv")
        )
    return ExperimentConfig(kind=args.kind, params=params, seed=seed,
                            out=args.out, extra_out=extra)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = config_from_args(args)
        artifacts = run_experiment(cfg)
    except ConfigInvalid as exc:
        print(json.dumps(exc.to_json()), file=sys.stderr)
        return 2
    except ModelInvalid as exc:
        print(json.dumps(exc.to_json()), file=sys.stderr)
        return 3
    except IoError as exc:
        print(json.dumps(exc.to_json()), file=sys.stderr)
        return 4
    except MultilaneError as exc:
        print(json.dumps(exc.to_json()), file=sys.stderr)
        return 5
    print(json.dumps({"ok": True, "artifacts": artifacts}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
