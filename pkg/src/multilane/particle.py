"""Kinetic Monte Carlo simulation of the multilane exclusion process.

Horizontal jumps run at N*d_i / N*l_i per lane, interlane jumps at
theta * q(i,j), so kernel time is macroscopic time.  Initial states are
product-Bernoulli local Gibbs configurations whose site marginals follow a
macroscopic total-density profile through the equilibrium manifold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .equilibrium import EquilibriumManifold, manifold_point
from .errors import OutOfRange, ProfileOutOfRange, WindowTooSmall
from .model import ModelSpec
from .pde import DensityField


@dataclass
class ParticleConfiguration:
    """Occupancies on a window of columns; optionally frozen reservoir pads.

    ``occ`` has shape (columns, lanes).  Periodic windows wrap; padded
    windows carry one frozen column on each side sampled from the boundary
    densities, which feed and absorb particles without changing themselves.
    """

    z_min: int
    occ: np.ndarray
    boundary: str = "periodic"  # "periodic" | "padded"
    pad_left: np.ndarray | None = None
    pad_right: np.ndarray | None = None

    @property
    def columns(self) -> int:
        return self.occ.shape[0]

    @property
    def lanes(self) -> int:
        return self.occ.shape[1]

    @property
    def particles(self) -> int:
        return int(self.occ.sum())


@dataclass
class CoupledRecord:
    """Discrepancy bookkeeping of one coupled run."""

    times: np.ndarray
    d_plus: np.ndarray
    d_minus: np.ndarray
    crossing: np.ndarray
    final_d_plus: int
    final_d_minus: int
    coalescences: int
    discrepancy_violations: int
    order_violations: int
    crossing_max: int
    events: int
    eta: ParticleConfiguration
    xi: ParticleConfiguration


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _profile_values(M: EquilibriumManifold, profile, N: int, cols: np.ndarray) -> np.ndarray:
    if callable(profile):
        u = np.asarray(profile(cols / N), dtype=float)
    else:
        u = np.full(cols.size, float(profile))
    if np.any(u < -1e-12) or np.any(u > M.n + 1e-12):
        raise ProfileOutOfRange("profile must map into [0, lanes]", lanes=M.n)
    return np.clip(u, 0.0, M.n)


def sample_local_gibbs(
    M: EquilibriumManifold,
    profile,
    N: int,
    window: tuple[int, int],
    seed: int = 0,
    boundary: str = "periodic",
    boundary_densities: tuple[float, float] | None = None,
    uniforms: np.ndarray | None = None,
) -> ParticleConfiguration:
    """Product-Bernoulli configuration following a total-density profile.

    Site (z, i) is occupied when its uniform falls below the lane density of
    the manifold point at the local profile value u(z/N).  Passing the same
    ``uniforms`` array couples samples of different profiles monotonically.
    """
    z_min, z_max = window
    cols = np.arange(z_min, z_max + 1)
    u = _profile_values(M, profile, N, cols)
    marg = manifold_point(M, u)  # (lanes, columns)
    rng = _rng(seed)
    if uniforms is None:
        uniforms = rng.random((cols.size, M.n))
    occ = (uniforms <= marg.T).astype(np.int8)
    pad_left = pad_right = None
    if boundary == "padded":
        if boundary_densities is None:
            raise OutOfRange("padded boundary needs boundary densities")
        a, b = boundary_densities
        left = manifold_point(M, float(a))
        right = manifold_point(M, float(b))
        pu = rng.random((2, M.n))
        pad_left = (pu[0] <= left).astype(np.int8)
        pad_right = (pu[1] <= right).astype(np.int8)
    elif boundary != "periodic":
        raise OutOfRange(f"unknown boundary policy {boundary!r}")
    return ParticleConfiguration(z_min=int(z_min), occ=occ, boundary=boundary,
                                 pad_left=pad_left, pad_right=pad_right)


def sample_coupled_gibbs(M, profile_a, profile_b, N, window, seed=0):
    """Two configurations from shared uniforms (monotone coupling)."""
    z_min, z_max = window
    cols = np.arange(z_min, z_max + 1)
    rng = _rng(seed)
    uniforms = rng.random((cols.size, M.n))
    a = sample_local_gibbs(M, profile_a, N, window, boundary="periodic", uniforms=uniforms)
    b = sample_local_gibbs(M, profile_b, N, window, boundary="periodic", uniforms=uniforms)
    return a, b


def _rate_tables(spec: ModelSpec, theta: float, N: int):
    n = spec.n
    hr = N * spec.d
    hl = N * spec.l
    vert = theta * spec.q
    w_lane = hr + hl + vert.sum(axis=1)
    cum = np.zeros((n, n + 2))
    cum[:, 0] = hr
    cum[:, 1] = cum[:, 0] + hl
    for j in range(n):
        cum[:, 2 + j] = cum[:, 1 + j] + vert[:, j]
    return w_lane, cum


def _extended_state(cfg: ParticleConfiguration):
    """Occupancy array with pad columns attached, plus the pad mask."""
    if cfg.boundary == "padded":
        occ = np.vstack([cfg.pad_left[None, :], cfg.occ, cfg.pad_right[None, :]])
        pad_mask = np.zeros(occ.shape[0], dtype=np.int8)
        pad_mask[0] = pad_mask[-1] = 1
        return np.ascontiguousarray(occ.astype(np.int8)), pad_mask, False
    return np.ascontiguousarray(cfg.occ.astype(np.int8)), np.zeros(cfg.columns, dtype=np.int8), True


def _strip_pads(cfg: ParticleConfiguration, occ_ext: np.ndarray) -> np.ndarray:
    return occ_ext[1:-1] if cfg.boundary == "padded" else occ_ext


def propagation_speed(spec: ModelSpec) -> float:
    """Safe macroscopic propagation speed bound, 2 max(d_i + l_i)."""
    return 2.0 * float((spec.d + spec.l).max())


def safe_subwindow(cfg: ParticleConfiguration, spec: ModelSpec, T: float, N: int) -> tuple[int, int]:
    """Columns unaffected by the boundary up to macroscopic time T."""
    if cfg.boundary == "periodic":
        return cfg.z_min, cfg.z_min + cfg.columns - 1
    margin = int(math.ceil(propagation_speed(spec) * N * T))
    lo = cfg.z_min + margin
    hi = cfg.z_min + cfg.columns - 1 - margin
    if hi < lo:
        raise WindowTooSmall(
            "propagation cone exhausts the window before the requested time",
            margin=margin, columns=cfg.columns,
        )
    return lo, hi


def simulate(
    spec: ModelSpec,
    cfg: ParticleConfiguration,
    theta: float,
    T: float,
    N: int,
    snapshot_times: list[float] | None = None,
    seed: int = 0,
) -> list[tuple[float, ParticleConfiguration]]:
    """Run the process to macroscopic time T; returns snapshot configurations."""
    if theta < 0:
        raise OutOfRange("theta must be nonnegative", theta=theta)
    if cfg.boundary == "padded":
        safe_subwindow(cfg, spec, T, N)
    occ, pad_mask, periodic = _extended_state(cfg)
    w_lane, cum = _rate_tables(spec, theta, N)
    times = np.asarray(sorted(snapshot_times) if snapshot_times else [T], dtype=float)
    snaps, _, _, _ = _kernels.run_exclusion(
        occ, pad_mask, w_lane, cum, periodic, float(T), times, _kernel_seed(seed), 0
    )
    out = []
    for k, t in enumerate(times):
        body = snaps[k][1:-1] if cfg.boundary == "padded" else snaps[k]
        out.append((float(t), ParticleConfiguration(
            z_min=cfg.z_min, occ=body.copy(), boundary=cfg.boundary,
            pad_left=cfg.pad_left, pad_right=cfg.pad_right,
        )))
    return out


def _kernel_seed(seed) -> int:
    # numba's RNG wants a plain integer seed; derive one deterministically
    return int(np.random.SeedSequence(seed).generate_state(1, dtype=np.uint32)[0])


def empirical_density(cfg: ParticleConfiguration, N: int, bin_width: int,
                      t: float = 0.0) -> dict:
    """Block-averaged lane and total density fields on the macroscopic axis."""
    if bin_width < 1:
        raise OutOfRange("bin width must cover at least one site", bin_width=bin_width)
    cols, n = cfg.occ.shape
    nbins = cols // bin_width
    trimmed = cfg.occ[: nbins * bin_width]
    blocks = trimmed.reshape(nbins, bin_width, n).mean(axis=1)
    x0 = cfg.z_min / N
    dx = bin_width / N
    lanes = [DensityField(x0=x0, dx=dx, t=t, values=blocks[:, i].copy()) for i in range(n)]
    total = DensityField(x0=x0, dx=dx, t=t, values=blocks.sum(axis=1))
    return {"lanes": lanes, "total": total}


@dataclass
class CurrentEstimate:
    estimate: float
    stderr: float
    per_replica: np.ndarray


def stationary_current(
    spec: ModelSpec,
    rho: float,
    L: int,
    T: float,
    replicas: int = 16,
    seed: int = 0,
    theta: float = 1.0,
    M: EquilibriumManifold | None = None,
) -> CurrentEstimate:
    """Time-space averaged current on a stationary periodic ring.

    Rings start from the product measure at the manifold point of rho, which
    is exactly invariant, so no burn-in is needed.  Executed horizontal jumps
    are counted with sign over all bonds and lanes and divided by L * T.
    """
    from .equilibrium import equilibrium_manifold

    M = M or equilibrium_manifold(spec)
    w_lane, cum = _rate_tables(spec, theta, N=1)
    marg = manifold_point(M, float(rho))
    seeds = np.random.SeedSequence(seed).spawn(replicas)
    vals = np.empty(replicas)
    for k in range(replicas):
        rng = np.random.Generator(np.random.Philox(seeds[k]))
        occ = (rng.random((L, spec.n)) <= marg[None, :]).astype(np.int8)
        pad_mask = np.zeros(L, dtype=np.int8)
        kseed = int(seeds[k].generate_state(1, dtype=np.uint32)[0])
        _, t_end, jumps, _ = _kernels.run_exclusion(
            occ, pad_mask, w_lane, cum, True, float(T),
            np.empty(0, dtype=float), kseed, 1,
        )
        vals[k] = jumps / (L * T)
    est = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    return CurrentEstimate(estimate=est, stderr=stderr, per_replica=vals)


def coupled_simulate(
    spec: ModelSpec,
    eta0: ParticleConfiguration,
    xi0: ParticleConfiguration,
    theta: float,
    T: float,
    N: int,
    snapshot_times: list[float] | None = None,
    seed: int = 0,
    max_events: int = 2**62,
) -> CoupledRecord:
    """Run two copies through one clock stream and audit discrepancies.

    Discrepancy counts can only drop (at coalescences); any observed increase
    is returned in ``discrepancy_violations``.  The suffix-sum crossing
    statistic is evaluated at snapshot times.
    """
    if eta0.boundary != xi0.boundary or eta0.occ.shape != xi0.occ.shape:
        raise OutOfRange("coupled copies need identical windows")
    occA, pad_mask, periodic = _extended_state(eta0)
    occB, _, _ = _extended_state(xi0)
    w_lane, cum = _rate_tables(spec, theta, N)
    times = np.asarray(sorted(snapshot_times) if snapshot_times else [T], dtype=float)
    (snapsA, snapsB, dp_t, dm_t, cross_t, dp, dm, disc_v, ord_v, coal,
     cross_max, events, _t) = _kernels.run_coupled(
        occA, occB, pad_mask, w_lane, cum, periodic, float(T), times,
        _kernel_seed(seed), max_events,
    )
    k = len(times) - 1
    eta = ParticleConfiguration(z_min=eta0.z_min, occ=_strip_pads(eta0, snapsA[k]).copy(),
                                boundary=eta0.boundary, pad_left=eta0.pad_left,
                                pad_right=eta0.pad_right)
    xi = ParticleConfiguration(z_min=xi0.z_min, occ=_strip_pads(xi0, snapsB[k]).copy(),
                               boundary=xi0.boundary, pad_left=xi0.pad_left,
                               pad_right=xi0.pad_right)
    return CoupledRecord(
        times=times, d_plus=dp_t, d_minus=dm_t, crossing=cross_t,
        final_d_plus=int(dp), final_d_minus=int(dm), coalescences=int(coal),
        discrepancy_violations=int(disc_v), order_violations=int(ord_v),
        crossing_max=int(cross_max), events=int(events), eta=eta, xi=xi,
    )
