"""Weakly coupled balance system with stiff interlane exchange.

Each lane density solves a scalar conservation law with flux
gamma_i rho (1 - rho); the lanes exchange mass through the stiff source
c_i(rho)/epsilon built from the interlane rates.  A Strang-split scheme
alternates half source steps (backward Euler in substeps, damped Newton)
with a full Godunov transport step per lane.  The source conserves the
per-cell total exactly since the exchange terms cancel pairwise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import EquilibriumManifold, manifold_point
from .errors import NewtonDivergence, OutOfRange

logger = logging.getLogger(__name__)

NEWTON_TOL = 1e-14
NEWTON_MAX_ITER = 50
DAMPING_FACTOR = 0.5
SUBSTEP_FRACTION = 0.25  # backward-Euler substep <= epsilon / 4


def source_term(spec, rho: np.ndarray) -> np.ndarray:
    """Per-lane exchange rates c_i(rho); columns are cells.

    c_i = sum_j [q(j,i) rho_j (1 - rho_i) - q(i,j) rho_i (1 - rho_j)], which
    sums to zero over lanes up to rounding.
    """
    q = spec.q if hasattr(spec, "q") else np.asarray(spec)
    rho = np.asarray(rho, dtype=float)
    single = rho.ndim == 1
    r = rho[:, None] if single else rho
    inflow = (q.T @ r) * (1.0 - r)
    outflow = r * (q @ (1.0 - r))
    c = inflow - outflow
    return c[:, 0] if single else c


def _source_jacobian(q: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """d c_i / d rho_k per cell; shape (cells, n, n)."""
    n, K = rho.shape
    J = np.empty((K, n, n))
    for i in range(n):
        for k in range(n):
            if i != k:
                # inflow from k grows with rho_k; outflow to k shrinks with it
                J[:, i, k] = q[k, i] * (1.0 - rho[i]) + q[i, k] * rho[i]
    diag = -(q.T @ rho) - (q @ (1.0 - rho))
    for i in range(n):
        J[:, i, i] = diag[i]
    return J


def quad_godunov_flux(uL: np.ndarray, uR: np.ndarray, g: float) -> np.ndarray:
    """Exact interface flux for the quadratic lane flux g*u*(1-u) on [0,1]."""
    if g == 0.0:
        return np.zeros(np.broadcast(uL, uR).shape)

    def f(u):
        return g * u * (1.0 - u)

    lo = np.minimum(uL, uR)
    hi = np.maximum(uL, uR)
    straddles = (lo <= 0.5) & (0.5 <= hi)
    if g > 0:
        minv = np.minimum(f(uL), f(uR))
        maxv = np.where(straddles, 0.25 * g, np.maximum(f(uL), f(uR)))
    else:
        minv = np.where(straddles, 0.25 * g, np.minimum(f(uL), f(uR)))
        maxv = np.maximum(f(uL), f(uR))
    return np.where(uL <= uR, minv, maxv)


@dataclass
class LaneSystemState:
    """Per-lane density fields on a shared uniform grid."""

    t: float
    x0: float
    dx: float
    rho: np.ndarray  # (lanes, cells)
    epsilon: float

    @property
    def total(self) -> np.ndarray:
        return self.rho.sum(axis=0)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * (np.arange(self.rho.shape[1]) + 0.5)


@dataclass
class RelaxTrajectory:
    snapshots: list[LaneSystemState]
    conservation_max: float = 0.0       # worst per-cell |d total| in one substep
    newton_iters_max: int = 0
    entropy_residual: np.ndarray | None = None  # accumulated per-cell space-time residual
    clipped_cells: int = 0

    @property
    def final(self) -> LaneSystemState:
        return self.snapshots[-1]


def _backward_euler_step(q: np.ndarray, x: np.ndarray, lam: float) -> tuple[np.ndarray, int]:
    """Solve y = x + lam * c(y) cellwise with damped Newton; returns (y, iters)."""
    n, K = x.shape
    y = x.copy()
    eye = np.eye(n)[None, :, :]
    for it in range(1, NEWTON_MAX_ITER + 1):
        F = y - x - lam * source_term(q, y)
        res = np.abs(F).max(axis=0)
        if res.max() <= NEWTON_TOL:
            return y, it
        J = eye - lam * _source_jacobian(q, y)
        delta = np.linalg.solve(J, -F.T[:, :, None])[:, :, 0].T
        step = np.ones(K)
        y_try = y + delta
        for _ in range(30):
            F_try = y_try - x - lam * source_term(q, y_try)
            worse = np.abs(F_try).max(axis=0) > (1.0 - 1e-4) * res
            worse &= res > NEWTON_TOL
            if not np.any(worse):
                break
            step = np.where(worse, step * DAMPING_FACTOR, step)
            y_try = y + step[None, :] * delta
        y = y_try
    F = y - x - lam * source_term(q, y)
    if np.abs(F).max() > NEWTON_TOL * 10:
        cell = int(np.abs(F).max(axis=0).argmax())
        raise NewtonDivergence("backward Euler failed to converge", cell=cell,
                               residual=float(np.abs(F).max()))
    return y, NEWTON_MAX_ITER


def _source_half(q, rho, half_dt, epsilon, track):
    """Half source step via backward-Euler substeps; returns (rho, pairing)."""
    if half_dt <= 0:
        return rho, None
    n_sub = max(1, math.ceil(half_dt / (SUBSTEP_FRACTION * epsilon)))
    h = half_dt / n_sub
    lam = h / epsilon
    pairing = np.zeros(rho.shape[1]) if track.get("ref") is not None else None
    y = rho
    for _ in range(n_sub):
        y_new, iters = _backward_euler_step(q, y, lam)
        track["newton"] = max(track["newton"], iters)
        dR = np.abs(y_new.sum(axis=0) - y.sum(axis=0)).max()
        track["cons"] = max(track["cons"], float(dR))
        if pairing is not None:
            r = track["ref"]
            # Time-integrated entropy pairing; (y_new - y) equals
            # lam * c(y_new) exactly, so no rate evaluation is needed.
            pairing += ((y_new > r[:, None]) * (y_new - y)).sum(axis=0)
        y = y_new
    return y, pairing


def relax_solve(
    M: EquilibriumManifold,
    epsilon: float,
    rho0: np.ndarray,
    x0: float,
    dx: float,
    T: float,
    cfl: float = 0.45,
    snapshot_times: list[float] | None = None,
    entropy_ref: float | None = None,
) -> RelaxTrajectory:
    """March the split scheme to time T.

    rho0 has shape (lanes, cells) with values in [0,1].  Outflow (copy)
    boundaries.  When ``entropy_ref`` (a total density in [0, n]) is given,
    the per-cell space-time residual of the reference Kruzkov entropy is
    accumulated alongside; its cell sums are nonpositive up to solver
    tolerances.
    """
    spec = M.spec
    q = spec.q
    gam = M.gamma
    rho = np.array(rho0, dtype=float)
    if rho.ndim != 2 or rho.shape[0] != spec.n:
        raise OutOfRange("rho0 must have shape (lanes, cells)", shape=list(rho.shape))
    if rho.min() < -1e-12 or rho.max() > 1 + 1e-12:
        raise OutOfRange("lane densities must lie in [0,1]")
    if epsilon <= 0:
        raise OutOfRange("epsilon must be positive", epsilon=epsilon)

    speed = max(float(np.abs(gam).max()), 1e-12)
    dt_full = cfl * dx / speed
    t = 0.0
    track = {"cons": 0.0, "newton": 0, "ref": None}
    r_ref = None
    resid = None
    if entropy_ref is not None:
        r_ref = manifold_point(M, float(entropy_ref))
        track["ref"] = r_ref
        resid = np.zeros(rho.shape[1])

    snaps_req = sorted(snapshot_times) if snapshot_times is not None else []
    snaps: list[LaneSystemState] = []

    def record(now):
        while snaps_req and snaps_req[0] <= now + 1e-14:
            st = snaps_req.pop(0)
            snaps.append(LaneSystemState(t=st, x0=x0, dx=dx, rho=rho.copy(), epsilon=epsilon))

    def entropy(rv):
        return np.maximum(rv - r_ref[:, None], 0.0).sum(axis=0)

    def entropy_flux_divergence(rv, dt):
        # Interface entropy flux of the transported Kruzkov entropy:
        # F(uL v r, uR v r) - f(r) per lane, summed.
        Q = np.zeros(rv.shape[1] + 1)
        for i in range(spec.n):
            ext = np.concatenate([[rv[i, 0]], rv[i], [rv[i, -1]]])
            a = np.maximum(ext[:-1], r_ref[i])
            b = np.maximum(ext[1:], r_ref[i])
            Q += quad_godunov_flux(a, b, gam[i]) - gam[i] * r_ref[i] * (1.0 - r_ref[i])
        return (Q[1:] - Q[:-1]) * (dt / dx)

    clipped = 0
    record(t)
    while t < T - 1e-14:
        dt = min(dt_full, T - t)
        if snaps_req:
            dt = min(dt, max(snaps_req[0] - t, 1e-14))
        if resid is not None:
            h_before = entropy(rho)
        rho, pair1 = _source_half(q, rho, dt / 2.0, epsilon, track)
        mid = rho
        if resid is not None:
            div = entropy_flux_divergence(mid, dt)
        new = rho.copy()
        for i in range(spec.n):
            ext = np.concatenate([[rho[i, 0]], rho[i], [rho[i, -1]]])
            F = quad_godunov_flux(ext[:-1], ext[1:], gam[i])
            new[i] = rho[i] - (dt / dx) * (F[1:] - F[:-1])
        rho = new
        rho, pair2 = _source_half(q, rho, dt / 2.0, epsilon, track)
        out_of_box = (rho < -1e-12) | (rho > 1 + 1e-12)
        if np.any(out_of_box):
            clipped += int(out_of_box.sum())
            logger.warning("box projection active on %d cell values", int(out_of_box.sum()))
        rho = np.clip(rho, 0.0, 1.0)
        if resid is not None:
            total_pair = (pair1 if pair1 is not None else 0.0) + (
                pair2 if pair2 is not None else 0.0
            )
            resid += dx * (entropy(rho) - h_before) + dx * div - dx * total_pair
        t += dt
        record(t)

    record(T + 1.0)
    if not snaps or snaps[-1].t < T - 1e-12:
        snaps.append(LaneSystemState(t=T, x0=x0, dx=dx, rho=rho.copy(), epsilon=epsilon))
    return RelaxTrajectory(
        snapshots=snaps,
        conservation_max=track["cons"],
        newton_iters_max=track["newton"],
        entropy_residual=resid,
        clipped_cells=clipped,
    )


def lane_profile_from_total(M: EquilibriumManifold, total: np.ndarray) -> np.ndarray:
    """Split a total-density profile into manifold lane profiles, cellwise."""
    return manifold_point(M, np.asarray(total, dtype=float))


def entropy_residual(
    M: EquilibriumManifold,
    epsilon: float,
    rho0: np.ndarray,
    x0: float,
    dx: float,
    T: float,
    c: float,
    cfl: float = 0.45,
) -> tuple[np.ndarray, LaneSystemState]:
    """Accumulated per-cell space-time entropy residual relative to level c.

    The residual of d/dt sum_i (rho_i - r_i)^+ + d/dx of the matching entropy
    fluxes minus the source pairing, integrated over [0, T] x cell; r_i are
    the manifold lane densities at total density c.  Nonpositive cell sums
    (up to solver tolerance) certify dissipativity.
    """
    traj = relax_solve(M, epsilon, rho0, x0, dx, T, cfl=cfl, entropy_ref=c)
    return traj.entropy_residual, traj.final
