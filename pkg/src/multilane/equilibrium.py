"""Equilibrium manifold and macroscopic flux.

The detailed-balance relations q(i,j) rho_i (1 - rho_j) = q(j,i) rho_j (1 - rho_i)
carve a one-parameter family of lane-density vectors out of [0,1]^n,
parameterized bijectively by the total density rho in [0, n].  Within the
active class the lane densities are c*lam_i / (1 + c*lam_i) for a common
c in [0, inf]; classes after the active one are full, classes before it are
empty.  The macroscopic flux is G(rho) = sum_i gamma_i rho_i (1 - rho_i)
evaluated on that manifold point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import OutOfRange
from .model import ClassDecomposition, ModelSpec, irreducibility_classes

BISECTION_MAX_ITER = 200
DEFAULT_DENSITY_TOL = 1e-13
_BOUNDARY_EPS = 1e-13


def phi_r(r: float, rho):
    """Increasing bijection of [0,1] pushing a density through a rate ratio r.

    phi_r(rho) = r*rho / (1 - rho + r*rho).  Satisfies phi_{r'} o phi_r =
    phi_{r r'} and phi_{1/r} = phi_r^{-1}.
    """
    if r <= 0:
        raise OutOfRange("r must be positive", r=r)
    rho = np.asarray(rho, dtype=float)
    return r * rho / (1.0 - rho + r * rho)


@dataclass(frozen=True)
class EquilibriumManifold:
    """Equilibrium manifold of a validated model.

    Bundles the class decomposition, per-lane drifts, and the bisection
    tolerance used to invert total density into lane densities.
    """

    spec: ModelSpec
    decomposition: ClassDecomposition
    gamma: np.ndarray
    tol: float = DEFAULT_DENSITY_TOL

    @property
    def n(self) -> int:
        return self.spec.n


def equilibrium_manifold(spec: ModelSpec, tol: float = DEFAULT_DENSITY_TOL) -> EquilibriumManifold:
    return EquilibriumManifold(
        spec=spec,
        decomposition=irreducibility_classes(spec),
        gamma=spec.gamma,
        tol=tol,
    )


def rho_alpha_c(M: EquilibriumManifold, alpha: int, c: float) -> np.ndarray:
    """Lane densities on class alpha for manifold parameter c in [0, inf]."""
    lam = M.decomposition.lam[alpha]
    if c == math.inf:
        return np.ones_like(lam)
    if c < 0:
        raise OutOfRange("c must be nonnegative", c=c)
    return c * lam / (1.0 + c * lam)


def _class_lane_values(lam: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Lane densities (k, len(t)) at compactified parameter t = c/(1+c).

    c*lam/(1+c*lam) rewritten as t*lam/(1-t+t*lam): exact at t = 1.
    """
    tt = t[None, :]
    ll = lam[:, None]
    return tt * ll / (1.0 - tt + tt * ll)


def _solve_class_parameter(lam: np.ndarray, target: np.ndarray, tol: float) -> np.ndarray:
    """Bisection for t in [0,1] with class mass equal to target (vectorized).

    Stops on the mass tolerance or when the bracket has collapsed to
    floating-point resolution, whichever comes first.
    """
    lo = np.zeros_like(target)
    hi = np.ones_like(target)
    t = 0.5 * np.ones_like(target)
    for _ in range(BISECTION_MAX_ITER):
        mass = _class_lane_values(lam, t).sum(axis=0)
        err = mass - target
        if np.all(np.abs(err) <= tol) or np.all(hi - lo <= 1e-16):
            break
        high = err > 0
        hi = np.where(high, t, hi)
        lo = np.where(high, lo, t)
        t = 0.5 * (lo + hi)
    # Snap the saturated ends so boundary points come out exactly 0/1.
    t = np.where(target <= tol, 0.0, t)
    t = np.where(target >= lam.size - tol, 1.0, t)
    return t


def manifold_point(M: EquilibriumManifold, rho) -> np.ndarray:
    """Lane densities of the manifold point with total density rho.

    rho may be a scalar or an array; the result has shape (n,) + rho.shape.
    The active class is located from the cumulative class sizes; the class
    parameter is found by monotone bisection on c/(1+c) to the configured
    total-density tolerance.
    """
    dec = M.decomposition
    n = M.n
    scalar = np.asarray(rho).ndim == 0
    rho_arr = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(rho_arr < -1e-12) or np.any(rho_arr > n + 1e-12):
        raise OutOfRange("total density must lie in [0, n]", n=n)
    rho_arr = np.clip(rho_arr, 0.0, n)

    out = np.zeros((n,) + rho_arr.shape, dtype=float)
    for alpha in range(dec.m):
        lanes = list(dec.classes[alpha])
        lam = dec.lam[alpha]
        lo, hi = dec.window(alpha)
        sel = (rho_arr >= lo) & (rho_arr <= hi) if alpha == 0 else (rho_arr >= lo) & (rho_arr < hi)
        if not np.any(sel):
            continue
        t = _solve_class_parameter(lam, rho_arr[sel] - lo, M.tol)
        vals = _class_lane_values(lam, t)
        for k, lane in enumerate(lanes):
            out[lane][sel] = vals[k]
        for beta in range(alpha + 1, dec.m):
            for lane in dec.classes[beta]:
                out[lane][sel] = 1.0
    return out[:, 0] if scalar else out


def boundary_derivative_weights(dec: ClassDecomposition, alpha: int) -> tuple[np.ndarray, np.ndarray]:
    """One-sided slopes of the lane densities at the ends of class alpha's window.

    At the empty end lane i fills at rate e_i = lam_i / sum(lam); at the full
    end it approaches 1 at rate f_i = (1/lam_i) / sum(1/lam).  Both vectors
    sum to 1.
    """
    lam = dec.lam[alpha]
    e = lam / lam.sum()
    inv = 1.0 / lam
    f = inv / inv.sum()
    return e, f


def _interior_lane_derivatives(lam: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(d rho_i/d rho, d^2 rho_i/d rho^2) on the class interior, vectorized in c.

    Chain rule through the class parameter: with A_i = d rho_i/dc,
    the first derivative is A_i / sum(A) and the second
    (A_i' sum(A) - A_i sum(A')) / sum(A)^3.
    """
    cc = c[None, :]
    ll = lam[:, None]
    A = ll / (1.0 + cc * ll) ** 2
    Ap = -2.0 * ll**2 / (1.0 + cc * ll) ** 3
    S = A.sum(axis=0)
    Sp = Ap.sum(axis=0)
    first = A / S
    second = (Ap * S - A * Sp) / S**3
    return first, second


def _limit_lane_derivatives(lam: np.ndarray, end: str) -> tuple[np.ndarray, np.ndarray]:
    """Limits of the interior lane derivatives at the empty/full end of a class."""
    if end == "empty":
        A, Ap = lam, -2.0 * lam**2
    else:
        A, Ap = 1.0 / lam, 2.0 / lam**2
    S, Sp = A.sum(), Ap.sum()
    first = A / S
    second = (Ap * S - A * Sp) / S**3
    return first, second


def manifold_derivative(M: EquilibriumManifold, rho: float) -> tuple[np.ndarray, np.ndarray]:
    """One-sided derivatives (left, right) of every lane density at rho.

    Interior points of a class window return equal vectors; at a class
    boundary the left vector carries the saturating class's f-weights and the
    right vector the filling class's e-weights.  Each vector sums to 1.
    """
    dec = M.decomposition
    n = M.n
    if rho < -1e-12 or rho > n + 1e-12:
        raise OutOfRange("total density must lie in [0, n]", n=n)
    rho = min(max(rho, 0.0), float(n))

    def one_sided(side: str) -> np.ndarray:
        out = np.zeros(n)
        for alpha in range(dec.m):
            lo, hi = dec.window(alpha)
            at_lo = abs(rho - lo) < _BOUNDARY_EPS
            at_hi = abs(rho - hi) < _BOUNDARY_EPS
            lanes = list(dec.classes[alpha])
            lam = dec.lam[alpha]
            if at_lo and (side == "right" or lo == 0.0):
                out[lanes], _ = _limit_lane_derivatives(lam, "empty")
                return out
            if at_hi and (side == "left" or hi == float(n)):
                out[lanes], _ = _limit_lane_derivatives(lam, "full")
                return out
            if lo < rho < hi and not (at_lo or at_hi):
                t = _solve_class_parameter(lam, np.array([rho - lo]), M.tol)[0]
                c = t / (1.0 - t)
                first, _ = _interior_lane_derivatives(lam, np.array([c]))
                out[lanes] = first[:, 0]
                return out
        raise OutOfRange("total density must lie in [0, n]", n=n)

    return one_sided("left"), one_sided("right")


def flux_G(M: EquilibriumManifold, rho):
    """Macroscopic flux sum_i gamma_i rho_i (1 - rho_i) on the manifold."""
    pts = manifold_point(M, rho)
    g = M.gamma.reshape((M.n,) + (1,) * (pts.ndim - 1))
    return (g * pts * (1.0 - pts)).sum(axis=0)


def flux_derivatives_grid(M: EquilibriumManifold, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Gp_left, Gp_right, Gpp) on a grid, exact through the class chain rule.

    Gpp holds the right-limit value at class boundaries (left limit at the
    top of the density range); elsewhere the two limits agree.
    """
    dec = M.decomposition
    gam = M.gamma
    grid = np.asarray(grid, dtype=float)
    gpl = np.empty_like(grid)
    gpr = np.empty_like(grid)
    gpp = np.empty_like(grid)

    def fill(mask: np.ndarray, alpha: int, where: str):
        if not np.any(mask):
            return
        lam = dec.lam[alpha]
        lanes = list(dec.classes[alpha])
        g = gam[lanes][:, None]
        lo, _ = dec.window(alpha)
        if where == "interior":
            t = _solve_class_parameter(lam, grid[mask] - lo, M.tol)
            c = t / (1.0 - t)
            vals = _class_lane_values(lam, t)
            first, second = _interior_lane_derivatives(lam, c)
            gp = (g * (1.0 - 2.0 * vals) * first).sum(axis=0)
            g2 = (g * ((1.0 - 2.0 * vals) * second - 2.0 * first**2)).sum(axis=0)
            gpl[mask] = gp
            gpr[mask] = gp
            gpp[mask] = g2
        elif where == "empty":
            first, second = _limit_lane_derivatives(lam, "empty")
            gp = float((gam[lanes] * first).sum())
            g2 = float((gam[lanes] * (second - 2.0 * first**2)).sum())
            gpr[mask] = gp
            gpp[mask] = g2
        else:
            first, second = _limit_lane_derivatives(lam, "full")
            gp = float(-(gam[lanes] * first).sum())
            g2 = float((gam[lanes] * (-second - 2.0 * first**2)).sum())
            gpl[mask] = gp

    for alpha in range(dec.m):
        lo, hi = dec.window(alpha)
        interior = (grid > lo + _BOUNDARY_EPS) & (grid < hi - _BOUNDARY_EPS)
        fill(interior, alpha, "interior")
        fill(np.abs(grid - lo) <= _BOUNDARY_EPS, alpha, "empty")
        fill(np.abs(grid - hi) <= _BOUNDARY_EPS, alpha, "full")
    # Domain endpoints have only one side; mirror it.
    end_lo = np.abs(grid - 0.0) <= _BOUNDARY_EPS
    end_hi = np.abs(grid - M.n) <= _BOUNDARY_EPS
    gpl[end_lo] = gpr[end_lo]
    gpr[end_hi] = gpl[end_hi]
    # At the top end the right-limit curvature does not exist; keep the left one.
    if np.any(end_hi):
        lam = dec.lam[0]
        lanes = list(dec.classes[0])
        first, second = _limit_lane_derivatives(lam, "full")
        gpp[end_hi] = float((gam[lanes] * (-second - 2.0 * first**2)).sum())
    return gpl, gpr, gpp


# ---------------------------------------------------------------------------
# Two-lane closed form


def _two_lane_phi_chain(r: float, rho: np.ndarray):
    """phi and its first two derivatives for the two-lane manifold gap.

    phi is half the gap rho0 - rho1; with k = (r-1)/(r+1) and
    psi = 1 + k^2 rho (rho - 2):
        phi   = k rho (2 - rho) / (2 (1 + sqrt(psi)))
        phi'  = -(k/2) (rho - 1) / sqrt(psi)
        phi'' = -(k/2) (1 - k^2) / psi^(3/2)
    The first form is the cancellation-free rewrite of
    ((r+1)/(r-1)) (1 - sqrt(psi)) / 2 and is exact at r = 1.
    """
    k = (r - 1.0) / (r + 1.0)
    psi = 1.0 + k * k * rho * (rho - 2.0)
    psi = np.maximum(psi, 1e-300)
    sq = np.sqrt(psi)
    phi = k * rho * (2.0 - rho) / (2.0 * (1.0 + sq))
    phi1 = -(k / 2.0) * (rho - 1.0) / sq
    phi2 = -(k / 2.0) * (1.0 - k * k) / (psi * sq)
    return phi, phi1, phi2


def two_lane_manifold(r: float, rho) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form lane densities (rho0, rho1) of the two-lane manifold.

    r = q(1,0)/q(0,1); r > 1 favors lane 0.  r = 0 and r = inf use the
    degenerate one-lane-at-a-time limits explicitly.
    """
    rho = np.asarray(rho, dtype=float)
    if r == math.inf:
        lane0 = np.minimum(rho, 1.0)
        return lane0, rho - lane0
    if r == 0:
        lane1 = np.minimum(rho, 1.0)
        return rho - lane1, lane1
    phi, _, _ = _two_lane_phi_chain(r, rho)
    return rho / 2.0 + phi, rho / 2.0 - phi


def two_lane_flux(gamma0: float, gamma1: float, r: float, rho):
    """Closed-form macroscopic flux of the two-lane model.

    r in [0, inf], rho in [0, 2].  The degenerate ratios produce the glued
    one-lane fluxes gamma0 rho(1-rho) on [0,1] then gamma1 (rho-1)(2-rho).
    """
    scalar = np.asarray(rho).ndim == 0
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(rho < -1e-12) or np.any(rho > 2 + 1e-12):
        raise OutOfRange("two-lane total density must lie in [0, 2]")
    rho0, rho1 = two_lane_manifold(r, rho)
    val = gamma0 * rho0 * (1.0 - rho0) + gamma1 * rho1 * (1.0 - rho1)
    return float(val[0]) if scalar else val


def two_lane_flux_derivatives(gamma0: float, gamma1: float, r: float, rho):
    """Closed-form (G', G'') of the two-lane flux, vectorized over rho.

    Valid for finite positive r.  With s = gamma0 + gamma1, d = gamma0 - gamma1,
    and mid-bump m = (rho/2)(1 - rho/2):
        G   = s (m - phi^2) + d (1 - rho) phi
        G'  = s ((1-rho)/2 - 2 phi phi') + d (-phi + (1-rho) phi')
        G'' = s (-1/2 - 2 phi'^2 - 2 phi phi'') + d (-2 phi' + (1-rho) phi'')
    """
    if not (0 < r < math.inf):
        raise OutOfRange("analytic derivatives need finite positive r", r=r)
    scalar = np.asarray(rho).ndim == 0
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    s = gamma0 + gamma1
    d = gamma0 - gamma1
    phi, p1, p2 = _two_lane_phi_chain(r, rho)
    gp = s * ((1.0 - rho) / 2.0 - 2.0 * phi * p1) + d * (-phi + (1.0 - rho) * p1)
    gpp = s * (-0.5 - 2.0 * p1**2 - 2.0 * phi * p2) + d * (-2.0 * p1 + (1.0 - rho) * p2)
    if scalar:
        return float(gp[0]), float(gpp[0])
    return gp, gpp


# ---------------------------------------------------------------------------
# Tabulated flux curves


@dataclass
class FluxCurve:
    """Flux tabulation on a density interval with one-sided derivatives.

    ``exact`` (and optionally ``exact_second``) give callables for off-grid
    evaluation; purely tabulated curves fall back to piecewise-linear
    interpolation.  ``closed_form`` carries the two-lane parameters when they
    apply.
    """

    grid: np.ndarray
    G: np.ndarray
    Gp_left: np.ndarray
    Gp_right: np.ndarray
    Gpp: np.ndarray | None = None
    closed_form: dict | None = None
    exact: Callable | None = field(default=None, repr=False)
    exact_second: Callable | None = field(default=None, repr=False)

    @property
    def lo(self) -> float:
        return float(self.grid[0])

    @property
    def hi(self) -> float:
        return float(self.grid[-1])

    def __call__(self, rho):
        if self.exact is not None:
            return self.exact(rho)
        return np.interp(rho, self.grid, self.G)

    def max_speed(self) -> float:
        return float(
            max(np.nanmax(np.abs(self.Gp_left)), np.nanmax(np.abs(self.Gp_right)))
        )


def flux_curve_from_manifold(M: EquilibriumManifold, npts: int = 2001) -> FluxCurve:
    """Tabulate G on [0, n], inserting class boundaries into the grid."""
    n = M.n
    grid = np.linspace(0.0, n, npts)
    interior = [float(M.decomposition.N_alpha[a]) for a in range(M.decomposition.m - 1)]
    if interior:
        grid = np.unique(np.concatenate([grid, np.array(interior)]))
    G = flux_G(M, grid)
    gpl, gpr, gpp = flux_derivatives_grid(M, grid)

    cf = None
    if M.decomposition.m == 1 and n == 2:
        lam = M.decomposition.lam_of_lane()
        cf = {
            "kind": "two_lane",
            "gamma0": float(M.gamma[0]),
            "gamma1": float(M.gamma[1]),
            "r": float(lam[0] / lam[1]),
        }

    # Off-grid evaluation uses a maximally tight inversion so the curve is
    # smooth at the floating-point scale (optimizer refinement relies on it).
    M_tight = EquilibriumManifold(spec=M.spec, decomposition=M.decomposition,
                                  gamma=M.gamma, tol=1e-16)

    def exact(rho):
        return flux_G(M_tight, rho)

    def exact_second(rho):
        scalar = np.asarray(rho).ndim == 0
        _, _, g2 = flux_derivatives_grid(M_tight, np.atleast_1d(np.asarray(rho, dtype=float)))
        return float(g2[0]) if scalar else g2

    return FluxCurve(
        grid=grid, G=G, Gp_left=gpl, Gp_right=gpr, Gpp=gpp,
        closed_form=cf, exact=exact, exact_second=exact_second,
    )


def flux_curve_two_lane(gamma0: float, gamma1: float, r: float, npts: int = 2001) -> FluxCurve:
    """Closed-form two-lane flux curve on [0, 2]."""
    grid = np.linspace(0.0, 2.0, npts)
    G = two_lane_flux(gamma0, gamma1, r, grid)
    cf = {"kind": "two_lane", "gamma0": gamma0, "gamma1": gamma1, "r": r}

    def exact(rho):
        return two_lane_flux(gamma0, gamma1, r, rho)

    if 0 < r < math.inf:
        gp, gpp = two_lane_flux_derivatives(gamma0, gamma1, r, grid)

        def exact_second(rho):
            return two_lane_flux_derivatives(gamma0, gamma1, r, rho)[1]

        return FluxCurve(
            grid=grid, G=np.asarray(G), Gp_left=gp.copy(), Gp_right=gp.copy(),
            Gpp=gpp, closed_form=cf, exact=exact, exact_second=exact_second,
        )

    # Degenerate ratio: one-lane fluxes glued at rho = 1 with a kink.
    low = grid <= 1.0
    ga, gb = (gamma0, gamma1) if r == math.inf else (gamma1, gamma0)
    gp = np.where(low, ga * (1.0 - 2.0 * grid), gb * (3.0 - 2.0 * grid))
    gpl = gp.copy()
    gpr = gp.copy()
    at1 = np.isclose(grid, 1.0)
    gpl[at1] = -ga
    gpr[at1] = gb
    gpp = np.where(low, -2.0 * ga, -2.0 * gb)

    def exact_second_deg(rho):
        rho = np.asarray(rho, dtype=float)
        return np.where(rho <= 1.0, -2.0 * ga, -2.0 * gb)

    return FluxCurve(
        grid=grid, G=np.asarray(G), Gp_left=gpl, Gp_right=gpr, Gpp=gpp,
        closed_form=cf, exact=exact, exact_second=exact_second_deg,
    )
