"""Many-lane limit: normalized hill fluxes and their Riemann solutions.

With n one-way lanes whose drift on lane i is 4 n F(i/n), the normalized
total-density flux on [0,1] is a train of n parabolic hills of width 1/n
whose peak heights sample F.  As n grows the Riemann solution of the hill
flux approaches the F-problem solution for decreasing data and freezes for
increasing data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equilibrium import FluxCurve
from .errors import OutOfRange
from .pde import riemann_solve

POINTS_PER_HILL = 64
JUMP_TOL = 1e-6


@dataclass(frozen=True)
class HillFluxFamily:
    """Hill flux parameters: lane count and peak-height function."""

    n: int
    F: callable

    @property
    def drift(self) -> np.ndarray:
        i = np.arange(self.n)
        return 4.0 * self.n * np.asarray(self.F(i / self.n), dtype=float)


def normalized_flux(n: int, F, u):
    """Hill-train flux at normalized density u in [0, 1].

    On cell i = floor(n u) the value is 4 F(i/n) (n u - i) (i + 1 - n u);
    lattice points give zero, midpoints give F(i/n).
    """
    scalar = np.asarray(u).ndim == 0
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u_arr < -1e-12) or np.any(u_arr > 1 + 1e-12):
        raise OutOfRange("normalized density must lie in [0, 1]")
    u_arr = np.clip(u_arr, 0.0, 1.0)
    i = np.minimum(np.floor(n * u_arr).astype(np.int64), n - 1)
    heights = np.asarray(F(i / n), dtype=float)
    s = n * u_arr - i
    val = 4.0 * heights * s * (1.0 - s)
    return float(val[0]) if scalar else val


def hill_flux_curve(n: int, F, points_per_hill: int = POINTS_PER_HILL) -> FluxCurve:
    """Tabulated hill flux with exact evaluator; lattice points on the grid."""
    grid = np.linspace(0.0, 1.0, points_per_hill * n + 1)
    G = normalized_flux(n, F, grid)
    i = np.minimum(np.floor(n * np.clip(grid, 0, 1 - 1e-15)).astype(np.int64), n - 1)
    heights = np.asarray(F(i / n), dtype=float)
    s = n * grid - i
    gp = 4.0 * n * heights * (1.0 - 2.0 * s)
    gpp = np.full_like(grid, 0.0) - 8.0 * n * n * heights

    def exact(u):
        return normalized_flux(n, F, u)

    return FluxCurve(grid=grid, G=np.asarray(G), Gp_left=gp.copy(), Gp_right=gp.copy(),
                     Gpp=gpp, exact=exact)


def flux_curve_for_target(F, npts: int = 4001) -> FluxCurve:
    """Tabulated curve of the smooth target flux F on [0, 1]."""
    grid = np.linspace(0.0, 1.0, npts)
    vals = np.asarray(F(grid), dtype=float)
    gp = np.gradient(vals, grid)
    return FluxCurve(grid=grid, G=vals, Gp_left=gp, Gp_right=gp.copy(),
                     exact=lambda u: np.asarray(F(np.asarray(u, dtype=float))))


def _interval_distance(value: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    below = np.maximum(lo - value, 0.0)
    above = np.maximum(value - hi, 0.0)
    return np.maximum(below, above)


def manylane_riemann_study(
    F,
    alpha: float,
    beta: float,
    n_list,
    v_grid=None,
    exclusion_factor: float = 4.0,
) -> list[dict]:
    """Distance of the n-hill Riemann profile to the limiting interval field.

    For alpha > beta the limit is the Riemann solution of the target flux F;
    for alpha <= beta it is the frozen step datum.  The reported statistic is
    the sup over the v grid, excluding a shrinking neighborhood (radius
    exclusion_factor / n) of each discontinuity of the limit, of the distance
    from the one-sided hill-flux values to the closed interval spanned by the
    limit's one-sided values.
    """
    if not (0 <= alpha <= 1 and 0 <= beta <= 1):
        raise OutOfRange("states must lie in [0, 1]")
    if v_grid is None:
        v_grid = np.linspace(-1.0, 1.0, 801)
    v_grid = np.asarray(v_grid, dtype=float)

    if alpha > beta:
        target = flux_curve_for_target(F)
        um, up = riemann_solve(target, alpha, beta, v_grid)
    else:
        um = np.where(v_grid <= 0, alpha, beta)
        up = np.where(v_grid < 0, alpha, beta)
    lo = np.minimum(um, up)
    hi = np.maximum(um, up)
    jump_vs = v_grid[np.abs(um - up) > JUMP_TOL]
    if alpha < beta:
        jump_vs = np.concatenate([jump_vs, [0.0]])

    rows = []
    for n in n_list:
        curve = hill_flux_curve(int(n), F)
        num, nup = riemann_solve(curve, alpha, beta, v_grid)
        dist = np.maximum(_interval_distance(num, lo, hi),
                          _interval_distance(nup, lo, hi))
        keep = np.ones(v_grid.size, dtype=bool)
        for vj in jump_vs:
            keep &= np.abs(v_grid - vj) >= exclusion_factor / n
        sup = float(dist[keep].max()) if np.any(keep) else 0.0
        rows.append({"n": int(n), "sup_distance": sup})
    return rows


def logistic(u):
    """Default target flux u (1 - u)."""
    u = np.asarray(u, dtype=float)
    return u * (1.0 - u)
