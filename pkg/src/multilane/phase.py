"""Two-lane flux shape classification.

For the normalized two-lane family (drifts d and 1-d, interlane rate ratio
r >= 1) the flux on (0,2) is strictly concave, or has one or two inflexion
points, depending on where (d, r) falls relative to a small set of critical
curves.  The classifier implements the closed-form region boundaries; an
independent numerical counter samples the second derivative on a fine grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .equilibrium import FluxCurve, two_lane_flux_derivatives
from .errors import GridTooCoarse, OutOfRange

# Asymmetry thresholds splitting the classification cases.
D_TILDE_1 = 0.5 + math.sqrt(3.0 + 2.0 * math.sqrt(3.0)) / 6.0   # cubic gains a double root
D_TILDE_0 = 0.5 + math.sqrt(3.0) / 4.0                          # curve ordering flips
D_BAR_1 = 0.5 + math.sqrt(2.0 * math.sqrt(3.0)) / 4.0           # curvature peak sign fixes
D_1 = (4.0 + math.sqrt(2.0)) / 6.0                              # cubic derivative degenerates

# Optional placement diagnostic: where the midpoint curvature changes sign,
# and the asymmetry below/above which that ratio sits outside the root pair.
R_MID_POSITIVE = (2.0 + math.sqrt(3.0)) ** 2                    # G''(1) > 0 above this r
D_MID_SPLIT = 0.5 * (1.0 + 14.0 * math.sqrt(3.0) / 27.0)

ROOT_TOL = 1e-12


@dataclass(frozen=True)
class PhasePoint:
    """Shape classification of one (d, r) parameter point."""

    d: float
    r: float
    region: str           # one of {"2i", "2ii", "2iii", "2iv", "2v"}
    inflexions: int       # inflexion count of the flux on (0, 2)
    sign_change: bool     # whether the flux vanishes inside (0, 2)


def g_cubic(d: float, r):
    """Cubic whose positivity decides the curvature sign at full density.

    g(r) = r^3 (1-d) + r^2 (2-3d) + r (3d-1) + d; the flux curvature at
    density 2 is negative exactly when g(r) > 0.
    """
    r = np.asarray(r, dtype=float)
    val = r**3 * (1.0 - d) + r**2 * (2.0 - 3.0 * d) + r * (3.0 * d - 1.0) + d
    return float(val) if val.ndim == 0 else val


def r_tilde1(d: float) -> float:
    """Ratio above which the curvature peak moves left of density 2."""
    s = 2.0 * d - 1.0
    return 2.0 * s + math.sqrt(4.0 * s * s + 1.0)


def a1_coefficient(d: float) -> float:
    """Auxiliary coefficient deciding the sign of the curvature peak.

    Stable product form 1 / (4 sqrt(d(1-d)) (1 + 2 sqrt(d(1-d)))); equals the
    quotient (-1 + 1/(2 sqrt(d(1-d)))) / (2 (2d-1)^2) without the 0/0 at
    d = 1/2.  Defined for d in [1/2, 1).
    """
    if not (0.5 <= d < 1.0):
        raise OutOfRange("a1 is defined for d in [1/2, 1)", d=d)
    s = math.sqrt(d * (1.0 - d))
    return 1.0 / (4.0 * s * (1.0 + 2.0 * s))


def r_bar1(d: float) -> float | None:
    """Ratio at which the curvature peak changes sign; None for d > D_BAR_1."""
    if d > D_BAR_1:
        return None
    a = a1_coefficient(d)
    if a > 1.0:  # only by rounding right at the threshold
        a = 1.0
    return (1.0 + math.sqrt(1.0 - a)) ** 2 / a


def _grow_bracket(d: float, start: float, want_negative: bool) -> float:
    hi = max(2.0 * start, 4.0)
    for _ in range(200):
        val = g_cubic(d, hi)
        if (val < 0) == want_negative and val != 0:
            return hi
        hi *= 2.0
    raise RuntimeError("bracket growth failed")


def g_roots(d: float) -> tuple[float | None, float | None]:
    """Roots (r3, r4) of the cubic on [1, inf), where they exist.

    For d below D_TILDE_1 the cubic is positive on the whole ray.  Between
    D_TILDE_1 and 1 there is a root pair bracketed by the stationary points
    of the cubic; at d >= 1 only the lower root survives (r4 -> inf).
    """
    if d < 0.5:
        raise OutOfRange("normalize to d >= 1/2 first", d=d)
    if d >= 1.0:
        if d == 1.0:
            return 1.0 + math.sqrt(2.0), None
        hi = _grow_bracket(d, 4.0, want_negative=True)
        return float(brentq(lambda r: g_cubic(d, r), 1.0, hi, xtol=ROOT_TOL)), None
    delta = 18.0 * d * d - 24.0 * d + 7.0
    if delta <= 0:
        return None, None
    sq = math.sqrt(delta)
    r1 = (3.0 * d - 2.0 - sq) / (3.0 * (1.0 - d))
    r2 = (3.0 * d - 2.0 + sq) / (3.0 * (1.0 - d))
    if r2 <= 1.0:
        return None, None
    g2 = g_cubic(d, r2)
    if g2 > 0.0:
        return None, None
    if g2 == 0.0:
        return r2, r2
    left = max(1.0, r1)
    r3 = float(brentq(lambda r: g_cubic(d, r), left, r2, xtol=ROOT_TOL))
    hi = _grow_bracket(d, r2, want_negative=False)
    r4 = float(brentq(lambda r: g_cubic(d, r), r2, hi, xtol=ROOT_TOL))
    return r3, r4


def critical_curves(d: float) -> dict:
    """All critical ratios at asymmetry d >= 1/2; absent curves map to None."""
    if d < 0.5:
        raise OutOfRange("normalize to d >= 1/2 first", d=d)
    r3, r4 = g_roots(d)
    return {
        "r_tilde1": r_tilde1(d),
        "r_bar1": r_bar1(d) if d < 1.0 else None,
        "r3": r3,
        "r4": r4,
    }


def second_derivative_values(d: float, r: float) -> dict:
    """Closed-form curvature samples of the normalized two-lane flux.

    Returns G''(0), G''(1), G''(2), the curvature-peak location rho0 (where
    the third derivative changes sign, always >= 1), and G'' there.  At r = 1
    the flux is a parabola with constant curvature -1/2 and no peak.
    """
    if r < 1.0:
        raise OutOfRange("normalize to r >= 1 first", r=r)
    if r == 1.0:
        return {
            "Gpp0": -0.5, "Gpp1": -0.5, "Gpp2": -0.5,
            "rho_tilde0": math.nan, "Gpp_peak": -0.5,
        }
    s = 2.0 * d - 1.0
    k = (r - 1.0) / (r + 1.0)
    base = (r * r + 1.0) / (r + 1.0) ** 2
    wing = s * k * (1.0 + 2.0 * r / (r + 1.0) ** 2)
    gpp1 = -1.0 + (r + 1.0) / (4.0 * math.sqrt(r))
    rho0 = 1.0 + s * 4.0 * r / ((r - 1.0) * (r + 1.0))
    psi0 = (4.0 * r / (r + 1.0) ** 2) * (s * s * 4.0 * r / (r + 1.0) ** 2 + 1.0)
    gpp_peak = -1.0 + (1.0 / math.sqrt(psi0)) * (-0.5 + ((r + 1.0) ** 2 / (4.0 * r)) * psi0)
    return {
        "Gpp0": -base - wing,
        "Gpp1": gpp1,
        "Gpp2": -base + wing,
        "rho_tilde0": rho0,
        "Gpp_peak": gpp_peak,
    }


def _normalize(d: float, r: float) -> tuple[float, float]:
    """Fold (d, r) into the classified quadrant d >= 1/2, r >= 1.

    Mirroring the density interval swaps the two drifts and also inverts the
    ratio, so inflexion counts at (d, r), (1-d, r), and (d, 1/r) coincide.
    """
    if r <= 0:
        raise OutOfRange("r must be positive", r=r)
    if r < 1.0:
        r = 1.0 / r
    if d < 0.5:
        d = 1.0 - d
    return d, r


def classify_shape(d: float, r: float) -> PhasePoint:
    """Region tag, inflexion count, and sign change of the two-lane flux.

    Points exactly on a critical curve resolve to the region that carries the
    curve in the closed-case statements (concave at r = r_bar1, single
    inflexion at r = r3 and r = r4).
    """
    d_in, r_in = d, r
    d, r = _normalize(d, r)

    if d <= D_TILDE_1:
        region = "2i"
    elif d <= D_TILDE_0:
        region = "2ii"
    elif d < 1.0:
        region = "2iii"
    elif d == 1.0:
        region = "2iv"
    else:
        region = "2v"

    rb = r_bar1(d) if d < 1.0 else None
    r3, r4 = g_roots(d)

    if region == "2i":
        count = 0 if r <= rb else 2
    elif region == "2ii":
        if r <= rb:
            count = 0
        elif r3 is not None and r3 <= r <= r4:
            count = 1
        else:
            count = 2
    elif region == "2iii":
        if r <= r3:
            count = 0
        elif r <= r4:
            count = 1
        else:
            count = 2
    else:  # 2iv / 2v: no upper root, at most one inflexion
        count = 0 if r <= r3 else 1

    sign_change = bool(d > 1.0 and r > d / (d - 1.0))
    return PhasePoint(d=d_in, r=r_in, region=region, inflexions=count, sign_change=sign_change)


def inflexion_placement(d: float, r: float) -> dict:
    """Optional diagnostic: positions of inflexions relative to density 1.

    Uses the sign of the midpoint curvature (positive above R_MID_POSITIVE)
    and the curvature-peak location: with two inflexions the larger sits
    right of 1; the smaller sits left of 1 exactly when the midpoint
    curvature is already positive.  A single inflexion sits left of 1 only
    in the D_MID_SPLIT regime with positive midpoint curvature.
    """
    d, r = _normalize(d, r)
    point = classify_shape(d, r)
    vals = second_derivative_values(d, r)
    mid_positive = vals["Gpp1"] > 0
    out = {"inflexions": point.inflexions, "mid_curvature_positive": bool(mid_positive)}
    if point.inflexions == 2:
        out["larger_right_of_one"] = True
        out["smaller_left_of_one"] = bool(mid_positive)
    elif point.inflexions == 1:
        out["left_of_one"] = bool(d > D_MID_SPLIT and mid_positive)
    return out


def count_inflexions_numeric(flux: FluxCurve, dead_band: float = 1e-9) -> int:
    """Sign changes of the flux curvature sampled on the tabulation grid.

    Uses the curve's analytic second derivative when present, otherwise a
    five-point finite-difference stencil on the tabulated values.  Samples
    with magnitude below the dead band are treated as exact zeros.  Raises
    GridTooCoarse when two detected changes sit closer than four cells.
    """
    grid = flux.grid
    if grid.size < 4001:
        raise GridTooCoarse("need at least 4001 tabulation points", size=int(grid.size))
    inner = slice(2, -2)
    x = grid[inner]
    if flux.exact_second is not None:
        gpp = np.asarray(flux.exact_second(x), dtype=float)
    elif flux.Gpp is not None:
        gpp = flux.Gpp[inner]
    else:
        G = flux.G
        h = grid[1] - grid[0]
        gpp = (-G[:-4] + 16 * G[1:-3] - 30 * G[2:-2] + 16 * G[3:-1] - G[4:]) / (12 * h * h)
    sign = np.sign(np.where(np.abs(gpp) < dead_band, 0.0, gpp))
    idx = np.nonzero(sign != 0)[0]
    if idx.size == 0:
        return 0
    s = sign[idx]
    flips = np.nonzero(s[1:] != s[:-1])[0]
    positions = idx[flips + 1]
    if positions.size >= 2 and np.diff(positions).min() < 4:
        raise GridTooCoarse(
            "adjacent curvature sign changes closer than four cells",
            min_gap=int(np.diff(positions).min()),
        )
    return int(positions.size)
