"""Model definition and structural analysis of the interlane kernel.

A model is a ladder of ``n`` lanes.  Particles hop right/left along lane
``i`` at rates ``d[i]``/``l[i]`` and change lane ``i -> j`` at rate
``q[i][j]``.  This module validates the rate tables, decomposes the lane set
into linearly ordered irreducibility classes with reversible weights, and
computes the graph-diameter exponents that constrain the interlane
time-scale schedule.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    ConfigInvalid,
    ExponentTooSmall,
    NoReversibleMeasure,
    NotWeaklyIrreducible,
    ZeroLaneRate,
)

# Relative mismatch on a cycle above which the kernel is declared
# non-reversible (exact condition, checked in floating point).
CYCLE_TOL = 1e-9


@dataclass(frozen=True)
class ThetaMode:
    """Interlane time-scale schedule: theta(N) = N or ceil(N**a)."""

    mode: str = "linear"  # "linear" | "power"
    a: float | None = None

    def __post_init__(self):
        if self.mode not in ("linear", "power"):
            raise ConfigInvalid(f"unknown theta mode {self.mode!r}", mode=self.mode)
        if self.mode == "power":
            if self.a is None or not (0.0 < self.a <= 1.0):
                raise ConfigInvalid(
                    "power schedule needs an exponent in (0, 1]", a=self.a
                )


@dataclass(frozen=True)
class ModelSpec:
    """Validated parameterization of a multilane exclusion process.

    Construct through :func:`validate_model`; the constructor itself does not
    check the structural assumptions.
    """

    n: int
    d: np.ndarray  # right jump rate per lane
    l: np.ndarray  # left jump rate per lane
    q: np.ndarray  # interlane rates, q[i, j] >= 0, zero diagonal
    theta_mode: ThetaMode = field(default_factory=ThetaMode)

    @property
    def gamma(self) -> np.ndarray:
        """Mean drift per lane, d - l."""
        return self.d - self.l

    def to_json_dict(self) -> dict:
        theta: dict = {"mode": self.theta_mode.mode}
        if self.theta_mode.a is not None:
            theta["a"] = self.theta_mode.a
        return {
            "n": self.n,
            "d": self.d.tolist(),
            "l": self.l.tolist(),
            "q": self.q.tolist(),
            "theta": theta,
        }


@dataclass(frozen=True)
class ClassDecomposition:
    """Linearly ordered irreducibility classes of the interlane kernel.

    ``classes[alpha]`` lists the lanes of class alpha; kernel transitions
    between classes only go from class alpha to classes with larger labels,
    so the last class is the unique recurrent one.  ``lam[alpha]`` holds the
    reversible weights of that class, normalized so the class minimum is 1.
    ``N_alpha[alpha]`` counts the lanes in classes after alpha (the classes
    that saturate first as the total density grows).
    """

    classes: tuple[tuple[int, ...], ...]
    lam: tuple[np.ndarray, ...]
    n_alpha: np.ndarray
    N_alpha: np.ndarray

    @property
    def m(self) -> int:
        return len(self.classes)

    @property
    def n(self) -> int:
        return int(self.n_alpha.sum())

    def window(self, alpha: int) -> tuple[float, float]:
        """Total-density interval on which class ``alpha`` is the active one."""
        lo = float(self.N_alpha[alpha])
        hi = float(self.N_alpha[alpha - 1]) if alpha > 0 else float(self.n)
        return lo, hi

    def class_of_lane(self) -> np.ndarray:
        out = np.empty(self.n, dtype=np.int64)
        for a, lanes in enumerate(self.classes):
            for i in lanes:
                out[i] = a
        return out

    def lam_of_lane(self) -> np.ndarray:
        out = np.empty(self.n, dtype=float)
        for a, lanes in enumerate(self.classes):
            for k, i in enumerate(lanes):
                out[i] = self.lam[a][k]
        return out


@dataclass(frozen=True)
class CouplingExponents:
    """Kernel graph diameter n* and the derived exponent m*.

    m* controls the minimal admissible growth of the interlane schedule:
    power exponents must exceed 1 - 1/m*.
    """

    n_star: int
    m_star: int
    d_q: np.ndarray  # pairwise unoriented graph distances


def _as_rate_vector(x, n: int, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape != (n,):
        raise ConfigInvalid(f"{name} must have length {n}", got=list(arr.shape))
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ConfigInvalid(f"{name} must be finite and nonnegative")
    return arr


def validate_model(raw) -> ModelSpec:
    """Check a candidate rate table against the structural assumptions.

    Accepts a dict (the JSON document layout), a ModelSpec, or keyword-style
    mapping.  Returns a validated ModelSpec or raises a structured error
    naming the violated assumption: ZeroLaneRate if some lane has no
    horizontal motion, NotWeaklyIrreducible if some lane pair is not
    connected by the kernel or its reverse, NoReversibleMeasure if a class
    admits no positive reversible measure (one-way edge inside a class or a
    failed cycle condition).
    """
    if isinstance(raw, ModelSpec):
        data = raw.to_json_dict()
    elif isinstance(raw, dict):
        data = raw
    else:
        raise ConfigInvalid(f"cannot interpret {type(raw).__name__} as a model")

    try:
        n = int(data["n"])
    except (KeyError, TypeError, ValueError):
        raise ConfigInvalid("model document needs an integer lane count 'n'")
    if n < 1:
        raise ConfigInvalid("lane count must be >= 1", n=n)

    d = _as_rate_vector(data.get("d", [0.0] * n), n, "d")
    l = _as_rate_vector(data.get("l", [0.0] * n), n, "l")
    q = np.asarray(data.get("q", np.zeros((n, n))), dtype=float)
    if q.shape != (n, n):
        raise ConfigInvalid(f"q must be an {n}x{n} matrix", got=list(q.shape))
    if not np.all(np.isfinite(q)) or np.any(q < 0):
        raise ConfigInvalid("q must be finite and nonnegative")
    if np.any(np.diag(q) != 0):
        raise ConfigInvalid("q must have a zero diagonal")

    theta_raw = data.get("theta", {"mode": "linear"})
    if isinstance(theta_raw, ThetaMode):
        theta = theta_raw
    else:
        theta = ThetaMode(mode=theta_raw.get("mode", "linear"), a=theta_raw.get("a"))

    zero = np.nonzero(d + l == 0)[0]
    if zero.size:
        raise ZeroLaneRate(
            f"lane {zero[0]} has d+l = 0; every lane needs horizontal motion",
            lane=int(zero[0]),
        )

    spec = ModelSpec(n=n, d=d, l=l, q=q, theta_mode=theta)
    # Raises on structural violations; the decomposition itself is cheap.
    irreducibility_classes(spec)
    return spec


def load_model(path) -> ModelSpec:
    """Read and validate a model JSON document."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(
            f"malformed model JSON: {exc.msg}", line=exc.lineno, column=exc.colno
        )
    except OSError as exc:
        raise ConfigInvalid(f"cannot read model file: {exc}", path=str(path))
    return validate_model(data)


def _reachability(support: np.ndarray) -> np.ndarray:
    """Boolean transitive closure (including self) of a directed support graph."""
    n = support.shape[0]
    reach = support | np.eye(n, dtype=bool)
    for _ in range(n):
        new = reach | ((reach.astype(np.int8) @ reach.astype(np.int8)) > 0)
        if np.array_equal(new, reach):
            break
        reach = new
    return reach


def irreducibility_classes(spec: ModelSpec) -> ClassDecomposition:
    """Decompose the lane set into the unique ordered class sequence.

    Classes are the strong components of the kernel's directed support graph.
    Weak irreducibility forces the component DAG to be a chain; classes are
    labeled along it, recurrent class last.  Reversible weights are built on
    a spanning tree of each class's symmetric support via rate-ratio products
    and every off-tree edge is checked for cycle consistency.
    """
    n, q = spec.n, spec.q
    support = q > 0
    reach = _reachability(support)

    both = reach & reach.T
    visited = np.zeros(n, dtype=bool)
    comps: list[list[int]] = []
    for i in range(n):
        if not visited[i]:
            members = np.nonzero(both[i])[0]
            visited[members] = True
            comps.append([int(m) for m in members])

    # Weak irreducibility: every ordered pair connected one way or the other.
    if not np.all(reach | reach.T):
        bad = np.argwhere(~(reach | reach.T))
        i, j = (int(v) for v in bad[0])
        raise NotWeaklyIrreducible(
            f"lanes {i} and {j} are not connected by the kernel or its reverse",
            lanes=[i, j],
        )

    # Order components along the condensation chain (edges point forward):
    # a component's rank is the number of components that can reach it.
    ranks = [sum(bool(reach[o[0], c[0]]) for o in comps) for c in comps]
    comps = [c for _, c in sorted(zip(ranks, comps))]

    lam_list: list[np.ndarray] = []
    for members in comps:
        lam_list.append(_reversible_weights(q, members))

    n_alpha = np.array([len(c) for c in comps], dtype=np.int64)
    m = len(comps)
    N_alpha = np.array([n_alpha[a + 1 :].sum() for a in range(m)], dtype=np.int64)
    return ClassDecomposition(
        classes=tuple(tuple(c) for c in comps),
        lam=tuple(lam_list),
        n_alpha=n_alpha,
        N_alpha=N_alpha,
    )


def _reversible_weights(q: np.ndarray, members: list[int]) -> np.ndarray:
    """Positive reversible weights on one irreducibility class, min-normalized."""
    k = len(members)
    if k == 1:
        return np.ones(1)

    idx = {lane: pos for pos, lane in enumerate(members)}
    # Inside a class a one-way edge kills reversibility outright:
    # lam_i q(i,j) = lam_j q(j,i) with one side zero forces lam = 0 somewhere.
    for i in members:
        for j in members:
            if (q[i, j] > 0) != (q[j, i] > 0):
                raise NoReversibleMeasure(
                    f"one-way transition {i}->{j} inside an irreducibility class",
                    lanes=[int(i), int(j)],
                )

    lam = np.full(k, np.nan)
    lam[0] = 1.0
    stack = [members[0]]
    seen = {members[0]}
    while stack:
        i = stack.pop()
        for j in members:
            if j not in seen and q[i, j] > 0:
                lam[idx[j]] = lam[idx[i]] * q[i, j] / q[j, i]
                seen.add(j)
                stack.append(j)

    # Cycle consistency on every edge, relative to the larger side.
    for i in members:
        for j in members:
            if i < j and q[i, j] > 0:
                a = lam[idx[i]] * q[i, j]
                b = lam[idx[j]] * q[j, i]
                if abs(a - b) > CYCLE_TOL * max(a, b):
                    raise NoReversibleMeasure(
                        "cycle condition fails: no reversible measure on class "
                        f"containing lanes {members}",
                        lanes=[int(i), int(j)],
                        mismatch=float(abs(a - b) / max(a, b)),
                    )
    return lam / lam.min()


def coupling_exponents(spec: ModelSpec) -> CouplingExponents:
    """Diameter of the unoriented kernel graph and the schedule exponent.

    n* is the BFS diameter of the support of q or its reverse; m* follows by
    the closed formula floor(n*/2) * (n* - 1 - floor(n*/2)) + n*.  A single
    lane has no pairs; n* = 0 and m* = 1 by convention (no constraint).
    """
    n = spec.n
    undirected = (spec.q > 0) | (spec.q.T > 0)
    dist = np.full((n, n), np.iinfo(np.int64).max, dtype=np.int64)
    for s in range(n):
        dist[s, s] = 0
        frontier = [s]
        step = 0
        while frontier:
            step += 1
            nxt = []
            for u in frontier:
                for v in np.nonzero(undirected[u])[0]:
                    if dist[s, v] > step:
                        dist[s, v] = step
                        nxt.append(int(v))
            frontier = nxt
    if n == 1:
        return CouplingExponents(n_star=0, m_star=1, d_q=dist)
    n_star = int(dist.max())
    half = n_star // 2
    m_star = half * (n_star - 1 - half) + n_star
    return CouplingExponents(n_star=n_star, m_star=max(m_star, 1), d_q=dist)


def theta_schedule(N: int, mode: ThetaMode, m_star: int = 1) -> int:
    """Evaluate theta(N) for the given schedule.

    The power schedule is only admissible when its exponent exceeds
    1 - 1/m*; smaller exponents grow too slowly for the interlane dynamics
    to equilibrate and are rejected.
    """
    if N < 1:
        raise ConfigInvalid("scale N must be >= 1", N=N)
    if mode.mode == "linear":
        return int(N)
    a = float(mode.a)
    threshold = 1.0 - 1.0 / max(m_star, 1)
    if a <= threshold:
        raise ExponentTooSmall(
            f"power exponent {a} <= 1 - 1/m* = {threshold}; schedule grows too slowly",
            a=a,
            m_star=m_star,
            threshold=threshold,
        )
    return int(math.ceil(N**a))


def two_lane_model(
    gamma0: float,
    gamma1: float,
    r: float,
    theta: ThetaMode | None = None,
) -> ModelSpec:
    """Two-lane model with drifts (gamma0, gamma1) and rate ratio r = q(1,0)/q(0,1).

    Interlane rates are normalized to q(0,1) + q(1,0) = 1; only the ratio
    matters for the equilibrium manifold.  Drifts of either sign are realized
    with d = max(gamma, 0), l = max(-gamma, 0); a zero drift uses a symmetric
    unit rate to keep the lane active.
    """
    if not (0 <= r <= math.inf):
        raise ConfigInvalid("r must be in [0, inf]", r=r)
    if r == math.inf:
        p, qq = 0.0, 1.0
    else:
        p, qq = 1.0 / (1.0 + r), r / (1.0 + r)

    def rates(g: float) -> tuple[float, float]:
        if g > 0:
            return g, 0.0
        if g < 0:
            return 0.0, -g
        return 1.0, 1.0

    d0, l0 = rates(gamma0)
    d1, l1 = rates(gamma1)
    return validate_model(
        {
            "n": 2,
            "d": [d0, d1],
            "l": [l0, l1],
            "q": [[0.0, p], [qq, 0.0]],
            "theta": theta or ThetaMode(),
        }
    )


def chain_model(
    n: int,
    down: float,
    up: float,
    d: Sequence[float] | None = None,
    l: Sequence[float] | None = None,
) -> ModelSpec:
    """Nearest-neighbor lane chain: rate ``down`` for i -> i+1, ``up`` for i -> i-1."""
    q = np.zeros((n, n))
    for i in range(n - 1):
        q[i, i + 1] = down
        q[i + 1, i] = up
    return validate_model(
        {
            "n": n,
            "d": list(d) if d is not None else [1.0] * n,
            "l": list(l) if l is not None else [0.0] * n,
            "q": q,
        }
    )
