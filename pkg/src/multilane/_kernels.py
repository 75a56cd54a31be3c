"""Event-driven simulation kernels (numba-compiled).

State is an occupancy array (columns, lanes) of 0/1.  Occupied sites carry a
lane-dependent total exit rate; a binary indexed tree over sites supports
O(log) rate updates and O(log) sampling of the next jumping particle at
arbitrary rate heterogeneity.  Jump attempts into occupied targets are
suppressed (the clock still rings).  Frozen boundary columns act as
reservoirs: jumps out of them do not deplete them and absorbed particles do
not fill them.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _fenwick_add(tree, i, delta):
    # tree is 1-based; i in [1, m]
    m = tree.shape[0] - 1
    while i <= m:
        tree[i] += delta
        i += i & (-i)


@njit(cache=True)
def _fenwick_prefix(tree, i):
    s = 0.0
    while i > 0:
        s += tree[i]
        i -= i & (-i)
    return s


@njit(cache=True)
def _fenwick_find(tree, m, target):
    """Smallest 0-based site index whose cumulative weight exceeds target."""
    idx = 0
    bit = 1
    while (bit << 1) <= m:
        bit <<= 1
    rem = target
    while bit > 0:
        nxt = idx + bit
        if nxt <= m and tree[nxt] <= rem:
            idx = nxt
            rem -= tree[nxt]
        bit >>= 1
    return idx


@njit(cache=True)
def _pick_move(cum_moves, lane, u):
    # first move slot whose cumulative weight exceeds u
    k = 0
    last = cum_moves.shape[1] - 1
    while k < last and u >= cum_moves[lane, k]:
        k += 1
    return k


@njit(cache=True)
def run_exclusion(occ, pad_mask, w_lane, cum_moves, periodic, T,
                  snap_times, seed, count_jumps):
    """Drive one trajectory to time T, recording snapshots.

    Returns (snaps, t_final, signed_jumps, events); signed_jumps counts
    executed horizontal moves (+right, -left) over all bonds and lanes.
    """
    np.random.seed(seed)
    C, n = occ.shape
    m = C * n
    tree = np.zeros(m + 1)
    for col in range(C):
        for lane in range(n):
            if occ[col, lane] == 1:
                _fenwick_add(tree, col * n + lane + 1, w_lane[lane])

    S = snap_times.shape[0]
    snaps = np.zeros((S, C, n), dtype=np.int8)
    t = 0.0
    snap_i = 0
    jumps = 0
    events = 0

    while True:
        Wtot = _fenwick_prefix(tree, m)
        if Wtot <= 1e-300:
            break
        u = np.random.random()
        while u <= 0.0:
            u = np.random.random()
        t_new = t - np.log(u) / Wtot
        while snap_i < S and snap_times[snap_i] <= t_new:
            snaps[snap_i] = occ
            snap_i += 1
        if t_new >= T:
            t = T
            break
        t = t_new
        events += 1

        site = _fenwick_find(tree, m, np.random.random() * Wtot)
        col = site // n
        lane = site % n
        if occ[col, lane] == 0:
            continue  # numerical drift guard
        move = _pick_move(cum_moves, lane, np.random.random() * w_lane[lane])

        dst_col = col
        dst_lane = lane
        horizontal = 0
        if move == 0:
            dst_col = col + 1
            horizontal = 1
        elif move == 1:
            dst_col = col - 1
            horizontal = -1
        else:
            dst_lane = move - 2
            if dst_lane == lane:
                continue
        if horizontal != 0:
            if periodic:
                dst_col = dst_col % C
            elif dst_col < 0 or dst_col >= C:
                continue

        if occ[dst_col, dst_lane] == 1:
            continue
        src_pad = pad_mask[col] == 1
        dst_pad = pad_mask[dst_col] == 1
        if src_pad and dst_pad:
            continue
        if not src_pad:
            occ[col, lane] = 0
            _fenwick_add(tree, col * n + lane + 1, -w_lane[lane])
        if not dst_pad:
            occ[dst_col, dst_lane] = 1
            _fenwick_add(tree, dst_col * n + dst_lane + 1, w_lane[dst_lane])
        if count_jumps == 1 and horizontal != 0:
            jumps += horizontal

    while snap_i < S:
        snaps[snap_i] = occ
        snap_i += 1
    return snaps, t, jumps, events


@njit(cache=True)
def _site_discrepancy(a, b):
    # returns (plus, minus) at one site
    if a > b:
        return 1, 0
    if b > a:
        return 0, 1
    return 0, 0


@njit(cache=True)
def _suffix_abs_max(A, B):
    """max_z |sum over columns u >= z of (A - B) column totals|."""
    C, n = A.shape
    best = 0
    s = 0
    for col in range(C - 1, -1, -1):
        for lane in range(n):
            s += A[col, lane] - B[col, lane]
        a = s if s >= 0 else -s
        if a > best:
            best = a
    return best


@njit(cache=True)
def run_coupled(A, B, pad_mask, w_lane, cum_moves, periodic, T,
                snap_times, seed, max_events):
    """Drive two copies through one shared clock stream (basic coupling).

    Returns snapshot stacks for both copies, discrepancy counts and the
    suffix-sum statistic per snapshot, final counts, and violation counters
    (positive jumps of either discrepancy count; order violations when the
    initially smaller copy overtakes).  Clocks ring on every site at the full
    exit rate regardless of occupancy, so both copies share one event stream.
    """
    np.random.seed(seed)
    C, n = A.shape
    w_cum = np.empty(n)
    acc = 0.0
    for lane in range(n):
        acc += w_lane[lane]
        w_cum[lane] = acc
    Wtot = C * acc

    dp = 0
    dm = 0
    for col in range(C):
        for lane in range(n):
            p, mi = _site_discrepancy(A[col, lane], B[col, lane])
            dp += p
            dm += mi
    ordered_a_below = dp == 0
    ordered_b_below = dm == 0

    S = snap_times.shape[0]
    snapsA = np.zeros((S, C, n), dtype=np.int8)
    snapsB = np.zeros((S, C, n), dtype=np.int8)
    dp_t = np.zeros(S, dtype=np.int64)
    dm_t = np.zeros(S, dtype=np.int64)
    cross_t = np.zeros(S, dtype=np.int64)
    cross_max = _suffix_abs_max(A, B)

    t = 0.0
    snap_i = 0
    events = 0
    coalescences = 0
    disc_violations = 0
    order_violations = 0

    while events < max_events:
        u = np.random.random()
        while u <= 0.0:
            u = np.random.random()
        t_new = t - np.log(u) / Wtot
        while snap_i < S and snap_times[snap_i] <= t_new:
            snapsA[snap_i] = A
            snapsB[snap_i] = B
            dp_t[snap_i] = dp
            dm_t[snap_i] = dm
            c = _suffix_abs_max(A, B)
            if c > cross_max:
                cross_max = c
            cross_t[snap_i] = c
            snap_i += 1
        if t_new >= T:
            t = T
            break
        t = t_new
        events += 1

        col = int(np.random.random() * C)
        if col == C:
            col = C - 1
        lane = 0
        u2 = np.random.random() * acc
        while lane < n - 1 and u2 >= w_cum[lane]:
            lane += 1
        move = _pick_move(cum_moves, lane, np.random.random() * w_lane[lane])

        dst_col = col
        dst_lane = lane
        horizontal = 0
        if move == 0:
            dst_col = col + 1
            horizontal = 1
        elif move == 1:
            dst_col = col - 1
            horizontal = -1
        else:
            dst_lane = move - 2
            if dst_lane == lane:
                continue
        if horizontal != 0:
            if periodic:
                dst_col = dst_col % C
            elif dst_col < 0 or dst_col >= C:
                continue

        src_pad = pad_mask[col] == 1
        dst_pad = pad_mask[dst_col] == 1
        if src_pad and dst_pad:
            continue
        moveA = A[col, lane] == 1 and A[dst_col, dst_lane] == 0
        moveB = B[col, lane] == 1 and B[dst_col, dst_lane] == 0
        if not (moveA or moveB):
            continue

        p0s, m0s = _site_discrepancy(A[col, lane], B[col, lane])
        p0d, m0d = _site_discrepancy(A[dst_col, dst_lane], B[dst_col, dst_lane])
        if moveA:
            if not src_pad:
                A[col, lane] = 0
            if not dst_pad:
                A[dst_col, dst_lane] = 1
        if moveB:
            if not src_pad:
                B[col, lane] = 0
            if not dst_pad:
                B[dst_col, dst_lane] = 1
        p1s, m1s = _site_discrepancy(A[col, lane], B[col, lane])
        p1d, m1d = _site_discrepancy(A[dst_col, dst_lane], B[dst_col, dst_lane])
        d_plus = (p1s + p1d) - (p0s + p0d)
        d_minus = (m1s + m1d) - (m0s + m0d)
        dp += d_plus
        dm += d_minus
        if d_plus > 0 or d_minus > 0:
            disc_violations += 1
        if d_plus < 0 or d_minus < 0:
            coalescences += 1
        if ordered_a_below and dp > 0:
            order_violations += 1
        if ordered_b_below and dm > 0:
            order_violations += 1

    while snap_i < S:
        snapsA[snap_i] = A
        snapsB[snap_i] = B
        dp_t[snap_i] = dp
        dm_t[snap_i] = dm
        c = _suffix_abs_max(A, B)
        if c > cross_max:
            cross_max = c
        cross_t[snap_i] = c
        snap_i += 1

    return (snapsA, snapsB, dp_t, dm_t, cross_t, dp, dm,
            disc_violations, order_violations, coalescences, cross_max, events, t)
