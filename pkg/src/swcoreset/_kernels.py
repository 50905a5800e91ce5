"""Compiled inner loops. Randomness is always passed in as pre-drawn uniforms."""
from __future__ import annotations

import numpy as np
from numba import njit

EUCLIDEAN, L1, LINF = 0, 1, 2
METRIC_CODES = {"euclidean": EUCLIDEAN, "l1": L1, "linf": LINF}

# status codes returned by meyerson_sweep
DONE, NEEDS_GROWTH, ALL_INVALID = 0, 1, 2


@njit(cache=True, inline="always")
def _dist_z(x, c, z, metric):
    d = x.shape[0]
    if metric == EUCLIDEAN:
        s = 0.0
        for a in range(d):
            t = x[a] - c[a]
            s += t * t
        if z == 2:
            return s
        return np.sqrt(s) ** z
    if metric == L1:
        s = 0.0
        for a in range(d):
            s += abs(x[a] - c[a])
    else:
        s = 0.0
        for a in range(d):
            t = abs(x[a] - c[a])
            if t > s:
                s = t
    if z == 1:
        return s
    return s**z


@njit(cache=True)
def meyerson_sweep(X, W, U, start, centers, cweights, counts, costs, valid, guesses,
                   open_scale, cap, cost_mult, z, metric, state, out_inst, out_local, out_cost):
    """Feed X[start:] through every valid Meyerson instance.

    ``state[0]`` holds the active instance index. For each item the assignment
    made by the active instance is written to the ``out_*`` arrays. Returns
    (status, next index to process).
    """
    n_inst = counts.shape[0]
    alloc = centers.shape[1]
    n = X.shape[0]
    for i in range(start, n):
        # growth must happen before any instance tries to open a center past its buffer
        for s in range(n_inst):
            if valid[s] and counts[s] >= alloc:
                return NEEDS_GROWTH, i
        act = state[0]
        if act < 0 or not valid[act]:
            act = -1
            for s in range(n_inst):
                if valid[s]:
                    act = s
                    break
            if act < 0:
                return ALL_INVALID, i
            state[0] = act
        x = X[i]
        w = W[i]
        for s in range(n_inst):
            if not valid[s]:
                continue
            cnt = counts[s]
            opened = False
            best = 0
            bd = 0.0
            if cnt == 0:
                opened = True
            else:
                bd = np.inf
                for c in range(cnt):
                    dz = _dist_z(x, centers[s, c], z, metric)
                    if dz < bd:
                        bd = dz
                        best = c
                p = open_scale * w * bd / guesses[s]
                if U[i, s] < p:
                    opened = True
            if opened:
                for a in range(x.shape[0]):
                    centers[s, cnt, a] = x[a]
                cweights[s, cnt] = w
                counts[s] = cnt + 1
                if cnt + 1 > cap:
                    valid[s] = False
                if s == act:
                    out_inst[i] = s
                    out_local[i] = cnt
                    out_cost[i] = 0.0
            else:
                cweights[s, best] += w
                costs[s] += w * bd
                if costs[s] >= cost_mult * guesses[s]:
                    valid[s] = False
                if s == act:
                    out_inst[i] = s
                    out_local[i] = best
                    out_cost[i] = bd
    return DONE, n


@njit(cache=True)
def _swap_remove(P, Wt, TS, i, size):
    last = size - 1
    P[i] = P[last]
    Wt[i] = Wt[last]
    TS[i] = TS[last]
    return last


@njit(cache=True)
def importance_pass(X, U, budget, window, z, metric, theta, buffer_size, P, Wt, TS):
    """Whole-stream run of the importance sampler in baselines.py (same rules, same draws).

    ``window <= 0`` disables expiry. P, Wt, TS must hold budget + 1 rows.
    Returns (size, facility, deletions).
    """
    n, d = X.shape
    size = 0
    facility = 0.0
    total = 0.0
    deletions = 0
    buf_cost = np.empty(buffer_size)
    buf_x = np.empty((buffer_size, d))
    buf_ts = np.empty(buffer_size, dtype=np.int64)
    head = 0
    count = 0
    for t in range(1, n + 1):
        x = X[t - 1]
        if window > 0:
            oldest = t - window + 1
            i = 0
            while i < size:
                if TS[i] < oldest:
                    size = _swap_remove(P, Wt, TS, i, size)
                else:
                    i += 1
        if size == 0:
            P[0] = x
            Wt[0] = 1.0
            TS[0] = t
            size = 1
            continue
        j = 0
        best = np.inf
        for i in range(size):
            dz = _dist_z(x, P[i], z, metric)
            if dz < best:
                best = dz
                j = i
        total += best
        # ring buffer of the most recent arrivals
        slot = (head + count) % buffer_size
        if count == buffer_size:
            head = (head + 1) % buffer_size
        else:
            count += 1
        buf_cost[slot] = best
        buf_x[slot] = x
        buf_ts[slot] = t
        if best > 0 and (facility == 0.0 or U[t - 1] < best / facility):
            P[size] = x
            Wt[size] = 1.0
            TS[size] = t
            size += 1
            if size > budget:
                a_best = 0
                b_best = 0
                dmin = np.inf
                for a in range(size):
                    for b in range(size):
                        if a != b:
                            dab = _dist_z(P[a], P[b], z, metric)
                            if dab < dmin:
                                dmin = dab
                                a_best = a
                                b_best = b
                facility = max(2.0 * facility, dmin)
                if Wt[a_best] >= Wt[b_best]:
                    keep, drop = a_best, b_best
                else:
                    keep, drop = b_best, a_best
                Wt[keep] += Wt[drop]
                size = _swap_remove(P, Wt, TS, drop, size)
        else:
            Wt[j] += 1.0
        # deletion trigger
        if count < buffer_size or t <= buffer_size:
            continue
        mean_cost = total / (t - 1)
        if mean_cost == 0.0 or np.median(buf_cost) <= theta * mean_cost:
            continue
        start = buf_ts[head]
        n_stale = 0
        for i in range(size):
            if TS[i] < start:
                n_stale += 1
        if n_stale > 0 and n_stale < size:
            served = np.zeros(size, dtype=np.bool_)
            for q in range(buffer_size):
                qb = 0
                qd = np.inf
                for i in range(size):
                    dz = _dist_z(buf_x[q], P[i], z, metric)
                    if dz < qd:
                        qd = dz
                        qb = i
                served[qb] = True
            for i in range(size - 1, -1, -1):
                if TS[i] < start and not served[i]:
                    deletions += 1
                    size = _swap_remove(P, Wt, TS, i, size)
        head = 0
        count = 0
    return size, facility, deletions
