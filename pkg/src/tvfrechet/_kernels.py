"""Compiled kernels shared by the flat backends and the CPPA driver.

Kernels address points as rows of 2-D float64 arrays so the hot loop never
materializes row views:

    dist(A, i, B, j) -> float        distance between A[i] and B[j]
    geo(A, i, B, j, theta)           A[i] <- geodesic point from A[i] toward B[j]
    pair(P, j, c)                    fused-pair proximal step on P[j], P[j+1]
"""
import numpy as np
from numba import njit


# Reassociation lets the sum of squares vectorize; nothing else is relaxed.
@njit(cache=True, fastmath={"reassoc"})
def flat_dist(A, i, B, j):
    s = 0.0
    for k in range(A.shape[1]):
        d = A[i, k] - B[j, k]
        s += d * d
    return np.sqrt(s)


@njit(cache=True)
def flat_geo(A, i, B, j, theta):
    for k in range(A.shape[1]):
        A[i, k] += theta * (B[j, k] - A[i, k])


@njit(cache=True)
def _pair_step(P, j, theta):
    if theta == 0.5:
        for k in range(P.shape[1]):
            mid = P[j, k] + 0.5 * (P[j + 1, k] - P[j, k])
            P[j, k] = mid
            P[j + 1, k] = mid
        return
    for k in range(P.shape[1]):
        a = P[j, k]
        b = P[j + 1, k]
        P[j, k] = a + theta * (b - a)
        P[j + 1, k] = b + theta * (a - b)


@njit(cache=True)
def flat_pair(P, j, c):
    d = flat_dist(P, j, P, j + 1)
    if d > 0.0:
        _pair_step(P, j, min(c / d, 0.5))


# Quantile grids: L2 on [0, 1] by the midpoint rule, i.e. rms over nodes.
@njit(cache=True)
def rms_dist(A, i, B, j):
    return flat_dist(A, i, B, j) / np.sqrt(A.shape[1])


@njit(cache=True)
def rms_pair(P, j, c):
    d = rms_dist(P, j, P, j + 1)
    if d > 0.0:
        _pair_step(P, j, min(c / d, 0.5))


_DRIVERS = {}


def _build(dist, geo, pair):
    @njit
    def objective(P, Y, lam):
        n = P.shape[0]
        data = 0.0
        for i in range(n):
            d = dist(P, i, Y, i)
            data += d * d
        tv = 0.0
        for j in range(n - 1):
            tv += dist(P, j, P, j + 1)
        return data / n + lam * tv

    @njit
    def run(P, Y, lam, alpha0, max_cycles, rel_tol, window, trace):
        n = P.shape[0]
        r = 0
        while r < max_cycles:
            r += 1
            alpha = alpha0 / r
            theta = alpha / (1.0 + alpha)
            for i in range(n):
                geo(P, i, Y, i, theta)
            c = alpha * lam * n / 2.0
            if c > 0.0:
                for j in range(n - 1):
                    pair(P, j, c)
            obj = objective(P, Y, lam)
            trace[r - 1] = obj
            if r > window:
                prev = trace[r - 1 - window]
                if abs(prev - obj) <= rel_tol * abs(prev):
                    break
        return r

    @njit
    def distances(A, B):
        out = np.empty(A.shape[0])
        for i in range(A.shape[0]):
            out[i] = dist(A, i, B, i)
        return out

    return run, objective, distances


def driver(kernels):
    """Compiled (run, objective, distances) specialized to one kernel set.

    ``run(P, Y, lam, alpha0, max_cycles, rel_tol, window, trace)`` performs
    cyclic proximal point cycles on ``P`` in place. Cycle r uses step
    alpha0 / r: a data step on every row, then the pair step on each
    neighbour pair in ascending order. ``trace[r-1]`` gets the objective
    after cycle r; iteration stops once it changes by at most ``rel_tol``
    (relative) over ``window`` cycles. Returns the number of cycles run.
    """
    key = tuple(kernels)
    if key not in _DRIVERS:
        _DRIVERS[key] = _build(*kernels)
    return _DRIVERS[key]
