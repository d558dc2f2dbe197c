"""Compiled linear algebra for small SPD matrices.

Rows passed to the solver kernels are row-major flattenings of m x m
matrices. The affine-invariant kernels use a Cholesky factor L of the base
point instead of its square root: with A = L L^T, the eigenvalues of
L^-1 B L^-T are those of A^-1/2 B A^-1/2, and L (L^-1 B L^-T)^theta L^T is
the same geodesic point, so a pair step needs a single eigendecomposition.
"""
import numpy as np
from numba import njit

MAX_SWEEPS = 100
EIG_FLOOR = 1e-12


@njit(cache=True)
def jacobi(a, w, V, vectors):
    """Cyclic Jacobi on the symmetric matrix ``a`` (overwritten).

    Sweeps until the off-diagonal Frobenius mass falls below 1e-14 ||a||_F.
    Eigenvalues land in ``w`` (unsorted), eigenvectors in the columns of
    ``V`` when ``vectors`` is set. Returns the number of sweeps used.
    """
    m = a.shape[0]
    if vectors:
        for i in range(m):
            for j in range(m):
                V[i, j] = 1.0 if i == j else 0.0
    fro2 = 0.0
    for i in range(m):
        for j in range(m):
            fro2 += a[i, j] * a[i, j]
    tol2 = 1e-28 * fro2
    sweeps = 0
    while sweeps < MAX_SWEEPS:
        off2 = 0.0
        for i in range(m):
            for j in range(i + 1, m):
                off2 += 2.0 * a[i, j] * a[i, j]
        if off2 <= tol2:
            break
        sweeps += 1
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(1.0 + theta * theta))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                a[p, p] -= t * apq
                a[q, q] += t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for r in range(m):
                    if r == p or r == q:
                        continue
                    arp = a[r, p]
                    arq = a[r, q]
                    nrp = arp - s * (arq + tau * arp)
                    nrq = arq + s * (arp - tau * arq)
                    a[r, p] = nrp
                    a[p, r] = nrp
                    a[r, q] = nrq
                    a[q, r] = nrq
                if vectors:
                    for r in range(m):
                        vrp = V[r, p]
                        vrq = V[r, q]
                        V[r, p] = vrp - s * (vrq + tau * vrp)
                        V[r, q] = vrq + s * (vrp - tau * vrq)
    for i in range(m):
        w[i] = a[i, i]
    return sweeps


@njit(cache=True)
def cholesky(A, L):
    """Lower Cholesky factor into ``L``; False if A is not positive definite."""
    m = A.shape[0]
    for i in range(m):
        for j in range(m):
            L[i, j] = 0.0
    for j in range(m):
        s = A[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if s <= 0.0:
            return False
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, m):
            s = A[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            L[i, j] = s / L[j, j]
    return True


@njit(cache=True)
def whiten(L, B, M):
    """M = L^-1 B L^-T for lower-triangular L (symmetrized)."""
    m = L.shape[0]
    X = np.empty((m, m))
    # X = L^-1 B by forward substitution, column by column
    for c in range(m):
        for i in range(m):
            s = B[i, c]
            for k in range(i):
                s -= L[i, k] * X[k, c]
            X[i, c] = s / L[i, i]
    # M = X L^-T  <=>  M^T = L^-1 X^T
    for c in range(m):
        for i in range(m):
            s = X[c, i]
            for k in range(i):
                s -= L[i, k] * M[c, k]
            M[c, i] = s / L[i, i]
    for i in range(m):
        for j in range(i + 1, m):
            v = 0.5 * (M[i, j] + M[j, i])
            M[i, j] = v
            M[j, i] = v


@njit(cache=True)
def _recolor(L, V, f, out):
    """out = L V diag(f) V^T L^T, symmetrized."""
    m = L.shape[0]
    LV = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            s = 0.0
            for k in range(i + 1):
                s += L[i, k] * V[k, j]
            LV[i, j] = s
    for i in range(m):
        for j in range(i, m):
            s = 0.0
            for k in range(m):
                s += LV[i, k] * f[k] * LV[j, k]
            out[i, j] = s
            out[j, i] = s


@njit(cache=True)
def _whitened_spectrum(A, B, vectors, L, M, w, V):
    if not cholesky(A, L):
        raise ValueError("matrix is not positive definite")
    whiten(L, B, M)
    jacobi(M, w, V, vectors)
    for i in range(w.shape[0]):
        if w[i] <= EIG_FLOOR:
            raise ValueError("matrix is not positive definite")


@njit(cache=True)
def _side(n2):
    return int(np.sqrt(n2) + 0.5)


@njit(cache=True)
def ai_dist(A, i, B, j):
    m = _side(A.shape[1])
    L = np.empty((m, m))
    M = np.empty((m, m))
    w = np.empty(m)
    _whitened_spectrum(A[i].reshape((m, m)), B[j].reshape((m, m)), False, L, M, w, M)
    s = 0.0
    for k in range(m):
        lw = np.log(w[k])
        s += lw * lw
    return np.sqrt(s)


@njit(cache=True)
def ai_geo(A, i, B, j, theta):
    m = _side(A.shape[1])
    L = np.empty((m, m))
    M = np.empty((m, m))
    V = np.empty((m, m))
    w = np.empty(m)
    _whitened_spectrum(A[i].reshape((m, m)), B[j].reshape((m, m)), True, L, M, w, V)
    for k in range(m):
        w[k] = w[k] ** theta
    _recolor(L, V, w, A[i].reshape((m, m)))


@njit(cache=True)
def ai_pair(P, j, c):
    m = _side(P.shape[1])
    L = np.empty((m, m))
    M = np.empty((m, m))
    V = np.empty((m, m))
    w = np.empty(m)
    _whitened_spectrum(P[j].reshape((m, m)), P[j + 1].reshape((m, m)), True, L, M, w, V)
    s = 0.0
    for k in range(m):
        lw = np.log(w[k])
        s += lw * lw
    d = np.sqrt(s)
    if d == 0.0:
        return
    theta = min(c / d, 0.5)
    f = np.empty(m)
    for k in range(m):
        f[k] = w[k] ** theta
    _recolor(L, V, f, P[j].reshape((m, m)))
    if theta == 0.5:
        P[j + 1, :] = P[j]
        return
    for k in range(m):
        f[k] = w[k] ** (1.0 - theta)
    _recolor(L, V, f, P[j + 1].reshape((m, m)))


@njit(cache=True)
def mean_log_at(S, Ys, out):
    """out = mean_k log(S Y_k S) for symmetric S (e.g. X^-1/2)."""
    m = S.shape[0]
    N = Ys.shape[0]
    M = np.empty((m, m))
    V = np.empty((m, m))
    w = np.empty(m)
    T = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            out[i, j] = 0.0
    for k in range(N):
        T[:, :] = S @ Ys[k] @ S
        for i in range(m):
            for j in range(m):
                M[i, j] = 0.5 * (T[i, j] + T[j, i])
        jacobi(M, w, V, True)
        for i in range(m):
            if w[i] <= EIG_FLOOR:
                raise ValueError("matrix is not positive definite")
            w[i] = np.log(w[i])
        for i in range(m):
            for j in range(m):
                s = 0.0
                for l in range(m):
                    s += V[i, l] * w[l] * V[j, l]
                out[i, j] += s / N


@njit(cache=True)
def batch_log(Ys, out):
    m = Ys.shape[1]
    M = np.empty((m, m))
    V = np.empty((m, m))
    w = np.empty(m)
    for k in range(Ys.shape[0]):
        M[:, :] = Ys[k]
        jacobi(M, w, V, True)
        for i in range(m):
            if w[i] <= EIG_FLOOR:
                raise ValueError("matrix is not positive definite")
            w[i] = np.log(w[i])
        for i in range(m):
            for j in range(m):
                s = 0.0
                for l in range(m):
                    s += V[i, l] * w[l] * V[j, l]
                out[k, i, j] = s
