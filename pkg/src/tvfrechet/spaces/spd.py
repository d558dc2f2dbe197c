"""Symmetric positive-definite matrices under the affine-invariant and
Log-Euclidean metrics.

All matrix functions go through :func:`sym_eig`, a cyclic Jacobi solver.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._kernels import flat_dist, flat_geo, flat_pair
from ..core import Kernels, MeanOptions, SpaceContract
from ..errors import ConvergenceFailure, InvalidInput, NotPositiveDefinite
from . import _spd_kernels as K

SYM_TOL = 1e-10


@dataclass(frozen=True)
class SymEig:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns, orthogonal

    def apply(self, f) -> np.ndarray:
        Q = self.eigenvectors
        return (Q * f(self.eigenvalues)) @ Q.T


def _as_symmetric(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput("matrix has non-finite entries")
    asym = np.linalg.norm(A - A.T)
    if asym > SYM_TOL * max(np.linalg.norm(A), 1e-300):
        raise InvalidInput(f"matrix is not symmetric (asymmetry {asym:.3g})")
    return 0.5 * (A + A.T)


def sym_eig(A) -> SymEig:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(_as_symmetric(A), order="C")
    m = a.shape[0]
    w = np.empty(m)
    V = np.empty((m, m))
    K.jacobi(a, w, V, True)
    order = np.argsort(w)[::-1]
    return SymEig(w[order], V[:, order])


def _positive(e: SymEig) -> SymEig:
    if e.eigenvalues[-1] <= K.EIG_FLOOR:
        raise NotPositiveDefinite(
            f"smallest eigenvalue {e.eigenvalues[-1]:.3g} <= {K.EIG_FLOOR:g}"
        )
    return e


def spd_log(A) -> np.ndarray:
    return _positive(sym_eig(A)).apply(np.log)


def spd_exp(A) -> np.ndarray:
    return sym_eig(A).apply(np.exp)


def spd_sqrt(A) -> np.ndarray:
    return _positive(sym_eig(A)).apply(np.sqrt)


def spd_invsqrt(A) -> np.ndarray:
    return _positive(sym_eig(A)).apply(lambda w: 1.0 / np.sqrt(w))


def _pair(A, B):
    A = _as_symmetric(A)
    B = _as_symmetric(B)
    if A.shape != B.shape:
        raise InvalidInput(f"size mismatch {A.shape} vs {B.shape}")
    return A, B


def _whitened(A, B):
    e = _positive(sym_eig(A))
    half = e.apply(np.sqrt)
    ihalf = e.apply(lambda w: 1.0 / np.sqrt(w))
    return half, ihalf, ihalf @ B @ ihalf


def d_ai(A, B) -> float:
    """Affine-invariant distance ||log(A^-1/2 B A^-1/2)||_F."""
    A, B = _pair(A, B)
    _, _, M = _whitened(A, B)
    w = _positive(sym_eig(0.5 * (M + M.T))).eigenvalues
    return float(np.sqrt(np.sum(np.log(w) ** 2)))


def d_le(A, B) -> float:
    """Log-Euclidean distance ||log A - log B||_F."""
    A, B = _pair(A, B)
    return float(np.linalg.norm(spd_log(A) - spd_log(B)))


def _check_theta(theta):
    if not 0.0 <= theta <= 1.0:
        raise InvalidInput(f"theta={theta} outside [0, 1]")


def spd_geodesic_ai(A, B, theta: float) -> np.ndarray:
    _check_theta(theta)
    A, B = _pair(A, B)
    if theta == 0.0:
        return A
    if theta == 1.0:
        return B
    half, _, M = _whitened(A, B)
    inner = _positive(sym_eig(0.5 * (M + M.T))).apply(lambda w: w**theta)
    G = half @ inner @ half
    return 0.5 * (G + G.T)


def spd_geodesic_le(A, B, theta: float) -> np.ndarray:
    _check_theta(theta)
    A, B = _pair(A, B)
    if theta == 0.0:
        return A
    if theta == 1.0:
        return B
    return spd_exp((1.0 - theta) * spd_log(A) + theta * spd_log(B))


def _stack(points) -> np.ndarray:
    if len(points) == 0:
        raise InvalidInput("need at least one matrix")
    Ys = np.ascontiguousarray(np.stack([_as_symmetric(p) for p in points]))
    if len({p.shape for p in Ys}) != 1:
        raise InvalidInput("matrices have different sizes")
    return Ys


def _log_all(Ys) -> np.ndarray:
    out = np.empty_like(Ys)
    try:
        K.batch_log(Ys, out)
    except ValueError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    return out


def spd_frechet_mean_le(points) -> np.ndarray:
    Ys = _stack(points)
    return spd_exp(_log_all(Ys).mean(axis=0))


def spd_frechet_mean_ai(points, opts: MeanOptions | None = None) -> np.ndarray:
    """Karcher mean by fixed-point iteration from the Log-Euclidean mean.

    Stops once the mean of the whitened logs has Frobenius norm below 1e-10.
    """
    opts = opts or MeanOptions()
    Ys = _stack(points)
    if len(Ys) == 1:
        return Ys[0].copy()
    X = spd_exp(_log_all(Ys).mean(axis=0))
    step = np.empty_like(Ys[0])
    for _ in range(opts.max_iter):
        e = _positive(sym_eig(X))
        half = e.apply(np.sqrt)
        ihalf = e.apply(lambda w: 1.0 / np.sqrt(w))
        try:
            K.mean_log_at(ihalf, Ys, step)
        except ValueError as exc:
            raise NotPositiveDefinite(str(exc)) from None
        X = half @ spd_exp(0.5 * (step + step.T)) @ half
        X = 0.5 * (X + X.T)
        if np.linalg.norm(step) < 1e-10:
            return X
    raise ConvergenceFailure(
        f"Karcher iteration did not converge in {opts.max_iter} steps", last=X
    )


def karcher_gradient_norm(X, points) -> float:
    """Norm of the mean whitened log-map at X (zero at the Karcher mean)."""
    Ys = _stack(points)
    out = np.empty_like(Ys[0])
    K.mean_log_at(spd_invsqrt(X), Ys, out)
    return float(np.linalg.norm(out))


class SPDSpace(SpaceContract):
    """m x m SPD matrices; ``metric`` is ``"ai"`` or ``"le"``.

    Under the Log-Euclidean metric the solver runs in matrix-log
    coordinates, where the geometry is flat.
    """

    def __init__(self, m: int = 3, metric: str = "ai"):
        if m < 1:
            raise InvalidInput("matrix size must be positive")
        if metric not in ("ai", "le"):
            raise InvalidInput(f"unknown SPD metric {metric!r}")
        self.m = int(m)
        self.metric = metric
        self.shape = (self.m, self.m)
        self.name = f"spd-{metric}"
        if metric == "ai":
            self.kernels = Kernels(K.ai_dist, K.ai_geo, K.ai_pair)
        else:
            self.kernels = Kernels(flat_dist, flat_geo, flat_pair)

    def validate(self, p) -> np.ndarray:
        A = super().validate(p)
        A = _as_symmetric(A)
        if sym_eig(A).eigenvalues[-1] <= K.EIG_FLOOR:
            raise NotPositiveDefinite(f"{self.name}: matrix is not positive definite")
        return A

    def distance(self, p, q) -> float:
        return d_ai(p, q) if self.metric == "ai" else d_le(p, q)

    def geodesic_point(self, p, q, theta: float):
        if self.metric == "ai":
            return spd_geodesic_ai(p, q, theta)
        return spd_geodesic_le(p, q, theta)

    def frechet_mean(self, points, opts: MeanOptions | None = None):
        if self.metric == "ai":
            return spd_frechet_mean_ai(points, opts)
        return spd_frechet_mean_le(points)

    def log_coordinates(self, base, points) -> np.ndarray:
        """Frobenius coordinates: log P - log B (Log-Euclidean), or
        log(B^-1/2 P B^-1/2), the log map transported to the identity
        by the isometry X -> B^-1/2 X B^-1/2 (affine-invariant)."""
        B = self.validate(base)
        if self.metric == "le":
            lb = spd_log(B)
            return np.stack([(spd_log(self.validate(p)) - lb).ravel() for p in points])
        ih = spd_invsqrt(B)
        return np.stack([spd_log(_as_symmetric(ih @ self.validate(p) @ ih)).ravel()
                         for p in points])

    def encode(self, p) -> np.ndarray:
        if self.metric == "le":
            return np.ascontiguousarray(spd_log(p).reshape(-1))
        return super().encode(p)

    def decode(self, row) -> np.ndarray:
        M = np.asarray(row, dtype=float).reshape(self.shape)
        M = 0.5 * (M + M.T)
        return spd_exp(M) if self.metric == "le" else M

    def distances(self, ps, qs) -> np.ndarray:
        try:
            return super().distances(ps, qs)
        except ValueError as exc:
            if isinstance(exc, InvalidInput):
                raise
            raise NotPositiveDefinite(str(exc)) from None

    def __repr__(self):
        return f"SPDSpace(m={self.m}, metric={self.metric!r})"
