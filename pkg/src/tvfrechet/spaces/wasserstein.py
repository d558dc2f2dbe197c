"""2-Wasserstein space of distributions on the real line.

A distribution is stored as its quantile function sampled at the midpoint
nodes s_g = (g - 1/2) / G. In that chart the space is flat: distances are
root-mean-square differences and geodesics interpolate quantiles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression

from .._kernels import flat_geo, rms_dist, rms_pair
from ..core import Kernels, MeanOptions, SpaceContract
from ..errors import InvalidInput

DEFAULT_GRID = 1000
MONO_TOL = 1e-12

# Wichura (1988), algorithm AS 241 (PPND16).
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _ratio(num, den, r):
    return np.polyval(num[::-1], r) / np.polyval(den[::-1], r)


def normal_quantile(p):
    """Standard normal quantile function on (0, 1), vectorized."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise InvalidInput("normal_quantile needs probabilities in (0, 1)")
    q = p - 0.5
    out = np.empty_like(p)
    central = np.abs(q) <= 0.425
    if np.any(central):
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * _ratio(_A, _B, r)
    tail = ~central
    if np.any(tail):
        r = np.sqrt(-np.log(np.minimum(p[tail], 1.0 - p[tail])))
        val = np.where(
            r <= 5.0,
            _ratio(_C, _D, r - 1.6),
            _ratio(_E, _F, r - 5.0),
        )
        out[tail] = np.where(q[tail] < 0, -val, val)
    return out if out.ndim else float(out)


def quantile_grid(G: int) -> np.ndarray:
    if G < 1:
        raise InvalidInput("grid size must be positive")
    return (np.arange(1, G + 1) - 0.5) / G


def monotone_project(values) -> np.ndarray:
    """Nearest nondecreasing vector; violations up to 1e-12 are left alone."""
    v = np.asarray(values, dtype=float)
    if v.size > 1 and np.min(np.diff(v)) < -MONO_TOL:
        v = isotonic_regression(v).x
    return v


@dataclass(frozen=True)
class TransportMap:
    """x -> x - sin(k x) / |k|, nondecreasing for k in {-2, -1, 1, 2}."""

    k: int

    def __post_init__(self):
        if self.k not in (-2, -1, 1, 2):
            raise InvalidInput(f"transport map index must be in {{±1, ±2}}, got {self.k}")

    def __call__(self, x):
        return x - np.sin(self.k * np.asarray(x, dtype=float)) / abs(self.k)


def pushforward(F, T: TransportMap) -> np.ndarray:
    return T(F)


def gaussian_quantile_point(nu: float, sigma: float, G: int = DEFAULT_GRID) -> np.ndarray:
    if sigma < 0:
        raise InvalidInput(f"sigma must be nonnegative, got {sigma}")
    return nu + sigma * normal_quantile(quantile_grid(G))


def quantile_from_samples(samples, G: int = DEFAULT_GRID) -> np.ndarray:
    """Empirical quantile function on the midpoint grid.

    Linear interpolation between order statistics placed at (k - 1/2)/N,
    constant beyond the extreme ones.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise InvalidInput("need at least one sample")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("samples must be finite")
    return monotone_project(np.quantile(x, quantile_grid(G), method="hazen"))


def _grids(F, G):
    F = np.asarray(F, dtype=float)
    G = np.asarray(G, dtype=float)
    if F.shape != G.shape or F.ndim != 1:
        raise InvalidInput(f"grid mismatch {F.shape} vs {G.shape}")
    return F, G


def w2_distance(F, G) -> float:
    F, G = _grids(F, G)
    return float(np.sqrt(np.mean((F - G) ** 2)))


def w2_geodesic(F, G, theta: float) -> np.ndarray:
    if not 0.0 <= theta <= 1.0:
        raise InvalidInput(f"theta={theta} outside [0, 1]")
    F, G = _grids(F, G)
    if theta == 1.0:
        return G.copy()
    return F + theta * (G - F)


def w2_frechet_mean(points) -> np.ndarray:
    if len(points) == 0:
        raise InvalidInput("need at least one distribution")
    if len({np.shape(p) for p in points}) != 1:
        raise InvalidInput("quantile grids differ in size")
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2:
        raise InvalidInput("quantile points must be 1-D grids")
    return arr.mean(axis=0)


def moments(F) -> tuple[float, float]:
    """Mean and standard deviation read off a quantile grid."""
    F = np.asarray(F, dtype=float)
    a = float(F.mean())
    return a, float(np.sqrt(np.mean((F - a) ** 2)))


class WassersteinSpace(SpaceContract):
    def __init__(self, grid_size: int = DEFAULT_GRID):
        self.G = int(grid_size)
        if self.G < 1:
            raise InvalidInput("grid size must be positive")
        self.shape = (self.G,)
        self.name = "wasserstein"
        self.kernels = Kernels(rms_dist, flat_geo, rms_pair)

    @property
    def grid_size(self) -> int:
        return self.G

    @property
    def nodes(self) -> np.ndarray:
        return quantile_grid(self.G)

    def validate(self, p) -> np.ndarray:
        F = super().validate(p)
        if F.size > 1 and np.min(np.diff(F)) < -MONO_TOL * max(1.0, np.abs(F).max()):
            raise InvalidInput("quantile values must be nondecreasing")
        return F

    def distance(self, p, q) -> float:
        return w2_distance(self.validate(p), self.validate(q))

    def geodesic_point(self, p, q, theta: float):
        return w2_geodesic(self.validate(p), self.validate(q), theta)

    def frechet_mean(self, points, opts: MeanOptions | None = None):
        return w2_frechet_mean([self.validate(p) for p in points])

    def log_coordinates(self, base, points) -> np.ndarray:
        b = self.validate(base)
        return np.stack([self.validate(p) - b for p in points]) / np.sqrt(self.G)

    def gaussian(self, nu: float, sigma: float) -> np.ndarray:
        return gaussian_quantile_point(nu, sigma, self.G)

    def from_samples(self, samples) -> np.ndarray:
        return quantile_from_samples(samples, self.G)

    def __repr__(self):
        return f"WassersteinSpace(grid_size={self.G})"
