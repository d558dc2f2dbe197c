"""Euclidean space R^k."""
from __future__ import annotations

import numpy as np

from .._kernels import flat_dist, flat_geo, flat_pair
from ..core import Kernels, MeanOptions, SpaceContract
from ..errors import InvalidInput


class EuclideanSpace(SpaceContract):
    name = "euclidean"
    kernels = Kernels(flat_dist, flat_geo, flat_pair)

    def __init__(self, dim: int = 1):
        if dim < 1:
            raise InvalidInput("dimension must be positive")
        self.dim = int(dim)
        self.shape = (self.dim,)

    def validate(self, p) -> np.ndarray:
        arr = np.asarray(p, dtype=float)
        if arr.ndim == 0 and self.dim == 1:
            arr = arr.reshape(1)
        return super().validate(arr)

    def distance(self, p, q) -> float:
        return euclid_distance(self.validate(p), self.validate(q))

    def geodesic_point(self, p, q, theta: float):
        return euclid_geodesic(self.validate(p), self.validate(q), theta)

    def frechet_mean(self, points, opts: MeanOptions | None = None):
        return np.mean(np.stack([self.validate(p) for p in points]), axis=0)

    def log_coordinates(self, base, points) -> np.ndarray:
        b = self.validate(base)
        return np.stack([self.validate(p) - b for p in points])


def euclid_distance(p, q) -> float:
    p = np.atleast_1d(np.asarray(p, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if p.shape != q.shape:
        raise InvalidInput(f"dimension mismatch {p.shape} vs {q.shape}")
    return float(np.linalg.norm(p - q))


def euclid_geodesic(p, q, theta: float):
    if not 0.0 <= theta <= 1.0:
        raise InvalidInput(f"theta={theta} outside [0, 1]")
    p = np.atleast_1d(np.asarray(p, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if p.shape != q.shape:
        raise InvalidInput(f"dimension mismatch {p.shape} vs {q.shape}")
    if theta == 1.0:
        return q.copy()
    return p + theta * (q - p)
