"""Space-agnostic building blocks: the metric-space contract, time series,
step functions, total variation, the empirical pseudo-metric and Fréchet means.
"""
from __future__ import annotations

import bisect
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceFailure, InvalidInput


class Kernels(NamedTuple):
    """Compiled primitives a backend hands to the solver.

    Points are rows of 2-D float64 arrays in the backend's chart (see
    ``encode``); the calling conventions are documented in ``_kernels``.
    """

    dist: object
    geo: object
    pair: object


@dataclass(frozen=True)
class MeanOptions:
    max_passes: int = 50
    tol: float = 1e-10
    seed: int = 0
    max_iter: int = 200


class SpaceContract(ABC):
    """A geodesic metric space.

    Points are numpy arrays; ``shape`` is the per-point array shape and acts
    as the compatibility descriptor. Subclasses implement ``distance`` and
    ``geodesic_point``; the rest has generic defaults.
    """

    name: str = "abstract"
    shape: tuple[int, ...] = ()
    kernels: Kernels | None = None

    @abstractmethod
    def distance(self, p, q) -> float: ...

    @abstractmethod
    def geodesic_point(self, p, q, theta: float): ...

    def validate(self, p) -> np.ndarray:
        arr = np.asarray(p, dtype=float)
        if arr.shape != self.shape:
            raise InvalidInput(f"{self.name}: point shape {arr.shape} != {self.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInput(f"{self.name}: point has non-finite entries")
        return arr

    # Chart used by compiled kernels; identity flattening unless overridden.
    def encode(self, p) -> np.ndarray:
        return np.ascontiguousarray(np.asarray(p, dtype=float).reshape(-1))

    def decode(self, row) -> np.ndarray:
        return np.array(row, dtype=float).reshape(self.shape)

    def vectorize(self, p) -> list[float]:
        """Space-native flat form used for CSV/JSON output."""
        return np.asarray(p, dtype=float).reshape(-1).tolist()

    def devectorize(self, row) -> np.ndarray:
        return self.validate(np.asarray(row, dtype=float).reshape(self.shape))

    def distances(self, ps, qs) -> np.ndarray:
        """Row-wise distances between two equal-length point lists."""
        if len(ps) != len(qs):
            raise InvalidInput("distances: length mismatch")
        if self.kernels is not None and len(ps):
            from ._kernels import driver

            P = np.stack([self.encode(p) for p in ps])
            Q = np.stack([self.encode(q) for q in qs])
            return driver(self.kernels)[2](P, Q)
        return np.array([self.distance(p, q) for p, q in zip(ps, qs)])

    def frechet_mean(self, points, opts: MeanOptions | None = None):
        return inductive_mean(points, self, opts)

    def log_coordinates(self, base, points) -> np.ndarray | None:
        """Logarithm maps at ``base`` as rows of an (n, k) array.

        Coordinates are taken in a fixed orthonormal basis of the tangent
        space at ``base``, so sums of rows are tangent vectors and their
        Euclidean norms are Riemannian norms. ``None`` when unsupported.
        """
        return None

    def __repr__(self):
        return f"{type(self).__name__}(shape={self.shape})"


def _check_points(points, space: SpaceContract) -> list[np.ndarray]:
    if len(points) == 0:
        raise InvalidInput("need at least one point")
    return [space.validate(p) for p in points]


def total_variation(values: Sequence, space: SpaceContract) -> float:
    """Sum of distances between consecutive values."""
    vals = _check_points(values, space)
    if len(vals) == 1:
        return 0.0
    return float(np.sum(space.distances(vals[:-1], vals[1:])))


def d_n(f: Sequence, g: Sequence, space: SpaceContract) -> float:
    """Root mean squared pointwise distance between two sequences."""
    if len(f) != len(g):
        raise InvalidInput(f"d_n: length mismatch {len(f)} vs {len(g)}")
    fv = _check_points(f, space)
    gv = _check_points(g, space)
    d = space.distances(fv, gv)
    return float(np.sqrt(np.mean(d**2)))


def frechet_objective(x, points, space: SpaceContract) -> float:
    d = space.distances([x] * len(points), points)
    return float(np.sum(d**2))


def frechet_mean(points: Sequence, space: SpaceContract, opts: MeanOptions | None = None):
    """Minimizer of the summed squared distance; backends may override."""
    pts = _check_points(points, space)
    if len(pts) == 1:
        return pts[0].copy()
    return space.frechet_mean(pts, opts)


def inductive_mean(points, space: SpaceContract, opts: MeanOptions | None = None):
    """Inductive geodesic mean with reshuffled passes.

    The running counter carries across passes, so in flat spaces each pass
    ends exactly at the arithmetic mean. Stops once a pass lowers the
    Fréchet objective by less than ``tol`` (relative to ``max(1, F)``).
    """
    opts = opts or MeanOptions()
    pts = _check_points(points, space)
    if len(pts) == 1:
        return pts[0].copy()
    rng = np.random.default_rng(opts.seed)
    order = rng.permutation(len(pts))
    x = pts[order[0]]
    k = 1
    prev = None
    for p in range(opts.max_passes):
        for idx in order[1:] if p == 0 else rng.permutation(len(pts)):
            k += 1
            x = space.geodesic_point(x, pts[idx], 1.0 / k)
        obj = frechet_objective(x, pts, space)
        if prev is not None and prev - obj < opts.tol * max(1.0, obj):
            return x
        prev = obj
    raise ConvergenceFailure(
        f"inductive mean did not settle in {opts.max_passes} passes", last=x
    )


@dataclass
class TimeSeries:
    """Observations paired with design points in [0, 1]."""

    observations: list
    design: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.observations)
        if n == 0:
            raise InvalidInput("TimeSeries needs at least one observation")
        if self.design is None:
            self.design = default_design(n)
        self.design = np.asarray(self.design, dtype=float)
        if self.design.shape != (n,):
            raise InvalidInput("design length must match observations")
        if np.any(self.design < 0) or np.any(self.design > 1):
            raise InvalidInput("design points must lie in [0, 1]")
        if np.any(np.diff(self.design) <= 0):
            raise InvalidInput("design points must be strictly increasing")
        shapes = {np.shape(y) for y in self.observations}
        if len(shapes) != 1:
            raise InvalidInput(f"observations have mixed shapes: {sorted(shapes)}")

    @property
    def n(self) -> int:
        return len(self.observations)

    def subset(self, idx) -> "TimeSeries":
        idx = np.sort(np.asarray(idx))
        return TimeSeries([self.observations[i] for i in idx], self.design[idx])


def default_design(n: int) -> np.ndarray:
    if n == 1:
        return np.zeros(1)
    return np.arange(n) / (n - 1)


@dataclass
class StepFunction:
    """Piecewise-constant map on [0, 1] with right-open intervals.

    ``values[k]`` holds on ``[breakpoints[k], breakpoints[k+1])``; the last
    interval is closed at 1. Breakpoints start at 0, end at 1, and only the
    final interval may be degenerate (``[1, 1]``).
    """

    breakpoints: np.ndarray
    values: list

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        if b.ndim != 1 or len(b) != len(self.values) + 1:
            raise InvalidInput("need exactly one more breakpoint than values")
        if b[0] != 0.0 or b[-1] != 1.0:
            raise InvalidInput("breakpoints must span [0, 1]")
        gaps = np.diff(b)
        if np.any(gaps[:-1] <= 0) or gaps[-1] < 0:
            raise InvalidInput("breakpoints must be increasing")
        self.breakpoints = b

    @classmethod
    def from_fit(cls, design, fitted) -> "StepFunction":
        """Extend fitted values at design points to all of [0, 1].

        The first value also covers ``[0, t_1)``; the last covers ``[t_n, 1]``.
        """
        t = np.asarray(design, dtype=float)
        b = np.concatenate([[0.0], t[1:], [1.0]])
        if len(t) == 1:
            b = np.array([0.0, 1.0])
        return cls(b, list(fitted))

    def __call__(self, t: float):
        return evaluate_step(self, t)

    def total_variation(self, space: SpaceContract) -> float:
        return total_variation(self.values, space)


def evaluate_step(f: StepFunction, t: float):
    if not 0.0 <= t <= 1.0:
        raise InvalidInput(f"t={t} outside [0, 1]")
    k = bisect.bisect_right(f.breakpoints, t) - 1
    return f.values[min(k, len(f.values) - 1)]
