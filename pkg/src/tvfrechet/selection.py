"""Choosing the regularization level: K-fold cross-validation and
jump-count targeting."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import SpaceContract, TimeSeries, evaluate_step
from .errors import InvalidInput
from .solver import FitResult, SolverConfig, fit, fused_lambda, median_adjacent_distance

TIE_RTOL = 1e-12


def fold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Random partition of range(n) into ``folds`` near-equal parts."""
    rng = np.random.Generator(np.random.Philox(seed))
    return [np.sort(part) for part in np.array_split(rng.permutation(n), folds)]


def heldout_error(series: TimeSeries, space: SpaceContract, cfg: SolverConfig,
                  test: np.ndarray) -> float:
    """Fit without ``test`` and sum squared distances at the held-out points."""
    train = np.setdiff1d(np.arange(series.n), test)
    result = fit(series.subset(train), space, cfg)
    preds = [evaluate_step(result.step, series.design[i]) for i in test]
    d = space.distances(preds, [series.observations[i] for i in test])
    return float(np.sum(d**2))


def cross_validate(series: TimeSeries, space: SpaceContract, lam_grid, folds: int = 5,
                   seed: int = 0, cfg: SolverConfig | None = None):
    """Return ``(best_lambda, cv_errors)``; ties go to the larger lambda."""
    grid = [float(v) for v in lam_grid]
    if not grid:
        raise InvalidInput("empty lambda grid")
    if folds < 2 or folds > series.n:
        raise InvalidInput(f"cannot split {series.n} points into {folds} folds")
    cfg = cfg or SolverConfig(lam=0.0)
    parts = fold_indices(series.n, folds, seed)
    errors = np.array([
        sum(heldout_error(series, space, cfg.with_lambda(lam), test) for test in parts)
        for lam in grid
    ])
    best = errors.min()
    ok = errors <= best + TIE_RTOL * abs(best)
    best_lam = max(lam for lam, keep in zip(grid, ok) if keep)
    return best_lam, errors


def lambda_grid(lo: float, hi: float, count: int, log: bool = True) -> np.ndarray:
    if count < 1 or lo < 0 or hi < lo:
        raise InvalidInput(f"bad grid {lo}:{hi}:{count}")
    if count == 1:
        return np.array([lo])
    if log:
        if lo <= 0:
            raise InvalidInput("log-spaced grid needs lo > 0")
        return np.geomspace(lo, hi, count)
    return np.linspace(lo, hi, count)


def relative_lambda_grid(series: TimeSeries, space: SpaceContract, lo=1e-3, hi=1.0,
                         count=20) -> np.ndarray:
    """Log-spaced grid on [lo, hi] scaled by the median adjacent distance."""
    scale = median_adjacent_distance(list(series.observations), space)
    if scale <= 0:
        scale = 1.0
    return scale * lambda_grid(lo, hi, count, log=True)


@dataclass
class JumpSelection:
    lam: float
    fit: FitResult
    exact: bool  # False when no searched lambda gave the target count
    monotone: bool  # jump counts were nonincreasing in lambda along the search
    evaluations: list[tuple[float, int]] = field(default_factory=list)

    @property
    def jump_count(self) -> int:
        return len(self.fit.jumps)


def select_lambda_by_jumps(series: TimeSeries, space: SpaceContract, target: int,
                           lam_range, cfg: SolverConfig | None = None,
                           rel_width: float = 0.01) -> JumpSelection:
    """Smallest lambda (to ``rel_width`` in log scale) giving ``target`` jumps.

    ``lam_range = (lo, hi)`` must bracket the target: at least ``target``
    jumps at ``lo`` and at most ``target`` at ``hi``. For ``target == 0``
    in spaces with log coordinates the answer is exact: the smallest lambda
    in range at which the constant Fréchet mean is optimal.
    """
    if target < 0:
        raise InvalidInput("target jump count must be nonnegative")
    lo, hi = (float(v) for v in lam_range)
    if not 0 < lo < hi:
        raise InvalidInput(f"need 0 < lo < hi, got {lo}, {hi}")
    cfg = cfg or SolverConfig(lam=lo)
    fits: dict[float, FitResult] = {}

    def count(lam):
        fits[lam] = fit(series, space, cfg.with_lambda(lam))
        return len(fits[lam].jumps)

    if target == 0 and cfg.fused_check:
        lam0 = fused_lambda(series, space)
        if lam0 is not None:
            if lam0 > hi:
                raise InvalidInput(f"a constant fit needs lambda >= {lam0:g}, above {hi:g}")
            lam = max(lam0, lo)
            count(lam)
            return JumpSelection(lam, fits[lam], True, True, [(lam, 0)])

    j_lo, j_hi = count(lo), count(hi)
    if not j_lo >= target >= j_hi:
        raise InvalidInput(
            f"range [{lo:g}, {hi:g}] gives {j_lo}..{j_hi} jumps, not bracketing {target}"
        )
    if j_lo == target:
        hi = lo
    while hi / lo - 1.0 > rel_width:
        mid = math.sqrt(lo * hi)
        if count(mid) > target:
            lo = mid
        else:
            hi = mid

    evaluations = sorted((lam, len(f.jumps)) for lam, f in fits.items())
    counts = [c for _, c in evaluations]
    monotone = all(a >= b for a, b in zip(counts, counts[1:]))
    if len(fits[hi].jumps) == target:
        return JumpSelection(hi, fits[hi], True, monotone, evaluations)
    lam = min(fits, key=lambda v: (abs(len(fits[v].jumps) - target), v))
    return JumpSelection(lam, fits[lam], False, monotone, evaluations)
