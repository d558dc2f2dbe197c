"""Monte-Carlo harness: mean functions, noise generators, RISE and the
replicated experiment behind the RISE summary table."""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .core import SpaceContract, StepFunction, TimeSeries, default_design, evaluate_step
from .errors import InvalidInput
from .selection import cross_validate, relative_lambda_grid
from .solver import SolverConfig, fit
from .spaces.spd import SPDSpace, spd_exp, spd_invsqrt, spd_sqrt
from .spaces.wasserstein import (
    TransportMap,
    WassersteinSpace,
    moments,
    normal_quantile,
    pushforward,
    quantile_grid,
)

SPD_NOISE_SD = 0.25
TRANSPORT_KS = (-2, -1, 1, 2)
_MASK64 = (1 << 64) - 1


# --------------------------------------------------------------------------
# random numbers


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def replicate_seed(master: int, index: int) -> int:
    """Seed of replicate ``index``; independent of execution order."""
    return splitmix64(splitmix64(master & _MASK64) ^ (index & _MASK64))


class Stream:
    """Counter-based (Philox) stream with the samplers the generators need."""

    def __init__(self, seed: int):
        self.gen = np.random.Generator(np.random.Philox(seed & _MASK64))

    def uniform(self, size=None):
        """Uniform on the open interval (0, 1)."""
        k = self.gen.integers(0, 1 << 53, size=size, dtype=np.int64)
        return (k + 0.5) / float(1 << 53)

    def normal(self, mean=0.0, sd=1.0, size=None):
        """Inverse-transform normal draws."""
        return mean + sd * normal_quantile(self.uniform(size))

    def gamma(self, shape: float, rate: float) -> float:
        """Marsaglia–Tsang, with U^(1/shape) boosting for shape < 1."""
        if not (shape > 0 and rate > 0):
            raise InvalidInput(f"gamma needs positive shape and rate, got {shape}, {rate}")
        boost = 1.0
        if shape < 1.0:
            boost = float(self.uniform()) ** (1.0 / shape)
            shape += 1.0
        d = shape - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            x = float(self.normal())
            v = (1.0 + c * x) ** 3
            if v <= 0.0:
                continue
            u = float(self.uniform())
            if math.log(u) < 0.5 * x * x + d - d * v + d * math.log(v):
                return boost * d * v / rate

    def choice(self, options):
        return options[int(self.gen.integers(0, len(options)))]


# --------------------------------------------------------------------------
# mean functions


def phi(t: float) -> float:
    """Continuous bump with steep logistic flanks at t = 0.25 and t = 0.75."""
    if not 0.0 <= t <= 1.0:
        raise InvalidInput(f"t={t} outside [0, 1]")
    if t < 0.5:
        return 2.0 / (1.0 + math.exp(-40.0 * (t - 0.25)))
    return 2.0 / (1.0 + math.exp(40.0 * (t - 0.75)))


def _third(t: float) -> int:
    return 0 if t < 1.0 / 3.0 else (1 if t < 2.0 / 3.0 else 2)


_SPD_LEVELS = (1.0, 2.0, 3.0)
_WASS_LEVELS = ((0.0, 1.0), (1.0, 1.5), (2.0, 2.0))  # (mean, sd)


@dataclass(frozen=True)
class MeanFunction:
    space: str  # "spd" | "wasserstein"
    setting: str  # "I" | "II"
    evaluator: Callable = field(repr=False, compare=False)

    def __call__(self, t: float):
        if not 0.0 <= t <= 1.0:
            raise InvalidInput(f"t={t} outside [0, 1]")
        return self.evaluator(t)


def _space_tag(space) -> str:
    if isinstance(space, SPDSpace):
        if space.m != 3:
            raise InvalidInput("simulation mean functions are defined for 3x3 SPD only")
        return "spd"
    if isinstance(space, WassersteinSpace):
        return "wasserstein"
    if space in ("spd", "wasserstein"):
        return space
    raise InvalidInput(f"no simulation mean function for space {space!r}")


def mean_function(space, setting: str) -> MeanFunction:
    tag = _space_tag(space)
    if setting not in ("I", "II"):
        raise InvalidInput(f"setting must be 'I' or 'II', got {setting!r}")
    if tag == "spd":
        if setting == "I":
            ev = lambda t: _SPD_LEVELS[_third(t)] * np.eye(3)  # noqa: E731
        else:
            ev = lambda t: (1.0 + phi(t)) * np.eye(3)  # noqa: E731
    else:
        G = space.grid_size if isinstance(space, WassersteinSpace) else 1000
        z = normal_quantile(quantile_grid(G))
        if setting == "I":
            def ev(t):
                m, s = _WASS_LEVELS[_third(t)]
                return m + s * z
        else:
            def ev(t):
                p = phi(t)
                return p + (1.0 + p) * z
    return MeanFunction(tag, setting, ev)


# --------------------------------------------------------------------------
# noise generators


def gen_spd(mu, rng: Stream, noise_sd: float = SPD_NOISE_SD, S=None) -> np.ndarray:
    """mu^1/2 exp(mu^-1/2 S mu^-1/2) mu^1/2 with symmetric Gaussian S.

    The six lower-triangular entries of S are i.i.d. N(0, noise_sd^2);
    pass ``S`` to bypass the draw.
    """
    mu = np.asarray(mu, dtype=float)
    m = mu.shape[0]
    if S is None:
        S = np.zeros((m, m))
        rows, cols = np.tril_indices(m)
        S[rows, cols] = rng.normal(0.0, noise_sd, size=len(rows))
        S = np.tril(S) + np.tril(S, -1).T
    root = spd_sqrt(mu)
    iroot = spd_invsqrt(mu)
    inner = iroot @ S @ iroot
    Y = root @ spd_exp(0.5 * (inner + inner.T)) @ root
    return 0.5 * (Y + Y.T)


def gen_wass(mu, rng: Stream) -> np.ndarray:
    """Random distribution whose Fréchet mean is ``mu`` (quantile grid).

    Draw nu ~ N(a, 1), sigma ~ Gamma(shape b^2/2, rate b/2) from the mean a
    and SD b of ``mu``, then push N(nu, sigma^2) through x - sin(kx)/|k|
    with k uniform on {-2, -1, 1, 2}.
    """
    mu = np.asarray(mu, dtype=float)
    a, b = moments(mu)
    if not b > 0:
        raise InvalidInput("degenerate base distribution (zero spread)")
    nu = float(rng.normal(a, 1.0))
    sigma = rng.gamma(0.5 * b * b, 0.5 * b)
    z = normal_quantile(quantile_grid(len(mu)))
    return pushforward(nu + sigma * z, TransportMap(rng.choice(TRANSPORT_KS)))


def generate(truth: MeanFunction, n: int, rng: Stream) -> TimeSeries:
    t = default_design(n)
    draw = gen_spd if truth.space == "spd" else gen_wass
    return TimeSeries([draw(truth(ti), rng) for ti in t], t)


# --------------------------------------------------------------------------
# error metric


def rise(step: StepFunction, truth: MeanFunction, space: SpaceContract,
         grid: int = 1001) -> float:
    """Root integrated squared error by the midpoint rule on ``grid`` cells."""
    if grid < 1:
        raise InvalidInput("grid must be positive")
    t = (np.arange(grid) + 0.5) / grid
    est = [evaluate_step(step, ti) for ti in t]
    tru = [truth(ti) for ti in t]
    d = space.distances(est, tru)
    return float(np.sqrt(np.mean(d**2)))


# --------------------------------------------------------------------------
# experiment


@dataclass(frozen=True)
class SimConfig:
    space: str  # "spd" (affine-invariant, 3x3) | "wasserstein"
    setting: str  # "I" | "II"
    n: int
    replicates: int = 100
    seed: int = 0
    folds: int = 5
    lam_lo: float = 1e-3  # grid bounds relative to the median adjacent distance
    lam_hi: float = 1.0
    lam_count: int = 20
    grid_size: int = 1000  # quantile grid (Wasserstein only)
    rise_grid: int = 1001
    max_cycles: int = 500
    rel_tol: float = 1e-8

    def __post_init__(self):
        if self.space not in ("spd", "wasserstein"):
            raise InvalidInput(f"space must be 'spd' or 'wasserstein', got {self.space!r}")
        if self.setting not in ("I", "II"):
            raise InvalidInput(f"setting must be 'I' or 'II', got {self.setting!r}")
        if self.n < 2 or self.replicates < 1:
            raise InvalidInput("need n >= 2 and replicates >= 1")
        if not 2 <= self.folds <= self.n:
            raise InvalidInput(f"folds must lie in [2, n], got {self.folds}")
        if not 0 < self.lam_lo <= self.lam_hi or self.lam_count < 1:
            raise InvalidInput("bad lambda grid settings")
        if self.grid_size < 2 or self.rise_grid < 1:
            raise InvalidInput("grid sizes must be positive")
        SolverConfig(lam=0.0, max_cycles=self.max_cycles, rel_tol=self.rel_tol)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise InvalidInput(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise InvalidInput(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "SimConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidInput("config must be a JSON object")
        return cls.from_dict(data)

    def make_space(self) -> SpaceContract:
        return SPDSpace(3, "ai") if self.space == "spd" else WassersteinSpace(self.grid_size)

    def solver(self) -> SolverConfig:
        return SolverConfig(lam=0.0, max_cycles=self.max_cycles, rel_tol=self.rel_tol)


@dataclass
class SimReport:
    config: SimConfig
    rise: list[float]
    lambdas: list[float]
    seeds: list[int]

    @property
    def mean(self) -> float:
        return float(np.mean(self.rise))

    @property
    def sd(self) -> float:
        return float(np.std(self.rise, ddof=1)) if len(self.rise) > 1 else 0.0

    def summary(self) -> str:
        c = self.config
        return (f"{c.space} setting {c.setting} n={c.n}: RISE {self.mean:.3f} "
                f"({self.sd:.3f}) over {len(self.rise)} replicates")

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "mean_rise": self.mean,
            "sd_rise": self.sd,
            "min_rise": float(np.min(self.rise)),
            "max_rise": float(np.max(self.rise)),
            "lambda_median": float(np.median(self.lambdas)),
            "lambda_quartiles": [float(v) for v in np.percentile(self.lambdas, [25, 75])],
            "rise": [float(v) for v in self.rise],
            "lambdas": [float(v) for v in self.lambdas],
            "seeds": [int(s) for s in self.seeds],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimReport":
        return cls(SimConfig.from_dict(d["config"]), list(d["rise"]), list(d["lambdas"]),
                   list(d["seeds"]))

    def write(self, outdir) -> tuple[Path, Path]:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        js = out / "report.json"
        js.write_text(json.dumps(self.to_dict(), indent=2))
        cs = out / "replicates.csv"
        with cs.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replicate", "seed", "lambda", "rise"])
            for i, (s, lam, r) in enumerate(zip(self.seeds, self.lambdas, self.rise)):
                w.writerow([i, s, repr(lam), repr(r)])
        return js, cs


def run_replicate(cfg: SimConfig, index: int) -> tuple[float, float, int]:
    """One replicate: generate, select lambda by CV, refit, score.

    Returns ``(rise, selected_lambda, seed)``.
    """
    seed = replicate_seed(cfg.seed, index)
    rng = Stream(seed)
    space = cfg.make_space()
    truth = mean_function(space, cfg.setting)
    series = generate(truth, cfg.n, rng)
    grid = relative_lambda_grid(series, space, cfg.lam_lo, cfg.lam_hi, cfg.lam_count)
    lam, _ = cross_validate(series, space, grid, cfg.folds, seed=seed, cfg=cfg.solver())
    result = fit(series, space, cfg.solver().with_lambda(lam))
    return rise(result.step, truth, space, cfg.rise_grid), float(lam), seed


def _replicate_star(args):
    return run_replicate(*args)


def default_workers() -> int:
    raw = os.environ.get("TVFRECHET_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_experiment(cfg: SimConfig, workers: int | None = None, progress=None) -> SimReport:
    """Run all replicates; results are ordered by replicate index.

    ``workers > 1`` fans replicates out to processes. Each replicate
    derives its own seed, so the report does not depend on ``workers``.
    ``progress(i, rise)`` is called as replicates finish (in order).
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    jobs = [(cfg, i) for i in range(cfg.replicates)]
    if workers == 1:
        results = map(_replicate_star, jobs)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_replicate_star, jobs)
    out = []
    try:
        for i, res in enumerate(results):
            out.append(res)
            if progress is not None:
                progress(i, res[0])
    finally:
        if pool is not None:
            pool.shutdown()
    rises, lams, seeds = zip(*out)
    return SimReport(cfg, list(rises), list(lams), list(seeds))
