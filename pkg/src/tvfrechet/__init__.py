"""Total-variation regularized Fréchet regression for time-indexed data in
geodesic metric spaces (Euclidean, SPD matrices, 1-D Wasserstein)."""
from .core import (
    MeanOptions,
    SpaceContract,
    StepFunction,
    TimeSeries,
    d_n,
    evaluate_step,
    frechet_mean,
    total_variation,
)
from .errors import ConvergenceFailure, InvalidInput, NotPositiveDefinite, TVFrechetError
from .selection import JumpSelection, cross_validate, select_lambda_by_jumps
from .solver import (
    FitResult,
    SolverConfig,
    extract_jumps,
    fit,
    fused_lambda,
    objective,
    prox_data,
    prox_tv_pair,
)
from .spaces import EuclideanSpace, SPDSpace, WassersteinSpace

__version__ = "0.1.0"

__all__ = [
    "ConvergenceFailure", "EuclideanSpace", "FitResult", "InvalidInput", "JumpSelection",
    "MeanOptions", "NotPositiveDefinite", "SPDSpace", "SolverConfig", "SpaceContract",
    "StepFunction", "TVFrechetError", "TimeSeries", "WassersteinSpace", "cross_validate",
    "d_n", "evaluate_step", "extract_jumps", "fit", "frechet_mean", "fused_lambda", "objective", "prox_data",
    "prox_tv_pair", "select_lambda_by_jumps", "total_variation",
]
