from .euclidean import EuclideanSpace, euclid_distance, euclid_geodesic
from .spd import (
    SPDSpace,
    SymEig,
    d_ai,
    d_le,
    spd_exp,
    spd_frechet_mean_ai,
    spd_frechet_mean_le,
    spd_geodesic_ai,
    spd_geodesic_le,
    spd_log,
    spd_sqrt,
    sym_eig,
)
from .wasserstein import (
    TransportMap,
    WassersteinSpace,
    gaussian_quantile_point,
    normal_quantile,
    pushforward,
    quantile_from_samples,
    w2_distance,
    w2_frechet_mean,
    w2_geodesic,
)
