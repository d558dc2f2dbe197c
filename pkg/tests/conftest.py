import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from tvfrechet.spaces import EuclideanSpace, SPDSpace, WassersteinSpace  # noqa: E402

FIXTURES = Path(__file__).resolve().parent / "fixtures"


def random_spd(rng, m=3, spread=1.0):
    """exp of a random symmetric matrix: well-conditioned SPD test points."""
    S = rng.normal(scale=spread, size=(m, m))
    S = 0.5 * (S + S.T)
    w, V = np.linalg.eigh(S)
    return (V * np.exp(w)) @ V.T


def random_quantiles(rng, G=200):
    """Sorted samples: an arbitrary valid quantile function on the grid."""
    return np.sort(rng.normal(rng.normal(), np.exp(rng.normal(scale=0.5)), size=G))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["euclidean", "spd-ai", "spd-le", "wasserstein"])
def any_space(request):
    """(space, point sampler) for every backend."""
    name = request.param
    if name == "euclidean":
        return EuclideanSpace(3), lambda r: r.normal(size=3)
    if name == "wasserstein":
        return WassersteinSpace(200), lambda r: random_quantiles(r, 200)
    return SPDSpace(3, name[4:]), lambda r: random_spd(r)
