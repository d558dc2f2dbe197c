import numpy as np
import pytest

from tvfrechet.core import frechet_mean
from tvfrechet.errors import InvalidInput
from tvfrechet.spaces import EuclideanSpace, euclid_distance, euclid_geodesic


def test_distance_zero():
    assert euclid_distance([1.0, 2.0], [1.0, 2.0]) == 0.0


def test_distance_345():
    assert euclid_distance([0.0, 0.0], [3.0, 4.0]) == 5.0


def test_distance_componentwise(rng):
    p, q = rng.normal(size=(2, 7))
    assert euclid_distance(p, q) == pytest.approx(np.sqrt(sum((a - b) ** 2 for a, b in zip(p, q))))


def test_distance_dimension_mismatch():
    with pytest.raises(InvalidInput):
        euclid_distance([0.0], [0.0, 1.0])


@pytest.mark.parametrize("theta, expected", [(0.0, [0.0]), (1.0, [2.0]), (0.5, [1.0])])
def test_geodesic(theta, expected):
    np.testing.assert_allclose(euclid_geodesic([0.0], [2.0], theta), expected)


def test_geodesic_endpoints_exact(rng):
    p, q = rng.normal(size=(2, 4))
    np.testing.assert_array_equal(euclid_geodesic(p, q, 0.0), p)
    np.testing.assert_array_equal(euclid_geodesic(p, q, 1.0), q)


@pytest.mark.parametrize("theta", [-0.1, 1.1])
def test_geodesic_bad_theta(theta):
    with pytest.raises(InvalidInput):
        euclid_geodesic([0.0], [1.0], theta)


def test_frechet_mean_is_arithmetic(rng):
    pts = list(rng.normal(size=(11, 3)))
    np.testing.assert_allclose(frechet_mean(pts, EuclideanSpace(3)), np.mean(pts, axis=0),
                               atol=1e-15)


def test_space_accepts_scalars():
    sp = EuclideanSpace(1)
    assert sp.distance(1.0, 4.0) == 3.0
    assert sp.validate(2.0).shape == (1,)


def test_space_rejects_bad_points():
    sp = EuclideanSpace(2)
    with pytest.raises(InvalidInput):
        sp.validate([1.0, np.nan])
    with pytest.raises(InvalidInput):
        sp.validate([1.0, 2.0, 3.0])
    with pytest.raises(InvalidInput):
        EuclideanSpace(0)


def test_compiled_distances_match(rng):
    sp = EuclideanSpace(5)
    P, Q = rng.normal(size=(2, 20, 5))
    np.testing.assert_allclose(sp.distances(list(P), list(Q)),
                               [euclid_distance(p, q) for p, q in zip(P, Q)], rtol=1e-14)
