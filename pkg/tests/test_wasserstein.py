import mpmath
import numpy as np
import pytest
from conftest import random_quantiles

from tvfrechet.core import inductive_mean
from tvfrechet.errors import InvalidInput
from tvfrechet.spaces import (
    EuclideanSpace,
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
from tvfrechet.spaces.wasserstein import monotone_project, moments, quantile_grid


def N(mu, sd, G=1000):
    return gaussian_quantile_point(mu, sd, G)


class TestDistance:
    def test_identical(self):
        assert w2_distance(N(0, 1), N(0, 1)) == 0.0

    def test_shift(self):
        assert w2_distance(N(0, 1), N(1, 1)) == pytest.approx(1.0, abs=1e-12)

    def test_scale(self):
        assert w2_distance(N(0, 1), N(0, 2)) == pytest.approx(1.0, abs=1e-3)

    def test_grid_mismatch(self):
        with pytest.raises(InvalidInput):
            w2_distance(N(0, 1, 10), N(0, 1, 11))

    def test_scaled_euclidean(self, rng):
        for _ in range(20):
            F, G = random_quantiles(rng, 300), random_quantiles(rng, 300)
            e = EuclideanSpace(300).distance(F, G)
            assert WassersteinSpace(300).distance(F, G) == pytest.approx(e / np.sqrt(300),
                                                                          rel=1e-12)


class TestGeodesic:
    def test_endpoint(self):
        np.testing.assert_array_equal(w2_geodesic(N(0, 1), N(3, 2), 0.0), N(0, 1))

    def test_shift_midpoint(self):
        np.testing.assert_allclose(w2_geodesic(N(0, 1), N(2, 1), 0.5), N(1, 1), atol=1e-12)

    def test_parametrization(self, rng):
        F, G = random_quantiles(rng), random_quantiles(rng)
        d = w2_distance(F, G)
        for theta in np.linspace(0.1, 0.9, 9):
            assert abs(w2_distance(F, w2_geodesic(F, G, theta)) - theta * d) <= 1e-12 * (1 + d)

    def test_monotone(self, rng):
        F, G = random_quantiles(rng), random_quantiles(rng)
        assert np.all(np.diff(w2_geodesic(F, G, 0.37)) >= 0)


class TestMean:
    def test_single(self):
        np.testing.assert_array_equal(w2_frechet_mean([N(1, 2)]), N(1, 2))

    def test_shifts_average(self):
        np.testing.assert_allclose(w2_frechet_mean([N(-1, 1), N(1, 1)]), N(0, 1), atol=1e-12)

    def test_matches_inductive_mean(self, rng):
        sp = WassersteinSpace(200)
        pts = [random_quantiles(rng) for _ in range(6)]
        assert sp.distance(inductive_mean(pts, sp), w2_frechet_mean(pts)) < 1e-6

    def test_grid_mismatch(self):
        with pytest.raises(InvalidInput):
            w2_frechet_mean([N(0, 1, 5), N(0, 1, 6)])


class TestNormalQuantile:
    def test_median(self):
        assert normal_quantile(0.5) == 0.0
        G = 999
        assert gaussian_quantile_point(2.5, 3.0, G)[G // 2] == pytest.approx(2.5, abs=1e-15)

    def test_975(self):
        ref = float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf("0.975") - 1))
        assert normal_quantile(0.975) == pytest.approx(ref, abs=1e-9)
        assert normal_quantile(0.975) == pytest.approx(1.959964, abs=1e-6)

    def test_against_high_precision(self, rng):
        mpmath.mp.dps = 30
        ps = np.concatenate([rng.uniform(size=200), [1e-12, 1e-6, 0.02, 0.425, 0.575, 1 - 1e-9]])
        for p in ps:
            ref = float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1))
            assert abs(normal_quantile(p) - ref) < 1e-9 * max(1.0, abs(ref))

    def test_symmetry(self, rng):
        p = rng.uniform(size=100)
        np.testing.assert_allclose(normal_quantile(p), -normal_quantile(1 - p), atol=1e-12)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1])
    def test_domain(self, p):
        with pytest.raises(InvalidInput):
            normal_quantile(p)


class TestConstruction:
    def test_sigma_zero(self):
        np.testing.assert_array_equal(gaussian_quantile_point(1.5, 0.0, 10), np.full(10, 1.5))

    def test_sigma_negative(self):
        with pytest.raises(InvalidInput):
            gaussian_quantile_point(0.0, -1.0)

    def test_grid_nodes(self):
        np.testing.assert_allclose(quantile_grid(4), [0.125, 0.375, 0.625, 0.875])
        np.testing.assert_allclose(WassersteinSpace(4).nodes, quantile_grid(4))

    def test_moments_of_gaussian_grid(self):
        a, b = moments(N(1.0, 1.5, 20000))
        assert a == pytest.approx(1.0, abs=1e-12)
        assert b == pytest.approx(1.5, abs=1e-3)


class TestSamples:
    def test_constant(self):
        np.testing.assert_array_equal(quantile_from_samples([2.0] * 7, 5), np.full(5, 2.0))

    def test_order_statistics_by_hand(self):
        # s = 1/6, 1/2, 5/6 sit exactly on the order statistics of 3 samples
        np.testing.assert_allclose(quantile_from_samples([3.0, 1.0, 2.0], 3), [1.0, 2.0, 3.0])

    def test_interpolation_between_order_statistics(self):
        # 2 samples at positions 1/4 and 3/4; s = 1/2 is halfway between them
        np.testing.assert_allclose(quantile_from_samples([0.0, 4.0], 1), [2.0])
        # beyond the extreme positions the value is held constant
        np.testing.assert_allclose(quantile_from_samples([0.0, 4.0], 5)[[0, -1]], [0.0, 4.0])

    def test_large_normal_sample(self):
        x = np.random.default_rng(3).standard_normal(400_000)
        Q = quantile_from_samples(x, 100)
        assert np.max(np.abs(Q - N(0, 1, 100))) < 0.05

    def test_empty(self):
        with pytest.raises(InvalidInput):
            quantile_from_samples([], 10)


class TestTransport:
    def test_fixes_zero(self):
        for k in (-2, -1, 1, 2):
            np.testing.assert_allclose(pushforward(np.zeros(5), TransportMap(k)), 0.0, atol=0)

    def test_value(self):
        assert TransportMap(1)(np.pi / 2) == pytest.approx(np.pi / 2 - 1)

    def test_monotone_outputs(self, rng):
        for k in (-2, -1, 1, 2):
            for _ in range(20):
                out = pushforward(random_quantiles(rng), TransportMap(k))
                assert np.all(np.diff(out) >= -1e-12)

    @pytest.mark.parametrize("k", [0, 3, -3])
    def test_invalid(self, k):
        with pytest.raises(InvalidInput):
            TransportMap(k)


class TestMonotone:
    def test_untouched_when_sorted(self):
        v = np.array([0.0, 1.0, 1.0, 2.0])
        np.testing.assert_array_equal(monotone_project(v), v)

    def test_tiny_violations_left_alone(self):
        v = np.array([0.0, 1.0, 1.0 - 5e-13, 2.0])
        np.testing.assert_array_equal(monotone_project(v), v)

    def test_pool_adjacent_violators(self):
        np.testing.assert_allclose(monotone_project([0.0, 3.0, 1.0, 4.0]), [0.0, 2.0, 2.0, 4.0])

    def test_space_rejects_decreasing(self):
        with pytest.raises(InvalidInput):
            WassersteinSpace(3).validate([0.0, 2.0, 1.0])
