import math

import numpy as np
import pytest
from scipy import integrate

from advdebias.numerics import (
    PROJECTION_EPS, DimensionError, RankError, SeededRng, SparseFeatures, dot, normal_cdf, project,
    sample_normal, top_principal_components,
)


class TestDot:
    def test_hand_values(self):
        assert dot([1, 2], [3, 4]) == 11
        assert dot(np.zeros(3), [5, -1, 2]) == 0

    def test_sparse_matches_dense(self):
        sf = SparseFeatures.from_pairs([(0, 1.0), (3, 2.0)], 4)
        assert dot(sf, [5, 6, 7, 8]) == 21
        b = np.array([0.1, 0.7, -2.0, 3.3])
        assert dot(sf, b) == dot(sf.to_dense(), b)

    def test_mismatch(self):
        with pytest.raises(DimensionError):
            dot([1, 2], [1, 2, 3])
        with pytest.raises(DimensionError):
            dot(SparseFeatures.from_pairs([(0, 1.0)], 3), [1, 2])


class TestSparseFeatures:
    def test_indices_must_increase(self):
        with pytest.raises(ValueError):
            SparseFeatures(np.array([2, 1]), np.array([1.0, 1.0]), 4)

    def test_index_bound(self):
        with pytest.raises(ValueError):
            SparseFeatures.from_pairs([(4, 1.0)], 4)


class TestProject:
    def test_zero_direction(self):
        np.testing.assert_array_equal(project([1, 1], [0, 0]), [0, 0])

    def test_below_threshold_is_zero(self):
        tiny = math.sqrt(PROJECTION_EPS) / 10
        np.testing.assert_array_equal(project([1.0, 1.0], [tiny, 0.0]), [0, 0])

    def test_parallel_and_orthogonal_split(self):
        np.testing.assert_allclose(project([3, 0], [1, 0]), [3, 0])
        np.testing.assert_allclose(project([1, 1], [2, 0]), [1, 0])

    def test_mismatch(self):
        with pytest.raises(DimensionError):
            project([1, 2, 3], [1, 2])


class TestSampling:
    def test_zero_stddev_returns_mean(self):
        assert sample_normal(SeededRng(3), 5.0, 0.0) == 5.0

    def test_negative_stddev(self):
        with pytest.raises(ValueError):
            sample_normal(SeededRng(3), 0.0, -1.0)

    def test_moments(self):
        draws = SeededRng(11).normal(0.0, 1.0, 100_000)
        assert abs(draws.mean()) < 0.02
        assert abs(draws.var() - 1.0) < 0.03

    def test_same_seed_same_stream(self):
        a, b = SeededRng(42), SeededRng(42)
        np.testing.assert_array_equal(a.normal(size=50), b.normal(size=50))
        assert not np.array_equal(SeededRng(1).normal(size=5), SeededRng(2).normal(size=5))

    def test_spawned_streams_are_distinct(self):
        root = SeededRng(5)
        x, y = root.spawn(1).normal(size=8), root.spawn(2).normal(size=8)
        nested = root.spawn(1).spawn(1).normal(size=8)
        assert not np.array_equal(x, y)
        assert not np.array_equal(x, nested)
        np.testing.assert_array_equal(x, SeededRng(5).spawn(1).normal(size=8))


class TestNormalCdf:
    def test_center(self):
        assert normal_cdf(0.0) == 0.5

    def test_quantile(self):
        assert abs(normal_cdf(1.959964) - 0.975) < 1e-6

    def test_far_tail(self):
        assert normal_cdf(-8.0) < 1e-14

    @pytest.mark.parametrize("x", [-3.1, -1.2, -0.4, 0.3, 0.9, 2.2, 4.0])
    def test_against_quadrature(self, x):
        dens = lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi)
        area, _ = integrate.quad(dens, -np.inf, x, epsabs=1e-13)
        assert abs(normal_cdf(x) - area) <= 1e-7

    def test_symmetry(self):
        for x in np.linspace(-6, 6, 41):
            assert abs(normal_cdf(x) + normal_cdf(-x) - 1.0) < 1e-12


class TestPrincipalComponents:
    def test_single_axis(self):
        (c,) = top_principal_components([[1, 0], [-1, 0], [2, 0]], 1)
        np.testing.assert_allclose(np.abs(c), [1, 0], atol=1e-12)

    def test_identical_rows_rank_error(self):
        with pytest.raises(RankError) as info:
            top_principal_components([[1.0, 2.0]] * 4, 1)
        assert info.value.rank == 0

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            top_principal_components([[1, 0], [0, 1]], 3)
        with pytest.raises(ValueError):
            top_principal_components([[1, 0], [0, 1]], 0)

    def test_matches_covariance_eigenvectors(self, rng):
        rows = rng.normal(size=(10, 5))
        comps = top_principal_components(rows, 2)
        cov = np.cov(rows, rowvar=False)
        vals, vecs = np.linalg.eigh(cov)
        for c, i in zip(comps, [-1, -2]):
            ref = vecs[:, i]
            ref = ref if ref[np.argmax(np.abs(ref))] > 0 else -ref
            np.testing.assert_allclose(c, ref, atol=1e-6)
        assert abs(comps[0] @ comps[1]) < 1e-8

    def test_sign_convention(self, rng):
        for c in top_principal_components(rng.normal(size=(8, 4)), 3):
            assert c[np.argmax(np.abs(c))] > 0
            assert abs(np.linalg.norm(c) - 1) < 1e-12
