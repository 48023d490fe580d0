import math

import numpy as np
import pytest

from hidim import datagen
from hidim.datagen import NoiseKind, RandomSource
from hidim.errors import InvalidInput
from hidim.nonparametric import sobolev_weight
from hidim.sparse import check_inc


class TestRandomSource:
    def test_same_token_same_stream(self):
        a = RandomSource(3, 5).generator().standard_normal(4)
        b = RandomSource(3, 5).generator().standard_normal(4)
        np.testing.assert_array_equal(a, b)

    def test_children_differ(self):
        base = RandomSource(3)
        a = base.child("x").generator().standard_normal(4)
        b = base.child("y").generator().standard_normal(4)
        assert not np.allclose(a, b)

    def test_stream_id_stable(self):
        assert datagen.stream_id(1, 2) == datagen.stream_id(1, 2)
        assert datagen.stream_id(1, 2) != datagen.stream_id(2, 1)

    def test_rejects_other_rng(self):
        with pytest.raises(InvalidInput):
            datagen.as_generator(42)


class TestNoise:
    def test_sigma_zero(self, source):
        assert np.all(datagen.sample_noise(NoiseKind("gaussian", 0.0), 10, source) == 0)

    def test_rademacher_support(self, source):
        z = datagen.sample_noise(NoiseKind("rademacher", 1.0), 1000, source)
        assert set(np.unique(z)) == {-1.0, 1.0}

    def test_uniform_range(self, source):
        z = datagen.sample_noise(NoiseKind("uniform", 2.0), 1000, source)
        assert np.all(np.abs(z) <= 2.0)

    def test_gaussian_moments(self, source):
        n, s = 100_000, 1.5
        z = datagen.sample_noise(NoiseKind("gaussian", s), n, source)
        assert abs(z.mean()) <= 4 * s / math.sqrt(n)
        assert z.var() == pytest.approx(s**2, rel=0.05)

    def test_unknown_kind(self):
        with pytest.raises(InvalidInput):
            NoiseKind("cauchy")


class TestDesigns:
    def test_rademacher_column_norms(self, source):
        x = datagen.rademacher_design(30, 7, source)
        np.testing.assert_allclose(np.linalg.norm(x, axis=0), math.sqrt(30))

    def test_rademacher_determinism(self):
        a = datagen.rademacher_design(5, 3, RandomSource(1))
        b = datagen.rademacher_design(5, 3, RandomSource(1))
        np.testing.assert_array_equal(a, b)

    @pytest.mark.slow
    def test_rademacher_incoherence_at_sample_size(self):
        k, d = 2, 8
        n = int(math.ceil(2**13 * k**2 * math.log(d)))
        hits = sum(check_inc(datagen.rademacher_design(n, d, RandomSource(s)), k) for s in range(10))
        assert hits >= 9

    def test_trig_first_column(self):
        x = datagen.regular_trig_design(8, 7)
        np.testing.assert_allclose(x[:, 0], 1.0)

    def test_trig_orthonormal(self):
        x = datagen.regular_trig_design(8, 7)
        assert np.max(np.abs(x.T @ x / 8 - np.eye(7))) <= 1e-10
        assert np.max(np.abs(x)) <= math.sqrt(2) + 1e-12

    def test_trig_too_many_columns(self):
        with pytest.raises(InvalidInput):
            datagen.regular_trig_design(8, 9)


class TestTruths:
    def test_sparse_truth_edges(self, source):
        assert np.count_nonzero(datagen.sparse_truth(6, 0, 1.0, source)) == 0
        assert np.count_nonzero(datagen.sparse_truth(6, 6, 1.0, source)) == 6

    def test_sparse_truth_support_size(self):
        for s in range(20):
            assert np.count_nonzero(datagen.sparse_truth(10, 3, 0.7, RandomSource(s))) == 3

    def test_spike_isotropic(self, source):
        x = datagen.spiked_covariance_sample(50_000, 3, 0.0, np.array([1.0, 0, 0]), source)
        np.testing.assert_allclose(x.T @ x / x.shape[0], np.eye(3), atol=0.03)

    def test_spike_leading_eigenvalue(self, source):
        v = np.ones(5) / math.sqrt(5)
        x = datagen.spiked_covariance_sample(100_000, 5, 4.0, v, source)
        top = np.linalg.eigvalsh(x.T @ x / x.shape[0])[-1]
        assert top == pytest.approx(5.0, rel=0.1)

    def test_spike_reproducible(self):
        v = np.array([1.0, 0.0])
        a = datagen.spiked_covariance_sample(4, 2, 1.0, v, RandomSource(9))
        b = datagen.spiked_covariance_sample(4, 2, 1.0, v, RandomSource(9))
        np.testing.assert_array_equal(a, b)

    def test_sobolev_on_boundary(self, source):
        beta, q = 1.5, 2.0
        theta = datagen.sobolev_truth(beta, q, 64, source)
        a = np.array([sobolev_weight(j, beta) for j in range(1, 65)])
        assert np.sum(a**2 * theta**2) == pytest.approx(q, rel=1e-10)
        assert np.all(np.abs(theta) <= math.sqrt(q) / a + 1e-12)

    def test_sobolev_single_coefficient(self, source):
        theta = datagen.sobolev_truth(1.0, 3.0, 1, source)
        assert abs(theta[0]) == pytest.approx(math.sqrt(3.0) / sobolev_weight(1, 1.0))
