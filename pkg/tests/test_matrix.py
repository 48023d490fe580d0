import itertools
import math
import warnings

import numpy as np
import pytest

from hidim import matrix
from hidim.datagen import RandomSource, regular_trig_design
from hidim.errors import InvalidInput
from hidim.linalg import hard_threshold_spectrum


def ort_instance(n, d, t, rank, sigma, seed):
    g = RandomSource(seed).generator()
    truth = matrix.low_rank_truth(d, t, rank, 3.0, g)
    return matrix.make_matrix_instance(regular_trig_design(n, d), truth, sigma, g)


class TestSequenceModel:
    def test_noiseless(self):
        inst = ort_instance(32, 5, 4, 2, 0.0, 0)
        np.testing.assert_allclose(matrix.to_sequence_model(inst), inst.truth, atol=1e-12)

    def test_scaled_identity(self, rng):
        n = 5
        y = rng.standard_normal((n, 3))
        inst = matrix.MatrixRegressionInstance(math.sqrt(n) * np.eye(n), y)
        np.testing.assert_allclose(matrix.to_sequence_model(inst), y / math.sqrt(n))
        assert matrix.to_sequence_model(inst).shape == (5, 3)

    def test_requires_orthogonal_design(self, rng):
        inst = matrix.MatrixRegressionInstance(rng.standard_normal((10, 3)), rng.standard_normal((10, 2)))
        with pytest.raises(InvalidInput):
            matrix.to_sequence_model(inst)


class TestSvt:
    def test_threshold_formula(self):
        expected = 8 * math.sqrt(math.log(12) * 10 / 100) + 4 * math.sqrt(2 * math.log(10) / 100)
        assert matrix.svt_threshold(1.0, 100, 10, 10, 0.1) == pytest.approx(expected)
        assert matrix.svt_threshold(0.0, 100, 10, 10, 0.1) == 0.0
        assert matrix.svt_threshold(1.0, 100, 10, 10, 1 - 1e-15) == pytest.approx(8 * math.sqrt(math.log(12) / 10),
                                                                                 rel=1e-6)

    def test_keeps_strong_signal(self, source):
        y = matrix.low_rank_truth(6, 5, 2, 4.0, source)
        np.testing.assert_allclose(matrix.svt(y, 1.0), y, atol=1e-12)

    def test_kills_weak_signal(self, rng):
        y = rng.standard_normal((4, 4))
        assert np.all(matrix.svt(y, np.linalg.norm(y, 2) + 1e-9) == 0)

    def test_delegates(self, rng):
        y = rng.standard_normal((5, 4))
        np.testing.assert_array_equal(matrix.svt(y, 1.2), hard_threshold_spectrum(y, 1.2))


class TestRankPenalized:
    def test_zero_penalty_full_projection(self, rng):
        x = rng.standard_normal((12, 4))
        y = rng.standard_normal((12, 3))
        inst = matrix.MatrixRegressionInstance(x, y)
        np.testing.assert_allclose(matrix.rank_penalized(inst, 0.0), x @ np.linalg.lstsq(x, y, rcond=None)[0],
                                   atol=1e-10)

    def test_huge_penalty(self, rng):
        inst = matrix.MatrixRegressionInstance(rng.standard_normal((12, 4)), rng.standard_normal((12, 3)))
        big = np.sum(inst.response**2) * inst.t + 1.0
        k, _ = matrix.select_rank(inst, big)
        assert k == 0
        assert np.all(matrix.rank_penalized(inst, big) == 0)

    def test_objective_scan_from_scratch(self, rng):
        for seed in range(5):
            g = np.random.default_rng(seed)
            x = g.standard_normal((15, 4))
            y = x @ g.standard_normal((4, 2)) @ g.standard_normal((2, 5)) + 0.5 * g.standard_normal((15, 5))
            inst = matrix.MatrixRegressionInstance(x, y)
            tau_sq = 0.05
            b_ls = np.linalg.lstsq(x, y, rcond=None)[0]
            u, s, vt = np.linalg.svd(x @ b_ls, full_matrices=False)
            objs = []
            for k in range(0, 5):
                fit = (u[:, :k] * s[:k]) @ vt[:k]
                objs.append(np.sum((y - fit) ** 2) / 15 + 2 * tau_sq * k)
            k_hat, scan = matrix.select_rank(inst, tau_sq)
            np.testing.assert_allclose(scan, objs, atol=1e-10)
            assert k_hat == int(np.argmin(objs))


class TestCovariance:
    def test_point_mass(self):
        x = np.tile([1.0, 0, 0], (7, 1))
        np.testing.assert_allclose(matrix.empirical_covariance(x), np.diag([1.0, 0, 0]))

    def test_single_sample(self, rng):
        x = rng.standard_normal(4)
        np.testing.assert_allclose(matrix.empirical_covariance(x[None]), np.outer(x, x))

    def test_operator_norm_deviation(self):
        n, d, delta = 100_000, 5, 0.01
        u = (2 * d * math.log(144) + 2 * math.log(1 / delta)) / n
        bound = 32 * max(u, math.sqrt(u))
        for s in range(10):
            x = RandomSource(s).generator().standard_normal((n, d))
            assert np.linalg.norm(matrix.empirical_covariance(x) - np.eye(d), 2) <= bound


class TestPca:
    def test_diagonal(self):
        np.testing.assert_allclose(matrix.pca_leading(np.diag([3.0, 1.0])), [1.0, 0.0])

    def test_degenerate_flagged(self):
        with pytest.warns(matrix.DegenerateSpectrum):
            v = matrix.pca_leading(np.eye(3))
        assert np.linalg.norm(v) == pytest.approx(1.0)

    def test_eigen_residual(self, rng):
        a = rng.standard_normal((6, 6))
        s = a @ a.T
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            v = matrix.pca_leading(s)
        lam = np.linalg.eigvalsh(s)[-1]
        assert np.linalg.norm(s @ v - lam * v) <= 1e-6


class TestSparsePca:
    def test_full_sparsity_is_pca(self, rng):
        a = rng.standard_normal((5, 5))
        s = a @ a.T
        np.testing.assert_allclose(matrix.sparse_pca(s, 5), matrix.pca_leading(s), atol=1e-10)

    def test_population_spike(self):
        v = np.zeros(8)
        v[[1, 4, 6]] = np.array([1.0, -1.0, 1.0]) / math.sqrt(3)
        s = 2.0 * np.outer(v, v) + np.eye(8)
        out = matrix.sparse_pca(s, 3)
        assert min(np.linalg.norm(out - v), np.linalg.norm(out + v)) <= 1e-10

    def test_randomized_certificate(self, rng):
        a = rng.standard_normal((8, 8))
        s = a @ a.T
        u = matrix.sparse_pca(s, 2)
        best = u @ s @ u
        assert np.count_nonzero(u) <= 2
        for _ in range(1000):
            w = np.zeros(8)
            w[rng.choice(8, 2, replace=False)] = rng.standard_normal(2)
            w /= np.linalg.norm(w)
            assert w @ s @ w <= best + 1e-10

    def test_exhaustive_agreement(self, rng):
        a = rng.standard_normal((6, 6))
        s = a @ a.T
        best = max(np.linalg.eigvalsh(s[np.ix_(c, c)])[-1] for c in itertools.combinations(range(6), 3))
        u = matrix.sparse_pca(s, 3)
        assert u @ s @ u == pytest.approx(best)

    def test_guard(self):
        with pytest.raises(InvalidInput):
            matrix.sparse_pca(np.eye(25), 2)
