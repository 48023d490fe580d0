import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hidim import nonparametric as npm
from hidim.datagen import RandomSource
from hidim.errors import InvalidInput
from hidim.sparse import TuningParameters


class TestBasis:
    def test_constant_function(self):
        assert npm.trig_basis_eval(1, 0.37) == pytest.approx(1.0)

    def test_cosine_at_zero(self):
        assert npm.trig_basis_eval(2, 0.0) == pytest.approx(math.sqrt(2))

    def test_orthogonality_by_quadrature(self):
        x = (np.arange(10_000) + 0.5) / 10_000
        f2 = np.array([npm.trig_basis_eval(2, t) for t in x[:50]])
        assert f2.shape == (50,)
        vals = npm.FourierFunction(np.array([0, 1.0]))(x) * npm.FourierFunction(np.array([0, 0, 1.0]))(x)
        assert abs(vals.mean()) <= 1e-6

    def test_index_starts_at_one(self):
        with pytest.raises(InvalidInput):
            npm.trig_basis_eval(0, 0.1)


class TestSobolev:
    def test_weights(self):
        assert npm.sobolev_weight(2, 1.0) == 2.0
        assert npm.sobolev_weight(3, 1.0) == 2.0
        assert npm.sobolev_weight(2, 0.0) == 1.0

    def test_ellipsoid_norm(self):
        assert npm.ellipsoid_norm(np.zeros(4), 1.0) == 0.0
        assert npm.ellipsoid_norm(np.array([0, 1.0]), 1.0) == pytest.approx(4.0)

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, 7, elements=st.floats(-3, 3)), st.floats(-4, 4))
    def test_homogeneity(self, theta, c):
        assert npm.ellipsoid_norm(c * theta, 1.5) == pytest.approx(c**2 * npm.ellipsoid_norm(theta, 1.5),
                                                                   rel=1e-9, abs=1e-9)

    def test_truncation_bias(self):
        spec = npm.SobolevSpec(1.0, 1.0)
        assert npm.truncation_bias_bound(npm.SobolevSpec(2.0, 3.0), 1) == 3.0
        assert npm.truncation_bias_bound(spec, 10) == pytest.approx(0.01)
        vals = [npm.truncation_bias_bound(spec, m) for m in range(1, 20)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_spec_validation(self):
        with pytest.raises(InvalidInput):
            npm.SobolevSpec(0.5, 1.0)


class TestProjection:
    def test_realizable(self):
        n, beta = 64, 1.0
        m = npm.projection_level(n, beta)
        coef = RandomSource(0).generator().standard_normal(m)
        y = npm.sample_on_regular_design(npm.FourierFunction(coef), n)
        np.testing.assert_allclose(npm.projection_estimator(y, beta).coefficients, coef, atol=1e-8)

    def test_infinite_smoothness(self, rng):
        y = rng.standard_normal(50)
        est = npm.projection_estimator(y, math.inf)
        assert est.basis_size == 1
        assert est.coefficients[0] == pytest.approx(y.mean())

    def test_level_monotone(self):
        for beta in (0.75, 1.0, 2.0, 3.5):
            levels = [npm.projection_level(2**j, beta) for j in range(2, 16)]
            assert all(b >= a for a, b in zip(levels, levels[1:]))

    def test_sampling_matches_direct_evaluation(self, rng):
        f = npm.FourierFunction(rng.standard_normal(9))
        x = npm.regular_design_points(32)
        np.testing.assert_allclose(npm.sample_on_regular_design(f, 32), f(x), atol=1e-10)


class TestAdaptive:
    def test_zero_response(self):
        tuning = npm.adaptive_tuning("bic", 1.0, 32)
        assert np.all(npm.adaptive_estimator(np.zeros(32), "bic", tuning).coefficients == 0)

    def test_single_harmonic_support(self):
        n, sigma = 128, 0.05
        coef = np.zeros(5)
        coef[4] = 3.0
        f = npm.FourierFunction(coef)
        tuning = npm.adaptive_tuning("bic", sigma, n)
        hits = 0
        for s in range(100):
            y = npm.sample_on_regular_design(f, n) + sigma * RandomSource(s).generator().standard_normal(n)
            hits += list(np.flatnonzero(npm.adaptive_estimator(y, "bic", tuning).coefficients)) == [4]
        assert hits >= 95

    def test_lasso_shrinks(self, rng):
        n = 64
        y = rng.standard_normal(n)
        tuning = npm.adaptive_tuning("lasso", 1.0, n)
        est = npm.adaptive_estimator(y, "lasso", tuning).coefficients
        phi = np.array([[npm.trig_basis_eval(j, x) for j in range(1, n)] for x in npm.regular_design_points(n)])
        assert np.all(np.abs(est) <= np.abs(phi.T @ y / n) + 1e-12)

    def test_unknown_method(self):
        with pytest.raises(InvalidInput):
            npm.adaptive_estimator(np.zeros(8), "ridge", TuningParameters(0.1, 0.05, 1.0))


class TestError:
    def test_identity(self, rng):
        f = npm.FourierFunction(rng.standard_normal(5))
        assert npm.function_l2_error(f, f) == 0.0

    def test_disjoint(self):
        a = npm.FourierFunction(np.array([0, 2.0]))
        b = npm.FourierFunction(np.array([0, 0, 0, 3.0]))
        assert npm.function_l2_error(a, b) == pytest.approx(13.0)
        assert npm.function_l2_error(b, a) == npm.function_l2_error(a, b)
