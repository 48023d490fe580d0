import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hidim import sparse
from hidim.datagen import NoiseKind, RandomSource, RegressionInstance, gaussian_design, make_instance, \
    regular_trig_design, sparse_truth
from hidim.errors import InvalidInput
from hidim.harness.experiments import grid_prox_sorted_l1
from hidim.linalg import pseudo_inverse_solve


def instance(n, d, k, sigma, seed, design="gaussian"):
    g = RandomSource(seed).generator()
    x = gaussian_design(n, d, g) if design == "gaussian" else regular_trig_design(n, d)
    return make_instance(x, sparse_truth(d, k, 1.0, g), NoiseKind("gaussian", sigma), g)


def ball_grid_minimizer(inst, radius, coarse=0.02, fine=1e-3):
    """Two-level grid search of the least squares objective over the l1 ball in R^3."""
    def best(points):
        points = points[np.abs(points).sum(1) <= radius + 1e-12]
        r = inst.response[None, :] - points @ inst.design.T
        vals = np.sum(r**2, axis=1) / inst.n
        i = int(np.argmin(vals))
        return points[i], vals[i]

    axis = np.arange(-radius, radius + coarse / 2, coarse)
    c, _ = best(np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), -1).reshape(-1, 3))
    offs = np.arange(-2 * coarse, 2 * coarse + fine / 2, fine)
    return best(np.stack(np.meshgrid(*(ci + offs for ci in c), indexing="ij"), -1).reshape(-1, 3))


class TestLeastSquares:
    def test_noiseless_exact(self):
        inst = instance(20, 4, 4, 0.0, 0)
        np.testing.assert_allclose(sparse.least_squares(inst).estimate, inst.truth, atol=1e-10)

    def test_orthogonal_design(self):
        inst = instance(16, 9, 3, 1.0, 1, design="trig")
        np.testing.assert_allclose(sparse.least_squares(inst).estimate,
                                   inst.design.T @ inst.response / inst.n, atol=1e-8)

    def test_rank_deficient_fitted_values(self, rng):
        x = rng.standard_normal((10, 3))
        x = np.hstack([x, x[:, :1]])
        y = rng.standard_normal(10)
        fit = sparse.least_squares(RegressionInstance(x, y))
        np.testing.assert_allclose(x @ fit.estimate, x @ pseudo_inverse_solve(x, y), atol=1e-10)


class TestL1Ball:
    def test_inactive_constraint(self):
        inst = instance(30, 3, 3, 0.5, 2)
        ls = sparse.least_squares(inst).estimate
        fit = sparse.ls_l1_ball(inst, np.abs(ls).sum() + 1.0)
        np.testing.assert_allclose(fit.estimate, ls, atol=1e-6)

    def test_zero_radius(self):
        assert np.all(sparse.ls_l1_ball(instance(10, 3, 1, 1.0, 3), 0.0).estimate == 0)

    def test_grid_oracle(self):
        for seed in range(3):
            inst = instance(12, 3, 2, 1.0, 10 + seed)
            radius = 0.6 * np.abs(sparse.least_squares(inst).estimate).sum()
            fit = sparse.ls_l1_ball(inst, radius)
            _, grid_val = ball_grid_minimizer(inst, radius)
            own = np.sum((inst.response - inst.design @ fit.estimate) ** 2) / inst.n
            assert np.abs(fit.estimate).sum() <= radius + 1e-9
            assert own <= grid_val + 1e-2


class TestL0:
    def test_full_cardinality(self):
        inst = instance(20, 5, 2, 1.0, 4)
        np.testing.assert_allclose(sparse.ls_l0(inst, 5).estimate, sparse.least_squares(inst).estimate, atol=1e-10)

    def test_zero_cardinality(self):
        assert np.all(sparse.ls_l0(instance(20, 5, 2, 1.0, 4), 0).estimate == 0)

    def test_realizable(self):
        inst = instance(20, 6, 2, 0.0, 5)
        np.testing.assert_allclose(sparse.ls_l0(inst, 2).estimate, inst.truth, atol=1e-10)

    def test_guard(self):
        with pytest.raises(InvalidInput):
            sparse.ls_l0(instance(40, 30, 2, 1.0, 0), 2)


class TestThreshold:
    def test_hard(self):
        tau = 0.7
        np.testing.assert_allclose(sparse.threshold_estimate([3 * tau, tau, 0], tau, "hard"), [3 * tau, 0, 0])

    def test_soft(self):
        tau = 0.7
        np.testing.assert_allclose(sparse.threshold_estimate([3 * tau, tau, 0], tau, "soft"), [tau, 0, 0])

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, 6, elements=st.floats(-5, 5)))
    def test_zero_level_is_identity(self, y):
        for mode in ("hard", "soft"):
            np.testing.assert_array_equal(sparse.threshold_estimate(y, 0.0, mode), y)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, 6, elements=st.floats(-5, 5)), st.floats(0, 3))
    def test_soft_shrinks(self, y, tau):
        out = sparse.threshold_estimate(y, tau, "soft")
        assert np.all(np.abs(out) <= np.abs(y) + 1e-12)
        assert np.all(out * y >= 0)

    def test_bad_mode(self):
        with pytest.raises(InvalidInput):
            sparse.threshold_estimate([1.0], 0.1, "firm")


class TestBic:
    def test_zero_penalty_is_least_squares(self):
        inst = instance(20, 5, 2, 1.0, 6)
        fit = sparse.bic_estimate(inst, sparse.TuningParameters(0.0, 0.05, 1.0))
        ls = sparse.least_squares(inst)
        assert fit.objective_value == pytest.approx(ls.objective_value, abs=1e-10)

    def test_dominating_penalty(self):
        inst = instance(20, 5, 2, 1.0, 6)
        tau = math.sqrt(np.sum(inst.response**2) / inst.n) * 1.01
        assert np.all(sparse.bic_estimate(inst, sparse.TuningParameters(tau, 0.05, 1.0)).estimate == 0)

    @pytest.mark.slow
    def test_oracle_inequality_orthogonal(self):
        n, d, k, sigma, delta = 64, 8, 2, 0.5, 0.05
        bound = 224 * k * sigma**2 * math.log(math.e * d) / n + 32 * sigma**2 * math.log(1 / delta) / n
        tuning = sparse.TuningParameters.bic(sigma, n, d, delta)
        hits = sum(sparse.bic_estimate(instance(n, d, k, sigma, s, "trig"), tuning).predicted_mse <= bound
                   for s in range(500))
        assert hits >= (1 - delta) * 500


class TestLasso:
    def test_orthogonal_soft_threshold(self):
        inst = instance(64, 31, 4, 1.0, 7, design="trig")
        tau = 0.2
        fit = sparse.lasso_cd(inst, tau, tol=1e-12)
        closed = sparse.threshold_estimate(inst.design.T @ inst.response / inst.n, tau / 2, "soft")
        np.testing.assert_allclose(fit.estimate, closed, atol=1e-9)

    def test_zero_penalty(self):
        inst = instance(40, 5, 2, 1.0, 8)
        fit = sparse.lasso_cd(inst, 0.0, tol=1e-12)
        np.testing.assert_allclose(fit.estimate, sparse.least_squares(inst).estimate, atol=1e-6)

    def test_zero_at_large_penalty(self):
        inst = instance(40, 10, 2, 1.0, 9)
        tau = np.max(np.abs(inst.design.T @ inst.response)) / inst.n
        assert np.all(sparse.lasso_cd(inst, tau).estimate == 0)
        assert np.any(sparse.lasso_cd(inst, 0.9 * tau).estimate != 0)

    def test_kkt(self):
        inst = instance(50, 20, 3, 1.0, 10)
        tau = 0.1
        fit = sparse.lasso_cd(inst, tau, tol=1e-10)
        G = inst.design.T @ inst.design / inst.n
        b = inst.design.T @ inst.response / inst.n
        assert sparse.lasso_kkt_residual(G, b, fit.estimate, tau) <= 1e-6

    def test_warm_start_same_solution(self):
        inst = instance(50, 20, 3, 1.0, 11)
        cold = sparse.lasso_cd(inst, 0.1, tol=1e-12).estimate
        warm = sparse.lasso_cd(inst, 0.1, tol=1e-12, warm_start=np.ones(20)).estimate
        np.testing.assert_allclose(cold, warm, atol=1e-7)


class TestSlope:
    def test_equal_weights_reduce_to_lasso(self):
        inst = instance(40, 6, 2, 1.0, 12)
        tau, c = 0.1, 1.5
        fit = sparse.slope_pgd(inst, tau, np.full(6, c), tol=1e-12)
        lasso = sparse.lasso_cd(inst, tau * c, tol=1e-12)
        np.testing.assert_allclose(fit.estimate, lasso.estimate, atol=1e-6)

    def test_zero_tau(self):
        inst = instance(40, 5, 2, 1.0, 13)
        fit = sparse.slope_pgd(inst, 0.0, sparse.slope_weights(5), tol=1e-14)
        np.testing.assert_allclose(fit.estimate, sparse.least_squares(inst).estimate, atol=1e-6)

    def test_enumeration_oracle(self):
        lam = sparse.slope_weights(4)
        for seed in range(10):
            inst = instance(20, 4, 2, 1.0, 100 + seed)
            fit = sparse.slope_pgd(inst, 0.3, lam)
            _, best = sparse.slope_enumeration_oracle(inst, 0.3, lam)
            assert fit.objective_value == pytest.approx(best, abs=1e-6)

    def test_weights_decreasing(self):
        w = sparse.slope_weights(10)
        assert np.all(np.diff(w) < 0) and w[-1] > 0


class TestProxSortedL1:
    def test_zero(self):
        np.testing.assert_array_equal(sparse.prox_sorted_l1(np.zeros(4), [3, 2, 1, 0]), np.zeros(4))

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, 5, elements=st.floats(-3, 3)), st.floats(0, 2))
    def test_equal_weights_soft_threshold(self, v, w):
        out = sparse.prox_sorted_l1(v, np.full(5, w))
        np.testing.assert_allclose(out, np.sign(v) * np.maximum(np.abs(v) - w, 0), atol=1e-12)

    def test_grid_oracle(self, rng):
        for _ in range(10):
            v = rng.uniform(-1, 1, 3)
            w = np.sort(rng.uniform(0, 0.5, 3))[::-1]
            assert np.max(np.abs(sparse.prox_sorted_l1(v, w) - grid_prox_sorted_l1(v, w))) <= 1e-2

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, 6, elements=st.floats(-3, 3)))
    def test_order_preserving(self, v):
        out = sparse.prox_sorted_l1(v, sparse.slope_weights(6))
        # the prox keeps the ordering of magnitudes and the signs
        order = np.argsort(-np.abs(v), kind="stable")
        assert np.all(np.diff(np.abs(out[order])) <= 1e-12)
        assert np.all(out * v >= 0)


class TestIncoherence:
    def test_orthogonal(self):
        assert sparse.incoherence(regular_trig_design(16, 9)) == pytest.approx(0.0, abs=1e-12)

    def test_duplicated_column(self):
        n = 9
        x = np.zeros((n, 2))
        x[0] = math.sqrt(n)
        assert sparse.incoherence(x) == pytest.approx(1.0)

    def test_sign_flip_invariance(self, rng):
        x = rng.standard_normal((30, 5))
        flips = rng.choice([-1.0, 1.0], size=5)
        assert sparse.incoherence(x * flips) == pytest.approx(sparse.incoherence(x))


class TestCone:
    def test_cases(self):
        assert sparse.cone_condition_holds(np.zeros(4), [0])
        assert sparse.cone_condition_holds(np.array([1.0, 2, 0, 0]), [0, 1])
        assert not sparse.cone_condition_holds(np.array([0, 0, 1.0, 0]), [0, 1])


class TestRidge:
    def test_shrinkage(self):
        inst = instance(30, 5, 2, 1.0, 14)
        tau = 1e4
        fit = sparse.ridge(inst, tau)
        assert np.linalg.norm(fit.estimate) <= np.linalg.norm(inst.design.T @ inst.response) / (inst.n * tau)

    def test_scaled_identity(self, rng):
        n, tau = 6, 0.5
        x = math.sqrt(n) * np.eye(n)
        y = rng.standard_normal(n)
        seq = x.T @ y / n
        np.testing.assert_allclose(sparse.ridge(RegressionInstance(x, y), tau).estimate, seq / (1 + tau))

    def test_unique_rank_deficient(self, rng):
        x = rng.standard_normal((5, 8))
        y = rng.standard_normal(5)
        a = sparse.ridge(RegressionInstance(x, y), 0.3).estimate
        b = sparse.ridge(RegressionInstance(x.copy(), y.copy()), 0.3).estimate
        np.testing.assert_allclose(a, b)
        # stationarity of the strictly convex objective
        grad = x.T @ (x @ a - y) / 5 + 0.3 * a
        np.testing.assert_allclose(grad, 0, atol=1e-10)


class TestMaurey:
    def test_one_sparse(self, source):
        theta = np.array([0, 0, -2.0, 0])
        out = sparse.maurey_sparsify(theta, 1, 1.0, source)
        np.testing.assert_allclose(out, theta)

    def test_sparsity(self, rng):
        theta = rng.standard_normal(30)
        for k in (1, 3, 7):
            assert np.count_nonzero(sparse.maurey_sparsify(theta, k, 1.0, rng)) <= k

    def test_expected_excess(self):
        n, d, k = 32, 15, 4
        x = regular_trig_design(n, d)
        g = RandomSource(0).generator()
        theta = g.standard_normal(d) / d
        f = x @ theta + 0.3 * g.standard_normal(n)
        base = np.sum((f - x @ theta) ** 2) / n
        # columns of the regular design have norm sqrt(n): D = 1
        losses = np.array([np.sum((f - x @ sparse.maurey_sparsify(theta, k, 1.0, RandomSource(s))) ** 2) / n
                           for s in range(1000)])
        se = losses.std(ddof=1) / math.sqrt(losses.size)
        assert losses.mean() <= base + sparse.maurey_excess_bound(theta, k, 1.0) + 3 * se


class TestTuning:
    def test_rejects_bad_delta(self):
        with pytest.raises(InvalidInput):
            sparse.TuningParameters(0.1, 1.5, 1.0)

    def test_orthogonal_threshold_doubles_hard(self):
        a = sparse.TuningParameters.hard_threshold(1.0, 100, 50)
        b = sparse.TuningParameters.orthogonal_threshold(1.0, 100, 50)
        assert b.tau == pytest.approx(2 * a.tau)
        assert b.provenance == "orthogonal_threshold"
