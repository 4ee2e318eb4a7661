"""
Tests for the penalized logistic fit, its cross-validation and the unpenalized refit.
"""
import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import optimize

from core.exceptions import DomainError
from core.numerics import RngStream
from core.types import validate_dataset
from estimation.logistic_lasso import (
    LassoOptions, cross_validate_lambda, fit_cv_lasso, fit_lasso_path, fit_logistic_lasso, fit_logistic_mle,
    gradient, kkt_residual, lambda_grid, lambda_max, logit, neg_log_likelihood, sigmoid,
)
from tests.base_test import BaseTestCase


class TestLikelihood:
    """Sigmoid, likelihood and gradient."""

    def test_sigmoid_values(self):
        assert sigmoid(0.0) == 0.5
        assert sigmoid(1.0) == pytest.approx(0.7310585786, abs=1e-10)
        assert 0.0 < sigmoid(-40.0) < 1e-17
        assert sigmoid(40.0) <= 1.0

    def test_logit_inverts_sigmoid(self):
        for z in (-5.0, -0.3, 0.0, 2.0):
            assert logit(sigmoid(z)) == pytest.approx(z, abs=1e-12)

    def test_null_likelihood_is_log_two(self):
        data = validate_dataset(np.array([[1.0], [-2.0], [0.5]]), [1, 0, 1])
        assert neg_log_likelihood(np.zeros(1), data) == pytest.approx(math.log(2.0), abs=1e-15)

    def test_likelihood_stable_for_large_predictor(self):
        data = validate_dataset(np.array([[10.0], [10.0]]), [1, 1])
        assert neg_log_likelihood(np.ones(1), data) == pytest.approx(4.5398899e-5, rel=1e-6)

    def test_gradient_matches_finite_differences(self, sparse_design):
        data = sparse_design['data']
        rng = np.random.default_rng(3)
        beta = 0.1 * rng.standard_normal(data.p)
        h = 1e-5
        numeric = np.empty(data.p)
        for j in range(data.p):
            e = np.zeros(data.p)
            e[j] = h
            numeric[j] = (neg_log_likelihood(beta + e, data) - neg_log_likelihood(beta - e, data)) / (2 * h)
        np.testing.assert_allclose(gradient(beta, data), numeric, rtol=1e-6, atol=1e-9)


class TestLogisticLasso:
    """Penalized fit."""

    def test_kkt_at_solution(self, sparse_design):
        data = sparse_design['data']
        model = fit_logistic_lasso(data, 0.05)
        assert model.converged
        assert model.kkt_residual <= 1e-6
        assert kkt_residual(data, model.beta_hat, 0.05) <= 1e-6
        # intercept is never penalized by default
        assert abs(gradient(model.beta_hat, data)[0]) <= 1e-6
        assert not model.penalize_intercept

    def test_lambda_max_gives_null_model(self, sparse_design):
        data = sparse_design['data']
        lam = lambda_max(data)
        model = fit_logistic_lasso(data, lam)
        assert np.all(model.beta_hat[1:] == 0.0)
        assert model.beta_hat[0] == pytest.approx(logit(float(data.y.mean())), abs=1e-10)
        below = fit_logistic_lasso(data, 0.9 * lam)
        assert np.count_nonzero(below.beta_hat[1:]) >= 1

    def test_warm_start_at_solution_is_fixed_point(self, sparse_design):
        data = sparse_design['data']
        model = fit_logistic_lasso(data, 0.04)
        again = fit_logistic_lasso(data, 0.04, opts=LassoOptions(warm_start=model.beta_hat))
        assert again.iterations == 0
        np.testing.assert_array_equal(again.beta_hat, model.beta_hat)

    def test_objective_trace_non_increasing(self, sparse_design):
        model = fit_logistic_lasso(sparse_design['data'], 0.02)
        trace = np.asarray(model.objective_trace)
        assert trace.size >= 2
        assert np.all(np.diff(trace) <= 0.0)
        assert trace[-1] == model.objective_value

    def test_matches_brute_force_in_two_dimensions(self):
        rng = np.random.default_rng(11)
        n = 200
        feature = rng.standard_normal(n)
        y = (rng.random(n) < sigmoid(0.3 + 0.8 * feature)).astype(float)
        data = validate_dataset(np.column_stack([np.ones(n), feature]), y, has_intercept_column=True)
        lam = 0.05

        def profile(b1):
            inner = optimize.minimize_scalar(
                lambda b0: neg_log_likelihood(np.array([b0, b1]), data), bounds=(-5, 5), method='bounded',
                options={'xatol': 1e-11},
            )
            return inner.fun + lam * abs(b1)

        outer = optimize.minimize_scalar(profile, bounds=(-3, 3), method='bounded', options={'xatol': 1e-10})
        model = fit_logistic_lasso(data, lam)
        assert model.beta_hat[1] == pytest.approx(outer.x, abs=1e-4)
        assert model.objective_value == pytest.approx(outer.fun, abs=1e-8)

    def test_iteration_cap_reports_non_convergence(self, sparse_design):
        model = fit_logistic_lasso(sparse_design['data'], 0.01, opts=LassoOptions(max_iter=3))
        assert not model.converged
        assert model.kkt_residual > 1e-7

    def test_penalized_intercept_option(self, sparse_design):
        data = sparse_design['data']
        lam = lambda_max(data, penalize_intercept=True)
        model = fit_logistic_lasso(data, 1.01 * lam, penalize_intercept=True)
        assert model.penalize_intercept
        assert np.all(model.beta_hat == 0.0)

    def test_standardized_fit_converges(self, sparse_design):
        model = fit_logistic_lasso(sparse_design['data'], 0.05, opts=LassoOptions(standardize=True))
        assert model.converged
        assert np.count_nonzero(model.beta_hat) >= 1

    @pytest.mark.parametrize("lam", [0.0, -1.0, float('inf'), float('nan')])
    def test_invalid_lambda(self, sparse_design, lam):
        with pytest.raises(DomainError):
            fit_logistic_lasso(sparse_design['data'], lam)


class TestPathAndCrossValidation:
    """Penalty grid, path and cross-validation."""

    def test_grid_endpoints_and_ratio(self):
        grid = lambda_grid(2.0, 50, 0.01)
        assert grid[0] == 2.0
        assert grid[-1] == 0.02
        ratios = grid[1:] / grid[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)

    def test_path_supports_grow(self, sparse_design):
        data = sparse_design['data']
        grid = lambda_grid(lambda_max(data), 8, 0.05)
        path = fit_lasso_path(data, grid)
        counts = [np.count_nonzero(m.beta_hat[1:]) for m in path]
        assert counts[0] == 0
        assert counts[-1] >= counts[len(counts) // 2]
        assert all(m.converged for m in path)

    def test_cv_is_deterministic(self, sparse_design):
        data = sparse_design['data']
        first = cross_validate_lambda(data, n_folds=5, grid_size=12, stream=RngStream(7, 0))
        second = cross_validate_lambda(data, n_folds=5, grid_size=12, stream=RngStream(7, 0))
        np.testing.assert_array_equal(first.cv_deviance, second.cv_deviance)
        assert first.lambda_min == second.lambda_min
        assert first.lambda_grid[0] == lambda_max(data)
        assert first.lambda_grid[-1] == pytest.approx(0.01 * lambda_max(data), rel=1e-15)
        assert first.lambda_1se >= first.lambda_min
        assert first.selected('1se') == first.lambda_1se

    def test_pure_noise_prefers_large_penalty(self):
        rng = np.random.default_rng(2)
        n, p = 200, 30
        x = np.column_stack([np.ones(n), rng.standard_normal((n, p - 1))])
        y = (rng.random(n) < 0.5).astype(float)
        data = validate_dataset(x, y, has_intercept_column=True)
        cv = cross_validate_lambda(data, n_folds=5, grid_size=20, stream=RngStream(1, 0))
        assert cv.lambda_1se >= cv.lambda_grid[4]

    def test_fit_cv_lasso_uses_selected_penalty(self, sparse_design):
        model, cv = fit_cv_lasso(sparse_design['data'], RngStream(3, 0), rule='1se', n_folds=4, grid_size=10)
        assert model.lambda_ == cv.lambda_1se

    def test_cv_argument_checks(self, sparse_design):
        with pytest.raises(DomainError):
            cross_validate_lambda(sparse_design['data'], n_folds=1)
        tiny = validate_dataset(np.ones((3, 1)) * [[1.0], [2.0], [3.0]], [0, 1, 1])
        with pytest.raises(DomainError):
            cross_validate_lambda(tiny, n_folds=4)
        cv = cross_validate_lambda(sparse_design['data'], n_folds=3, grid_size=3, stream=RngStream(1, 0))
        with pytest.raises(DomainError):
            cv.selected('median')

    def test_constant_outcome_named_in_error(self):
        rng = np.random.default_rng(8)
        x = np.column_stack([np.ones(40), rng.standard_normal((40, 3))])
        data = validate_dataset(x, np.ones(40), has_intercept_column=True)
        assert lambda_max(data) == 0.0
        with pytest.raises(DomainError, match="constant"):
            cross_validate_lambda(data, n_folds=4, stream=RngStream(1, 0))
        with pytest.raises(DomainError, match="constant"):
            fit_cv_lasso(data, RngStream(1, 0), n_folds=4)


class TestLogisticMle(BaseTestCase):
    """Unpenalized refit."""

    def test_intercept_only_balanced(self):
        data = validate_dataset(np.ones((4, 1)), [0, 1, 0, 1], has_intercept_column=True)
        fit = fit_logistic_mle(data)
        self.assertTrue(fit.converged)
        self.assertFalse(fit.separation_detected)
        self.assertAlmostEqual(fit.coefficients[0], 0.0, places=12)
        # (X'WX)^-1 = 1 / (4 * 0.25)
        self.assertAlmostEqual(fit.covariance[0, 0], 1.0, places=12)

    def test_matches_general_optimizer(self):
        test_data = self.create_test_data("dataset", n=300, p=4)
        data = test_data['data']
        fit = fit_logistic_mle(data)
        self.assertTrue(fit.converged)
        ref = optimize.minimize(
            neg_log_likelihood, np.zeros(data.p), args=(data,), jac=gradient, method='BFGS',
            options={'gtol': 1e-11},
        )
        self.assert_allclose(fit.coefficients, ref.x, atol=1e-5)

    def test_separation_detected(self):
        data = validate_dataset(np.array([[-2.0], [-1.0], [1.0], [2.0]]), [0, 0, 1, 1])
        fit = fit_logistic_mle(data)
        self.assertTrue(fit.separation_detected)
        self.assertFalse(fit.converged)

    def test_too_many_columns(self):
        data = validate_dataset(np.eye(3), [0, 1, 0])
        with self.assertRaises(DomainError):
            fit_logistic_mle(data)

    def test_no_columns_gives_empty_fit(self):
        rng = np.random.default_rng(5)
        data = validate_dataset(rng.standard_normal((30, 3)), (rng.random(30) < 0.5).astype(float))
        fit = fit_logistic_mle(data.subset_columns([]))
        self.assertTrue(fit.converged)
        self.assertEqual(fit.coefficients.shape, (0,))
        self.assertEqual(fit.covariance.shape, (0, 0))
