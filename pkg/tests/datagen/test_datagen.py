"""
Tests of the synthetic scenarios.
"""

import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from confoundverse import exceptions as ex
from confoundverse.datagen import (
    BINARY,
    MULTI_ENV,
    SINGLE_ENV,
    ScenarioConfig,
    gen_binary_synthetic,
    gen_multi_env,
    gen_single_env,
    generate,
    normalize_covariates,
    structural_residuals,
)


class TestScenarioConfig(unittest.TestCase):

    def test_aliases(self):
        self.assertEqual(ScenarioConfig('single_env').scenario, SINGLE_ENV)
        self.assertEqual(ScenarioConfig('multi_env').scenario, MULTI_ENV)
        self.assertEqual(ScenarioConfig('binary', d_x=1, d_u=1).scenario, BINARY)

    def test_validation(self):
        with self.assertRaises(ex.ErrorOutOfRange):
            ScenarioConfig(rho=-0.5)
        with self.assertRaises(ex.ErrorNotPositive):
            ScenarioConfig(noise_half_width=0.0)
        with self.assertRaises(ex.ErrorInvalidOption):
            ScenarioConfig('quadratic')
        with self.assertRaises(ex.ErrorInvalidOption):
            ScenarioConfig('binary', d_x=3, d_u=1)

    def test_environment_count(self):
        with self.assertRaises(ex.ErrorEnvironments):
            ScenarioConfig('multi_env', n_envs=1)
        with self.assertRaises(ex.ErrorEnvironments):
            ScenarioConfig('multi_env', N=5, n_envs=6)
        ScenarioConfig('multi_env', N=5, n_envs=5)


class TestNormalizeCovariates(unittest.TestCase):

    def test_range_and_mean(self):
        M = np.random.default_rng(0).uniform(2.0, 9.0, size=(100, 3))
        out = normalize_covariates(M)
        assert_allclose(out.mean(axis=0), np.zeros(3), atol=1e-15)
        assert_allclose(out.max(axis=0) - out.min(axis=0), np.ones(3), rtol=1e-14)

    def test_constant_column(self):
        M = np.column_stack([np.full(10, 4.0), np.arange(10.0)])
        assert_array_equal(normalize_covariates(M)[:, 0], np.zeros(10))


class TestSingleEnv(unittest.TestCase):

    def test_shapes_and_determinism(self):
        config = ScenarioConfig(rho=1.0, N=100, seed=1)
        first, second = generate(config), generate(config)
        self.assertEqual(first.X.shape, (100, 3))
        self.assertEqual(first.U.shape, (100, 3))
        assert_array_equal(first.T, second.T)
        assert_array_equal(first.Y, second.Y)
        self.assertTrue(first.truth)

    def test_seeds_differ(self):
        a = generate(ScenarioConfig(N=50, seed=1))
        b = generate(ScenarioConfig(N=50, seed=2))
        self.assertFalse(np.array_equal(a.T, b.T))

    def test_residuals_within_noise(self):
        """
        T and Y minus their structural parts recover the uniform noise.
        """
        dataset = generate(ScenarioConfig(rho=2.0, N=1000, seed=4))
        for residual in structural_residuals(dataset):
            self.assertLessEqual(np.abs(residual).max(), 0.1 + 1e-12)

    def test_rho_zero_ignores_hidden(self):
        """
        With rho = 0 the draws of X and the noise are unchanged by U, so T
        equals the rho = 0 structure exactly.
        """
        dataset = generate(ScenarioConfig(rho=0.0, N=200, seed=5))
        t_residual, _ = structural_residuals(dataset)
        assert_allclose(dataset.T, (dataset.X ** 2).sum(axis=1) + t_residual, atol=1e-12)

    def test_rho_shares_covariates_and_noise(self):
        """
        The same seed at two strengths keeps X and U; only the hidden term changes.
        """
        low = generate(ScenarioConfig(rho=0.0, N=100, seed=6))
        high = generate(ScenarioConfig(rho=1.0, N=100, seed=6))
        assert_array_equal(low.X, high.X)
        assert_array_equal(low.U, high.U)
        assert_allclose(high.T - low.T, (high.U ** 2).sum(axis=1), atol=1e-12)

    def test_wrong_scenario(self):
        with self.assertRaises(ex.ErrorInvalidOption):
            gen_single_env(ScenarioConfig('multi_env'))


class TestMultiEnv(unittest.TestCase):

    def test_environments_round_robin(self):
        dataset = gen_multi_env(ScenarioConfig('multi_env', N=10, n_envs=3, seed=2))
        assert_array_equal(dataset.env_labels, np.arange(10) % 3)
        self.assertEqual(dataset.env_weights['w_T_x'].shape, (3, 3))
        self.assertTrue(np.all((dataset.env_weights['w_Y_T'] >= 1) & (dataset.env_weights['w_Y_T'] <= 2)))

    def test_weights_reproduce_and_differ_between_environments(self):
        config = ScenarioConfig('multi_env', rho=1.0, N=40, n_envs=2, seed=9)
        first, second = generate(config), generate(config)
        for name, weights in first.env_weights.items():
            assert_array_equal(weights, second.env_weights[name])
            self.assertFalse(np.array_equal(weights[0], weights[1]), name)

    def test_residuals_within_noise(self):
        dataset = generate(ScenarioConfig('multi_env', rho=1.0, N=500, n_envs=4, seed=3))
        for residual in structural_residuals(dataset):
            self.assertLessEqual(np.abs(residual).max(), 0.1 + 1e-9)

    def test_env_covariate(self):
        dataset = generate(ScenarioConfig('multi_env', N=20, seed=1))
        extended = dataset.with_env_covariate()
        self.assertEqual(extended.X.shape, (20, 4))
        assert_array_equal(extended.X[:, -1], dataset.env_labels)

    def test_hidden_drives_treatment(self):
        """
        With rho = 1 the treatment correlates with the hidden term.
        """
        dataset = generate(ScenarioConfig('multi_env', rho=1.0, N=10000, seed=0))
        hidden = ((3.0 * dataset.U) ** 2).sum(axis=1)
        self.assertGreater(np.corrcoef(dataset.T, hidden)[0, 1], 0.1)


class TestBinary(unittest.TestCase):

    def test_binary_outputs(self):
        dataset = gen_binary_synthetic(ScenarioConfig('binary', rho=0.5, N=300, d_x=1, d_u=1, seed=1))
        self.assertTrue(set(np.unique(dataset.T)) <= {0.0, 1.0})
        self.assertTrue(set(np.unique(dataset.Y)) <= {0.0, 1.0})
        assert_array_equal(dataset.T, (dataset.T_latent > 1.0).astype(float))
        for residual in structural_residuals(dataset):
            self.assertLessEqual(np.abs(residual).max(), 0.1 + 1e-12)

    def test_treatment_rate_without_confounding(self):
        """
        With rho = 0, P(T = 1) = P(X^2 + e > 1), which numeric integration puts near 0.025.
        """
        dataset = generate(ScenarioConfig('binary', rho=0.0, N=100000, d_x=1, d_u=1, seed=3))
        x = np.linspace(0.0, 1.0, 2001)
        e = np.linspace(-0.1, 0.1, 2001)
        expected = np.mean(x[:, None] ** 2 + e[None, :] > 1.0)
        self.assertLess(abs(dataset.T.mean() - expected), 0.01)
