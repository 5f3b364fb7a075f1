"""
Tests of the z-scores, the covariance plug-in, the Bonferroni verdict and
the whole detection run.
"""

import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from confoundverse import exceptions as ex
from confoundverse import datagen
from confoundverse.kernel_core import DesignMatrix, KernelSpec, basis_kernel, weighted_basis
from confoundverse.estimator import RidgeConfig, fit_hkls, fit_kls, residual_variance
from confoundverse.confounder_testing import (
    ObservedData,
    Verdict,
    bonferroni_score_threshold,
    bonferroni_verdict,
    covariance_matrix,
    detect,
    difference_operator,
    normal_two_sided_p,
    z_and_p,
)


def _unit_norm_sample(seed=0, N=50, d=3):
    rows = np.random.default_rng(seed).normal(size=(N, d + 1))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return ObservedData(X=rows[:, 1:], T=rows[:, 0], Y=np.random.default_rng(seed + 1).normal(size=N))


class TestDifferenceOperator(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(11)
        self.Z = DesignMatrix(rng.uniform(-1.0, 1.0, size=(30, 3)))
        self.K = basis_kernel(KernelSpec('gaussian', bandwidth=1.0), self.Z, 4)
        self.K_psi = weighted_basis(self.K, self.Z)
        self.lam = 0.1

    def test_applied_to_y_gives_delta(self):
        """
        V0 Y equals fit_hkls - fit_kls for any outcome vector.
        """
        V0 = difference_operator(self.K, self.K_psi, self.lam)
        rng = np.random.default_rng(12)
        for _ in range(20):
            Y = rng.normal(size=30)
            delta = fit_hkls(self.K, self.K_psi, Y, self.lam) - fit_kls(self.K, Y, self.lam)
            assert_allclose(V0 @ Y, delta, rtol=1e-8, atol=1e-9)

    def test_identity_weights_give_zero(self):
        V0 = difference_operator(self.K, self.K.K, self.lam)
        assert_array_equal(V0, np.zeros_like(V0))

    def test_covariance_matches_outer_products(self):
        V0 = difference_operator(self.K, self.K_psi, self.lam)
        explicit = sum(np.outer(V0[:, i], V0[:, i]) for i in range(30)) * 30
        V = covariance_matrix(V0, 30)
        assert_allclose(V, explicit, rtol=1e-12, atol=1e-12 * np.abs(explicit).max())
        assert_array_equal(V, V.T)
        self.assertTrue(np.all(np.linalg.eigvalsh(V) > -1e-12 * np.abs(V).max()))


class TestRankDeficientBasis(unittest.TestCase):

    def test_duplicated_rows_keep_the_z_scores(self):
        """
        Stacking K on itself at lambda gives the z-scores of K at lambda / 2,
        once per copy.
        """
        rng = np.random.default_rng(31)
        Z = DesignMatrix(rng.uniform(-1.0, 1.0, size=(60, 3)))
        K = basis_kernel(KernelSpec('gaussian', bandwidth=1.0), Z, 5)
        K_psi = weighted_basis(K, Z)
        Y = rng.normal(size=60)
        K2 = np.vstack([K.K, K.K])
        K_psi2 = np.vstack([K_psi.K_psi, K_psi.K_psi])

        def z_scores(K, K_psi, lam):
            alpha_kls = fit_kls(K, Y, lam)
            delta = fit_hkls(K, K_psi, Y, lam) - alpha_kls
            V = covariance_matrix(difference_operator(K, K_psi, lam), 60)
            z, _, degenerate = z_and_p(delta, residual_variance(K, alpha_kls, Y), V, 60)
            self.assertFalse(degenerate.any())
            return z

        single = z_scores(K, K_psi, 1e-12)
        assert_allclose(z_scores(K2, K_psi2, 2e-12), np.concatenate([single, single]),
                        rtol=1e-6, atol=1e-6)

    def test_tiny_lambda_on_polynomial_basis(self):
        """
        P = 40 rows of the degree-2 polynomial kernel span only 15 features;
        at lambda = 1e-12 the scores stay on the normal scale without confounding.
        """
        dataset = datagen.generate(datagen.ScenarioConfig(rho=0.0, N=1000, seed=0))
        result = detect(dataset, RidgeConfig(P=40, lam=1e-12))
        self.assertTrue(np.all(np.isfinite(result.z_scores)))
        self.assertLess(result.score, 10.0)


class TestZAndP(unittest.TestCase):

    def test_known_values(self):
        """
        delta = 1, sigma^2 = 1, V = 1, N = 4 gives z = 2 and p = 2 (1 - Phi(2)).
        """
        z, p, degenerate = z_and_p([1.0], 1.0, np.array([[1.0]]), 4)
        assert_allclose(z, [2.0])
        assert_allclose(p, [2.0 * stats.norm.sf(2.0)], rtol=1e-12)
        assert_array_equal(degenerate, [False])

    def test_zero_variance_is_degenerate(self):
        z, p, degenerate = z_and_p([0.5, 1.0], 1.0, np.diag([0.0, 1.0]), 9)
        assert_array_equal(degenerate, [True, False])
        self.assertEqual(z[0], 0.0)
        self.assertEqual(p[0], 1.0)
        assert_allclose(z[1], 3.0)

    def test_p_value_floor(self):
        self.assertEqual(normal_two_sided_p(40.0), 1e-300)
        self.assertEqual(normal_two_sided_p(0.0), 1.0)

    def test_p_values_in_unit_interval(self):
        z = np.linspace(-10, 10, 41)
        p = normal_two_sided_p(z)
        self.assertTrue(np.all((p > 0) & (p <= 1)))
        assert_allclose(p, normal_two_sided_p(-z))


class TestBonferroni(unittest.TestCase):

    def test_reject_below_corrected_level(self):
        rejected, verdict = bonferroni_verdict([0.01, 0.5], 0.05)
        assert_array_equal(rejected, [True, False])
        self.assertEqual(verdict, Verdict.REJECT_NULL)

    def test_support_above_corrected_level(self):
        """
        0.03 is below alpha but above alpha / P.
        """
        rejected, verdict = bonferroni_verdict([0.03, 0.5], 0.05)
        assert_array_equal(rejected, [False, False])
        self.assertEqual(verdict, Verdict.SUPPORT_NULL)

    def test_alpha_range(self):
        for alpha in (0.0, 1.0, -0.1):
            with self.assertRaises(ex.ErrorOutOfRange):
                bonferroni_verdict([0.5], alpha)

    def test_score_threshold(self):
        """
        |z| above the threshold is exactly p below alpha / P.
        """
        threshold = bonferroni_score_threshold(0.05, 40)
        assert_allclose(normal_two_sided_p(threshold), 0.05 / 40, rtol=1e-10)
        self.assertEqual(str(Verdict.REJECT_NULL.value), 'reject_null')


class TestDetect(unittest.TestCase):

    def setUp(self):
        self.dataset = datagen.generate(datagen.ScenarioConfig(rho=0.0, N=200, seed=3))
        self.config = RidgeConfig(P=20)

    def test_result_is_consistent(self):
        result = detect(self.dataset, self.config)

        self.assertEqual(result.P, 20)
        self.assertEqual(result.N, 200)
        self.assertTrue(np.all((result.p_values >= 1e-300) & (result.p_values <= 1.0)))
        assert_array_equal(result.rejected_coords, result.p_values < 0.05 / 20)
        self.assertEqual(result.rejected, bool(result.rejected_coords.any()))
        self.assertGreaterEqual(result.score, 0.0)
        self.assertGreater(result.sigma_sq, 0.0)
        self.assertEqual(result.kernel['family'], 'polynomial')

    def test_deterministic(self):
        first = detect(self.dataset, self.config)
        second = detect(self.dataset, self.config)
        assert_array_equal(first.z_scores, second.z_scores)
        self.assertEqual(first.verdict, second.verdict)

    def test_to_dict(self):
        document = detect(self.dataset, self.config).to_dict()
        for key in ('verdict', 'alpha_level', 'P', 'N', 'lambda', 'kernel', 'z_scores',
                    'p_values', 'rejected', 'degenerate', 'sigma_sq', 'wall_time_ms'):
            self.assertIn(key, document)
        self.assertEqual(len(document['z_scores']), 20)

    def test_unit_norm_rows_support_null(self):
        """
        With ||Z_i|| = 1 both estimators coincide: every coordinate is
        degenerate and the null is supported.
        """
        config = RidgeConfig(P=10, lam=1.0, kernel=KernelSpec('gaussian', bandwidth=1.0))
        result = detect(_unit_norm_sample(), config)
        self.assertTrue(result.degenerate_coords.all())
        self.assertEqual(result.verdict, Verdict.SUPPORT_NULL)
        self.assertEqual(result.score, 0.0)
        self.assertLess(np.abs(result.coefficients.delta).max(), 1e-10)
        assert_array_equal(result.p_values, np.ones(10))

    def test_outcome_scale_invariance(self):
        config = RidgeConfig(P=10, lam=1.0)
        for seed in range(10):
            data = datagen.generate(datagen.ScenarioConfig(rho=1.0, N=100, seed=seed))
            scaled = ObservedData(X=data.X, T=data.T, Y=10.0 * data.Y)
            first, second = detect(data, config), detect(scaled, config)
            assert_array_equal(first.degenerate_coords, second.degenerate_coords)
            assert_allclose(second.z_scores, first.z_scores, rtol=1e-8, atol=1e-8)

    def test_basis_size(self):
        with self.assertRaises(ex.ErrorBasisSize):
            detect(self.dataset, RidgeConfig(P=200))

    def test_non_finite_input(self):
        Y = self.dataset.Y.copy()
        Y[0] = np.nan
        with self.assertRaises(ex.ErrorNonFinite):
            detect(ObservedData(X=self.dataset.X, T=self.dataset.T, Y=Y), self.config)

    def test_row_counts(self):
        with self.assertRaises(ex.ErrorRowCount):
            detect(ObservedData(X=self.dataset.X[:-1], T=self.dataset.T, Y=self.dataset.Y),
                   self.config)

    def test_env_covariate(self):
        data = ObservedData(X=np.ones((4, 2)), T=np.zeros(4), Y=np.zeros(4),
                            env_labels=np.array([0, 1, 0, 1]))
        self.assertEqual(data.with_env_covariate().X.shape, (4, 3))
        with self.assertRaises(ex.ErrorMissingColumns):
            ObservedData(X=np.ones((4, 2)), T=np.zeros(4), Y=np.zeros(4)).with_env_covariate()
